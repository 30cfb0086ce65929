//! The spatial Kendall's tau matrix.
//!
//! For observations `y_1..y_n` the sample matrix is the U-statistic
//!
//! ```text
//! K = 1/N * sum_{t<s} (y_t - y_s)(y_t - y_s)' / |y_t - y_s|^2
//! ```
//!
//! over the `N` non-degenerate pairs. Each summand is a unit-trace rank-one
//! projector, so `K` is PSD with trace one and is unchanged by shifting,
//! positively rescaling or permuting the observations. For an elliptical law
//! it shares eigenvectors and eigenvalue ordering with the scatter matrix.

use ndarray::{Array1, Array2, ArrayView2};
use rand_distr::{Distribution, StandardNormal};

use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::factor::DataPanel;
use crate::linalg::{sym_eig, SymMatrix};
use crate::par;

/// Target number of pairs per accumulation block. Block boundaries depend only
/// on `n`, never on the number of workers.
const BLOCK_PAIRS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct KendallMatrix {
    pub matrix: SymMatrix,
    pub pairs_used: usize,
    /// Pairs with `y_t == y_s` exactly; they carry no direction and are left out.
    pub pairs_skipped: usize,
}

impl KendallMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

struct BlockSum {
    gram: Array2<f64>,
    used: usize,
    skipped: usize,
}

/// Sample spatial Kendall's tau matrix of the panel rows.
pub fn sample_kendall_tau(panel: &DataPanel) -> Result<KendallMatrix> {
    let y = panel.view();
    let n = panel.n();
    if n < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    let blocks = partition_anchors(n);
    let sums = par::map_ordered(blocks, |(start, end)| block_sum(y, start, end));
    let total = reduce_pairwise(sums);
    if total.used == 0 {
        return Err(Error::DegeneratePanel);
    }
    let matrix = SymMatrix::from_upper(total.gram / total.used as f64);
    Ok(KendallMatrix { matrix, pairs_used: total.used, pairs_skipped: total.skipped })
}

/// Kendall's tau estimated from the disjoint pairs (row 0, row 1),
/// (row 2, row 3), ... . An incomplete U-statistic: linear in `n`, so it scales
/// to Monte Carlo sizes where the full pair set is out of reach.
pub fn disjoint_pair_kendall(panel: &DataPanel) -> Result<KendallMatrix> {
    let y = panel.view();
    let p = panel.p();
    let n_pairs = panel.n() / 2;
    let mut gram = Array2::<f64>::zeros((p, p));
    let mut used = 0;
    let mut first = 0;
    while first < n_pairs {
        let last = (first + BLOCK_PAIRS).min(n_pairs);
        let mut diffs = Array2::<f64>::zeros((last - first, p));
        let mut rows = 0;
        for k in first..last {
            if normalized_difference(y, 2 * k, 2 * k + 1, diffs.row_mut(rows).as_slice_mut().unwrap()) {
                rows += 1;
            }
        }
        used += rows;
        let d = diffs.slice(ndarray::s![..rows, ..]);
        gram += &d.t().dot(&d);
        first = last;
    }
    if used == 0 {
        return Err(Error::DegeneratePanel);
    }
    Ok(KendallMatrix {
        matrix: SymMatrix::from_upper(gram / used as f64),
        pairs_used: used,
        pairs_skipped: n_pairs - used,
    })
}

// Splits anchor rows 0..n-1 into contiguous ranges holding roughly
// BLOCK_PAIRS pairs each; anchor t owns the pairs (t, s) with s > t.
fn partition_anchors(n: usize) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut count = 0;
    for t in 0..n - 1 {
        count += n - 1 - t;
        if count >= BLOCK_PAIRS {
            blocks.push((start, t + 1));
            start = t + 1;
            count = 0;
        }
    }
    if start < n - 1 {
        blocks.push((start, n - 1));
    }
    blocks
}

// Writes (y_a - y_b)/|y_a - y_b| into `out`; false if the rows coincide.
fn normalized_difference(y: ArrayView2<'_, f64>, a: usize, b: usize, out: &mut [f64]) -> bool {
    let mut sq = 0.0;
    for ((o, ya), yb) in out.iter_mut().zip(y.row(a)).zip(y.row(b)) {
        *o = ya - yb;
        sq += *o * *o;
    }
    if sq == 0.0 {
        return false;
    }
    let inv = 1.0 / sq.sqrt();
    out.iter_mut().for_each(|o| *o *= inv);
    true
}

fn block_sum(y: ArrayView2<'_, f64>, start: usize, end: usize) -> BlockSum {
    let (n, p) = y.dim();
    let pairs: usize = (start..end).map(|t| n - 1 - t).sum();
    let mut diffs = Array2::<f64>::zeros((pairs, p));
    let mut rows = 0;
    let mut skipped = 0;
    for t in start..end {
        for s in (t + 1)..n {
            let mut row = diffs.row_mut(rows);
            if normalized_difference(y, t, s, row.as_slice_mut().unwrap()) {
                rows += 1;
            } else {
                skipped += 1;
            }
        }
    }
    let d = diffs.slice(ndarray::s![..rows, ..]);
    BlockSum { gram: d.t().dot(&d), used: rows, skipped }
}

// Fixed-shape pairwise reduction: the tree depends only on the block count.
fn reduce_pairwise(mut sums: Vec<BlockSum>) -> BlockSum {
    while sums.len() > 1 {
        let mut next = Vec::with_capacity(sums.len().div_ceil(2));
        let mut it = sums.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.gram += &b.gram;
                a.used += b.used;
                a.skipped += b.skipped;
            }
            next.push(a);
        }
        sums = next;
    }
    sums.pop().expect("at least one block")
}

/// Monte Carlo estimate of the eigenvalues of the population Kendall's tau
/// matrix for an elliptical law with scatter `sigma`, using
/// `λ_j(K) = E[λ_j g_j² / Σ_i λ_i g_i²]` with `g` standard Gaussian on the
/// rank-q support. Returns `(estimates, standard_errors)` in the descending
/// eigenvalue order of `sigma`; directions outside the support get zero.
pub fn population_kendall_eigs_mc(
    sigma: &SymMatrix,
    draws: usize,
    seed: u64,
) -> Result<(Array1<f64>, Array1<f64>)> {
    if draws < 1000 {
        return Err(Error::invalid(format!("need at least 1000 draws, got {draws}")));
    }
    let eig = sym_eig(sigma)?;
    let dim = sigma.dim();
    let min = eig.values[dim - 1];
    if min < -1e-8 {
        return Err(Error::invalid(format!("scatter matrix has negative eigenvalue {min:e}")));
    }
    let top = eig.values[0];
    if top <= 0.0 {
        return Err(Error::invalid("scatter matrix has no positive eigenvalue"));
    }
    let support: Vec<f64> = eig.values.iter().copied().take_while(|&l| l > 1e-12 * top).collect();
    let q = support.len();

    let mut rng = RngStream::new(seed, 0).into_rng();
    let mut mean = vec![0.0; q];
    let mut m2 = vec![0.0; q];
    let mut terms = vec![0.0; q];
    for k in 0..draws {
        let mut denom = 0.0;
        for (term, lambda) in terms.iter_mut().zip(&support) {
            let g: f64 = StandardNormal.sample(&mut rng);
            *term = lambda * g * g;
            denom += *term;
        }
        let count = (k + 1) as f64;
        for j in 0..q {
            let x = terms[j] / denom;
            let delta = x - mean[j];
            mean[j] += delta / count;
            m2[j] += delta * (x - mean[j]);
        }
    }
    let mut est = Array1::zeros(dim);
    let mut se = Array1::zeros(dim);
    for j in 0..q {
        est[j] = mean[j];
        se[j] = (m2[j] / (draws - 1) as f64).sqrt() / (draws as f64).sqrt();
    }
    Ok((est, se))
}

/// Minimum eigenvalue of the matrix (used for PSD checks).
pub fn min_eigenvalue(k: &KendallMatrix) -> Result<f64> {
    let eig = sym_eig(&k.matrix)?;
    Ok(eig.values[eig.values.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(y: &Array2<f64>) -> Array2<f64> {
        let (n, p) = y.dim();
        let mut k = Array2::zeros((p, p));
        let mut used = 0usize;
        for t in 0..n {
            for s in (t + 1)..n {
                let d = &y.row(t) - &y.row(s);
                let sq = d.dot(&d);
                if sq == 0.0 {
                    continue;
                }
                used += 1;
                for i in 0..p {
                    for j in 0..p {
                        k[[i, j]] += d[i] * d[j] / sq;
                    }
                }
            }
        }
        k / used as f64
    }

    fn panel(a: Array2<f64>) -> DataPanel {
        DataPanel::new(a).unwrap()
    }

    #[test]
    fn single_pair_is_a_unit_projector() {
        let y = array![[1.0, 2.0, -1.0], [0.0, 4.0, 1.0]];
        let k = sample_kendall_tau(&panel(y.clone())).unwrap();
        let d = &y.row(0) - &y.row(1);
        let u = &d / d.dot(&d).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.matrix[[i, j]] - u[i] * u[j]).abs() < 1e-15);
            }
        }
        assert!((k.matrix.trace() - 1.0).abs() < 1e-15);
        assert_eq!((k.pairs_used, k.pairs_skipped), (1, 0));
    }

    #[test]
    fn unit_square_corners() {
        // Pairs: 4 axis-aligned (2 along each axis) and 2 diagonals, whose
        // off-diagonal contributions +1/2 and -1/2 cancel.
        let y = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let k = sample_kendall_tau(&panel(y)).unwrap();
        assert_eq!(k.pairs_used, 6);
        assert!((k.matrix[[0, 0]] - 0.5).abs() < 1e-15);
        assert!((k.matrix[[1, 1]] - 0.5).abs() < 1e-15);
        assert!(k.matrix[[0, 1]].abs() < 1e-15);
    }

    #[test]
    fn identical_rows_are_skipped() {
        let y = array![[1.0, 2.0], [1.0, 2.0], [3.0, -1.0]];
        let k = sample_kendall_tau(&panel(y)).unwrap();
        assert_eq!((k.pairs_used, k.pairs_skipped), (2, 1));
        assert!((k.matrix.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_rows_identical_is_degenerate() {
        let y = Array2::from_elem((5, 3), 2.5);
        assert!(matches!(sample_kendall_tau(&panel(y)), Err(Error::DegeneratePanel)));
    }

    #[test]
    fn matches_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.random_range(2..=10);
            let p = rng.random_range(1..=5);
            let y = Array2::from_shape_fn((n, p), |_| rng.random_range(-3.0..3.0));
            let k = sample_kendall_tau(&panel(y.clone())).unwrap();
            for (a, b) in k.matrix.view().iter().zip(naive(&y).iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn many_blocks_agree_with_naive() {
        // n = 120 gives 7140 pairs, so at least two blocks are reduced.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = Array2::from_shape_fn((120, 4), |_| rng.random_range(-1.0..1.0));
        assert!(partition_anchors(120).len() >= 2);
        let k = sample_kendall_tau(&panel(y.clone())).unwrap();
        for (a, b) in k.matrix.view().iter().zip(naive(&y).iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_covers_every_anchor_once() {
        for n in [2, 3, 10, 91, 92, 300] {
            let blocks = partition_anchors(n);
            let mut next = 0;
            for (s, e) in &blocks {
                assert_eq!(*s, next);
                assert!(e > s);
                next = *e;
            }
            assert_eq!(next, n - 1);
        }
    }

    #[test]
    fn population_identity_is_exchangeable() {
        let (est, se) = population_kendall_eigs_mc(&SymMatrix::identity(4), 20_000, 3).unwrap();
        for j in 0..4 {
            assert!((est[j] - 0.25).abs() < 3.0 * se[j] + 1e-12, "{est} {se}");
        }
        assert!((est.sum() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn population_rank_one() {
        let (est, se) = population_kendall_eigs_mc(&SymMatrix::from_diag(&[5.0, 0.0, 0.0]), 1000, 1).unwrap();
        assert_eq!(est.to_vec(), vec![1.0, 0.0, 0.0]);
        assert_eq!(se.to_vec(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn population_matches_polar_quadrature() {
        // The ratio 4g1²/(4g1²+g2²) depends only on the polar angle of g,
        // which is uniform: integrate over the angle with the midpoint rule.
        let steps = 200_000;
        let oracle = (0..steps)
            .map(|k| {
                let phi = (k as f64 + 0.5) * std::f64::consts::TAU / steps as f64;
                let (s, c) = phi.sin_cos();
                4.0 * c * c / (4.0 * c * c + s * s)
            })
            .sum::<f64>()
            / steps as f64;
        let (est, se) = population_kendall_eigs_mc(&SymMatrix::from_diag(&[4.0, 1.0]), 200_000, 7).unwrap();
        assert!((est[0] - oracle).abs() < 3.0 * se[0], "{} vs {oracle} (se {})", est[0], se[0]);
    }

    #[test]
    fn population_rejects_bad_input() {
        assert!(population_kendall_eigs_mc(&SymMatrix::from_diag(&[1.0, -0.1]), 1000, 0).is_err());
        assert!(population_kendall_eigs_mc(&SymMatrix::identity(2), 999, 0).is_err());
        assert!(population_kendall_eigs_mc(&SymMatrix::from_diag(&[0.0, 0.0]), 1000, 0).is_err());
    }

    #[test]
    fn disjoint_pairs_unit_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = Array2::from_shape_fn((9001, 3), |_| rng.random_range(-1.0..1.0));
        let k = disjoint_pair_kendall(&panel(y)).unwrap();
        assert_eq!(k.pairs_used, 4500);
        assert!((k.matrix.trace() - 1.0).abs() < 1e-10);
    }
}
