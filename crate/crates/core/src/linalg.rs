//! Dense symmetric-matrix numerics: eigendecomposition, orthonormalization
//! and SPD solves.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Maximum QL iterations spent on any single eigenvalue.
pub const MAX_EIG_ITERATIONS: usize = 100;

/// Columns whose residual norm, relative to their original norm, falls below
/// this during orthogonalization are reported as dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Cholesky pivots at or below this value are rejected.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// A dense symmetric matrix. The upper triangle is authoritative; the lower
/// triangle is always an exact mirror of it.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix, checking that `a` is square and symmetric up
    /// to roundoff. The lower triangle is then overwritten by the upper one.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r == 0 || r != c {
            return Err(Error::invalid(format!("expected a non-empty square matrix, got {r}x{c}")));
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..r {
            for j in (i + 1)..r {
                if (a[[i, j]] - a[[j, i]]).abs() > 1e-10 * scale {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self::from_upper(a))
    }

    /// Mirrors the upper triangle of a square matrix without checking the lower one.
    pub fn from_upper(mut a: Array2<f64>) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "SymMatrix::from_upper needs a square matrix");
        for i in 0..n {
            for j in (i + 1)..n {
                a[[j, i]] = a[[i, j]];
            }
        }
        Self { data: a }
    }

    pub fn identity(n: usize) -> Self {
        Self { data: Array2::eye(n) }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self { data: Array2::from_diag(&Array1::from(diag.to_vec())) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { data: &self.data * c }
    }
}

impl std::ops::Index<[usize; 2]> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: [usize; 2]) -> &f64 {
        &self.data[idx]
    }
}

/// Eigenvalues in descending order with their orthonormal eigenvectors stored
/// column-wise. Each eigenvector has its largest-magnitude entry nonnegative
/// (ties go to the lowest index).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl EigenDecomposition {
    /// The first `m` eigenvectors as a `dim x m` matrix.
    pub fn leading(&self, m: usize) -> ArrayView2<'_, f64> {
        self.vectors.slice(ndarray::s![.., ..m])
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.vectors * &self.values.view().insert_axis(Axis(0));
        scaled.dot(&self.vectors.t())
    }
}

/// Symmetric eigendecomposition by Householder tridiagonalization followed by
/// the implicit QL algorithm (EISPACK `tred2`/`tql2`).
pub fn sym_eig(m: &SymMatrix) -> Result<EigenDecomposition> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has a non-finite entry"));
    }
    let n = m.dim();
    let mut v: Vec<f64> = m.data.iter().copied().collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e);
    // Work on the transpose so the QL rotations touch contiguous rows.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            vt[j * n + i] = v[i * n + j];
        }
    }
    tridiagonal_ql(n, &mut vt, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));

    let values = Array1::from_iter(order.iter().map(|&k| d[k]));
    let mut vectors = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        let row = &vt[k * n..(k + 1) * n];
        let mut pivot = 0;
        for (i, x) in row.iter().enumerate() {
            if x.abs() > row[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (i, x) in row.iter().enumerate() {
            vectors[[i, col]] = sign * x;
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

// Householder reduction of a row-major symmetric matrix `v` to tridiagonal
// form. On exit `v` holds the accumulated orthogonal transform, `d` the
// diagonal and `e[1..]` the sub-diagonal.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e). `vt` holds the transposed
// eigenvector matrix: row k is eigenvector k.
fn tridiagonal_ql(n: usize, vt: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_EIG_ITERATIONS {
                    return Err(Error::NumericalFailure(format!(
                        "QL iteration did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[(l + 2)..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = vt.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..];
                    let row_i1 = &mut hi[..n];
                    for (a, b) in row_i.iter_mut().zip(row_i1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Orthonormalizes the columns of `b` (modified Gram-Schmidt with one
/// reorthogonalization pass), preserving column order and span.
pub fn gram_schmidt(b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (p, q) = b.dim();
    if q > p {
        return Err(Error::invalid(format!("cannot orthonormalize {q} columns in dimension {p}")));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has a non-finite entry"));
    }
    let mut out = b.to_owned();
    for j in 0..q {
        let original = out.column(j).dot(&out.column(j)).sqrt();
        for _pass in 0..2 {
            for k in 0..j {
                let proj = out.column(k).dot(&out.column(j));
                let (qk, mut cj) = out.multi_slice_mut((ndarray::s![.., k], ndarray::s![.., j]));
                cj.scaled_add(-proj, &qk);
            }
        }
        let norm = out.column(j).dot(&out.column(j)).sqrt();
        if norm == 0.0 || norm <= RANK_TOLERANCE * original {
            return Err(Error::RankDeficient { column: j });
        }
        out.column_mut(j).mapv_inplace(|x| x / norm);
    }
    Ok(out)
}

/// Lower Cholesky factor `L` with `M = L Lᵀ`.
pub fn cholesky(m: &SymMatrix) -> Result<Array2<f64>> {
    let n = m.dim();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = m[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if diag.is_nan() || diag <= PIVOT_TOLERANCE {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
        }
        let root = diag.sqrt();
        l[[j, j]] = root;
        for i in (j + 1)..n {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / root;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &Array2<f64>, b: ArrayView1<'_, f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.to_owned();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// Solves `M x = b` for symmetric positive definite `M` via Cholesky.
pub fn spd_solve(m: &SymMatrix, b: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if b.len() != m.dim() {
        return Err(Error::invalid(format!(
            "right-hand side has length {}, matrix is {}x{}",
            b.len(),
            m.dim(),
            m.dim()
        )));
    }
    let l = cholesky(m)?;
    Ok(cholesky_solve(&l, b))
}

pub fn frobenius_norm(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        SymMatrix::from_upper(&a + &a.t())
    }

    fn random_spd(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        SymMatrix::new(a.t().dot(&a) + Array2::<f64>::eye(n)).unwrap()
    }

    // det(B) by Gaussian elimination with partial pivoting.
    fn det(mut b: Array2<f64>) -> f64 {
        let n = b.nrows();
        let mut det = 1.0;
        for c in 0..n {
            let mut piv = c;
            for r in c + 1..n {
                if b[[r, c]].abs() > b[[piv, c]].abs() {
                    piv = r;
                }
            }
            if b[[piv, c]] == 0.0 {
                return 0.0;
            }
            if piv != c {
                for k in 0..n {
                    b.swap([c, k], [piv, k]);
                }
                det = -det;
            }
            det *= b[[c, c]];
            for r in c + 1..n {
                let f = b[[r, c]] / b[[c, c]];
                for k in c..n {
                    b[[r, k]] -= f * b[[c, k]];
                }
            }
        }
        det
    }

    fn char_poly(m: &SymMatrix, lambda: f64) -> f64 {
        det(m.view().to_owned() - Array2::<f64>::eye(m.dim()) * lambda)
    }

    // Roots of det(M - λI) by scanning the Gershgorin interval for sign
    // changes and bisecting each bracket.
    fn char_poly_roots(m: &SymMatrix) -> Vec<f64> {
        let n = m.dim();
        let radius = (0..n)
            .map(|i| (0..n).map(|j| m[[i, j]].abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let (lo, hi) = (-radius - 1.0, radius + 1.0);
        let steps = 200_000;
        let mut roots = Vec::new();
        let mut prev_x = lo;
        let mut prev_f = char_poly(m, lo);
        for s in 1..=steps {
            let x = lo + (hi - lo) * s as f64 / steps as f64;
            let fx = char_poly(m, x);
            if prev_f == 0.0 {
                roots.push(prev_x);
            } else if prev_f.signum() != fx.signum() && fx != 0.0 {
                let (mut a, mut b, mut fa) = (prev_x, x, prev_f);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = char_poly(m, mid);
                    if fm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if fm.signum() == fa.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev_x = x;
            prev_f = fx;
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots
    }

    // Null vector of the singular matrix M - λI from the cofactors of its
    // best-conditioned row.
    fn null_vector(m: &SymMatrix, lambda: f64) -> Array1<f64> {
        let n = m.dim();
        let b = m.view().to_owned() - Array2::<f64>::eye(n) * lambda;
        let mut best = Array1::zeros(n);
        let mut best_norm = -1.0;
        for row in 0..n {
            let cof = Array1::from_shape_fn(n, |col| {
                let minor = Array2::from_shape_fn((n - 1, n - 1), |(r, c)| {
                    let rr = if r < row { r } else { r + 1 };
                    let cc = if c < col { c } else { c + 1 };
                    b[[rr, cc]]
                });
                let sign = if (row + col) % 2 == 0 { 1.0 } else { -1.0 };
                sign * det(minor)
            });
            let norm = cof.dot(&cof).sqrt();
            if norm > best_norm {
                best_norm = norm;
                best = cof / norm;
            }
        }
        best
    }

    #[test]
    fn identity_has_unit_spectrum_and_identity_vectors() {
        let eig = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(eig.values.to_vec(), vec![1.0, 1.0, 1.0]);
        assert_eq!(eig.vectors, Array2::<f64>::eye(3));
    }

    #[test]
    fn diagonal_matrix() {
        let eig = sym_eig(&SymMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(eig.values.to_vec(), vec![3.0, 1.0]);
        assert_eq!(eig.vectors, Array2::<f64>::eye(2));
        let eig = sym_eig(&SymMatrix::from_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(eig.values.to_vec(), vec![3.0, 1.0]);
        assert_eq!(eig.vectors, array![[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn one_by_one() {
        let eig = sym_eig(&SymMatrix::from_diag(&[-2.5])).unwrap();
        assert_eq!(eig.values[0], -2.5);
        assert_eq!(eig.vectors[[0, 0]], 1.0);
    }

    #[test]
    fn matches_characteristic_polynomial_oracle() {
        for seed in 0..5 {
            let m = random_symmetric(5, seed);
            let eig = sym_eig(&m).unwrap();
            let roots = char_poly_roots(&m);
            assert_eq!(roots.len(), 5, "seed {seed}: expected 5 simple roots, got {roots:?}");
            for j in 0..5 {
                assert!((eig.values[j] - roots[j]).abs() < 1e-8, "seed {seed} eigenvalue {j}");
                let oracle = null_vector(&m, roots[j]);
                let cos = eig.vectors.column(j).dot(&oracle).abs();
                assert!((cos - 1.0).abs() < 1e-8, "seed {seed} eigenvector {j}: |cos| = {cos}");
            }
        }
    }

    #[test]
    fn decomposition_invariants_on_random_matrices() {
        for (n, seed) in [(2, 1), (7, 2), (30, 3), (120, 4)] {
            let m = random_symmetric(n, seed);
            let eig = sym_eig(&m).unwrap();
            for j in 1..n {
                assert!(eig.values[j - 1] >= eig.values[j]);
            }
            let gram = eig.vectors.t().dot(&eig.vectors);
            for ((i, j), g) in gram.indexed_iter() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-10);
            }
            let err = frobenius_norm((eig.reconstruct() - m.view()).view());
            assert!(err <= 1e-8 * frobenius_norm(m.view()).max(1.0));
            assert!((eig.values.sum() - m.trace()).abs() <= 1e-8 * m.trace().abs().max(1.0));
            for col in eig.vectors.columns() {
                let mut pivot = 0;
                for i in 0..n {
                    if col[i].abs() > col[pivot].abs() {
                        pivot = i;
                    }
                }
                assert!(col[pivot] >= 0.0);
            }
        }
    }

    #[test]
    fn deterministic_for_identical_input() {
        let m = random_symmetric(40, 9);
        assert_eq!(sym_eig(&m).unwrap(), sym_eig(&m).unwrap());
    }

    #[test]
    fn rejects_non_finite_entries() {
        let m = SymMatrix::from_upper(array![[1.0, f64::NAN], [0.0, 1.0]]);
        assert!(matches!(sym_eig(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn repeated_eigenvalues_give_the_right_subspace() {
        // diag(2, 2, 1) rotated: the leading 2-dim eigenspace must be recovered.
        let q = gram_schmidt(array![[1.0, 1.0, 0.0], [1.0, -1.0, 1.0], [0.0, 1.0, 1.0]].view()).unwrap();
        let d = Array2::from_diag(&array![2.0, 2.0, 1.0]);
        let m = SymMatrix::new(q.dot(&d).dot(&q.t())).unwrap();
        let eig = sym_eig(&m).unwrap();
        let lead = eig.leading(2);
        let proj_true = q.slice(ndarray::s![.., ..2]).dot(&q.slice(ndarray::s![.., ..2]).t());
        let proj_est = lead.dot(&lead.t());
        assert!(frobenius_norm((proj_true - proj_est).view()) < 1e-10);
    }

    #[test]
    fn gram_schmidt_keeps_orthonormal_input() {
        let q = gram_schmidt(random_symmetric(6, 5).view()).unwrap();
        let q2 = gram_schmidt(q.view()).unwrap();
        for (a, b) in q.iter().zip(q2.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_schmidt_hand_case() {
        let q = gram_schmidt(array![[1.0, 1.0], [0.0, 1.0]].view()).unwrap();
        assert_eq!(q, array![[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn gram_schmidt_flags_duplicated_column() {
        let b = array![[1.0, 2.0, 1.0], [3.0, 1.0, 3.0], [0.5, 0.0, 0.5], [1.0, 1.0, 1.0]];
        assert!(matches!(gram_schmidt(b.view()), Err(Error::RankDeficient { column: 2 })));
        let zero = Array2::<f64>::zeros((3, 1));
        assert!(matches!(gram_schmidt(zero.view()), Err(Error::RankDeficient { column: 0 })));
    }

    #[test]
    fn gram_schmidt_projector_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = Array2::from_shape_fn((20, 5), |_| rng.random_range(-1.0..1.0));
        let q = gram_schmidt(b.view()).unwrap();
        let proj = q.dot(&q.t());
        let proj2 = proj.dot(&proj);
        for (a, b) in proj.iter().zip(proj2.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        // span preserved: B is reproduced by projecting onto span(Q)
        let back = proj.dot(&b);
        assert!(frobenius_norm((back - &b).view()) < 1e-10);
    }

    #[test]
    fn gram_schmidt_rejects_too_many_columns() {
        let b = Array2::<f64>::ones((2, 3));
        assert!(matches!(gram_schmidt(b.view()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn spd_solve_identity_and_diagonal() {
        let b = array![0.3, -2.0, 7.5];
        assert_eq!(spd_solve(&SymMatrix::identity(3), b.view()).unwrap(), b);
        let x = spd_solve(&SymMatrix::from_diag(&[2.0, 4.0]), array![2.0, 4.0].view()).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn spd_solve_residual() {
        let m = random_spd(6, 3);
        let b = array![1.0, -1.0, 2.0, 0.5, 3.0, -4.0];
        let x = spd_solve(&m, b.view()).unwrap();
        let r = m.view().dot(&x) - &b;
        assert!(r.dot(&r).sqrt() / b.dot(&b).sqrt() <= 1e-8);
    }

    #[test]
    fn spd_solve_rejects_indefinite() {
        let m = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(
            spd_solve(&m, array![1.0, 1.0].view()),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        let singular = SymMatrix::new(array![[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            spd_solve(&singular, array![1.0, 1.0].view()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rejects_asymmetric_matrix() {
        assert!(SymMatrix::new(array![[1.0, 2.0], [0.0, 1.0]]).is_err());
        assert!(SymMatrix::new(Array2::zeros((2, 3))).is_err());
    }
}
