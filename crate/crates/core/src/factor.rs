//! Factor estimation: the robust two-step (RTS) estimator, the PCA baseline,
//! eigenvalue-ratio rank selection, and the rotation-invariant error metrics.
//!
//! Both estimators share the second step. With loadings `L̂ = √p · Γ̂`, where
//! `Γ̂` holds the leading `m` eigenvectors of the chosen dispersion matrix,
//! `L̂ᵀL̂ = p·I` and the least-squares scores reduce to `F̂ = Y L̂ / p`.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::kendall::sample_kendall_tau;
use crate::linalg::{cholesky, cholesky_solve, gram_schmidt, sym_eig, EigenDecomposition, SymMatrix};

/// Eigenvalue denominators in the ratio estimator are floored at this value.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Gaps `λ_m - λ_{m+1}` below this flag the fitted eigenspace as ill-determined.
pub const EIGEN_GAP_WARNING: f64 = 1e-12;

/// An `n x p` panel: row `t` is the cross-section observed at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPanel {
    values: Array2<f64>,
}

impl DataPanel {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, p) = values.dim();
        if n < 2 || p < 1 {
            return Err(Error::invalid(format!("panel must have n >= 2 rows and p >= 1 columns, got {n}x{p}")));
        }
        if let Some(((t, i), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("panel entry ({t}, {i}) is not finite: {v}")));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    pub fn column_means(&self) -> Array1<f64> {
        self.values.mean_axis(Axis(0)).expect("non-empty panel")
    }

    /// The panel with each column's mean removed.
    pub fn centered(&self) -> Self {
        let means = self.column_means();
        Self { values: &self.values - &means.insert_axis(Axis(0)) }
    }

    /// Rows `start..end` as a new panel.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        Self::new(self.values.slice(s![start..end, ..]).to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rts,
    Pca,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Rts, Method::Pca];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rts => "RTS",
            Method::Pca => "PCA",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rts" => Ok(Method::Rts),
            "pca" => Ok(Method::Pca),
            other => Err(Error::invalid(format!("unknown method '{other}' (expected RTS or PCA)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorFit {
    pub method: Method,
    pub m: usize,
    /// `p x m`, `√p` times orthonormal eigenvectors.
    pub loadings: Array2<f64>,
    /// `n x m`, row `t` is `f̂_t`.
    pub scores: Array2<f64>,
    /// Full spectrum (descending) of the matrix that was eigendecomposed.
    pub eigenvalues: Array1<f64>,
    /// `n x p` common components `F̂ L̂ᵀ`.
    pub common: Array2<f64>,
    /// `panel - common`.
    pub residuals: Array2<f64>,
    /// Set when `λ_m - λ_{m+1}` is below [`EIGEN_GAP_WARNING`].
    pub eigengap_warning: bool,
}

impl FactorFit {
    pub fn n(&self) -> usize {
        self.scores.nrows()
    }

    pub fn p(&self) -> usize {
        self.loadings.nrows()
    }
}

fn check_factor_count(panel: &DataPanel, m: usize) -> Result<()> {
    let max = (panel.n() - 1).min(panel.p());
    if m == 0 || m > max {
        return Err(Error::invalid(format!("factor count {m} outside 1..={max}")));
    }
    Ok(())
}

/// Sample covariance with column centering and divisor `n`.
pub fn sample_covariance(panel: &DataPanel) -> SymMatrix {
    let centered = panel.centered();
    let y = centered.view();
    SymMatrix::from_upper(y.t().dot(&y) / panel.n() as f64)
}

/// The matrix whose leading eigenvectors give the loadings for `method`.
pub fn dispersion_matrix(panel: &DataPanel, method: Method) -> Result<SymMatrix> {
    match method {
        Method::Rts => Ok(sample_kendall_tau(panel)?.matrix),
        Method::Pca => Ok(sample_covariance(panel)),
    }
}

pub fn fit(panel: &DataPanel, m: usize, method: Method) -> Result<FactorFit> {
    check_factor_count(panel, m)?;
    let eig = sym_eig(&dispersion_matrix(panel, method)?)?;
    Ok(fit_from_eigen(panel, m, method, eig))
}

/// Robust two-step fit: loadings from the sample spatial Kendall's tau matrix.
pub fn fit_rts(panel: &DataPanel, m: usize) -> Result<FactorFit> {
    fit(panel, m, Method::Rts)
}

/// PCA baseline: loadings from the sample covariance matrix.
pub fn fit_pca(panel: &DataPanel, m: usize) -> Result<FactorFit> {
    fit(panel, m, Method::Pca)
}

fn fit_from_eigen(panel: &DataPanel, m: usize, method: Method, eig: EigenDecomposition) -> FactorFit {
    let p = panel.p();
    let loadings = eig.leading(m).to_owned() * (p as f64).sqrt();
    let y = panel.view();
    let scores = y.dot(&loadings) / p as f64;
    let common = scores.dot(&loadings.t());
    let residuals = &y - &common;
    let eigengap_warning = m < eig.values.len() && eig.values[m - 1] - eig.values[m] < EIGEN_GAP_WARNING;
    FactorFit {
        method,
        m,
        loadings,
        scores,
        eigenvalues: eig.values,
        common,
        residuals,
        eigengap_warning,
    }
}

/// Cross-sectional least-squares scores: row `t` is `(LᵀL)⁻¹ Lᵀ y_t`.
pub fn ols_scores(panel: &DataPanel, loadings: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if loadings.nrows() != panel.p() {
        return Err(Error::invalid(format!(
            "loadings have {} rows, panel has {} columns",
            loadings.nrows(),
            panel.p()
        )));
    }
    gram_schmidt(loadings)?;
    let gram = SymMatrix::from_upper(loadings.t().dot(&loadings));
    let chol = cholesky(&gram).map_err(|_| Error::RankDeficient { column: loadings.ncols() - 1 })?;
    let rhs = panel.view().dot(&loadings);
    let mut out = Array2::zeros((panel.n(), loadings.ncols()));
    for (mut row, b) in out.rows_mut().into_iter().zip(rhs.rows()) {
        row.assign(&cholesky_solve(&chol, b));
    }
    Ok(out)
}

/// Default upper bound for the ratio search: `min(8, ⌊min(n, p)/2⌋)`.
pub fn default_max_factors(panel: &DataPanel) -> usize {
    (panel.n().min(panel.p()) / 2).clamp(1, 8)
}

/// Eigenvalue-ratio estimate of the number of factors: the `j` in
/// `1..=m_max` maximizing `λ_j / λ_{j+1}` (earliest on ties).
pub fn estimate_factor_number(panel: &DataPanel, m_max: usize, method: Method) -> Result<usize> {
    let limit = panel.n().min(panel.p()) / 2;
    if m_max == 0 || m_max > limit {
        return Err(Error::invalid(format!("m_max {m_max} outside 1..={limit}")));
    }
    let eig = sym_eig(&dispersion_matrix(panel, method)?)?;
    Ok(ratio_argmax(eig.values.as_slice().unwrap(), m_max))
}

pub(crate) fn ratio_argmax(values: &[f64], m_max: usize) -> usize {
    let mut best = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for j in 1..=m_max {
        let ratio = values[j - 1] / values[j].max(RATIO_FLOOR);
        if ratio > best_ratio {
            best_ratio = ratio;
            best = j;
        }
    }
    best
}

/// `D(O1, O2) = sqrt(1 - Tr(Q1 Q1ᵀ Q2 Q2ᵀ) / max(q1, q2))` with `Q_i` the
/// Gram-Schmidt orthonormalization of `O_i`. Zero for equal column spaces,
/// one for orthogonal ones.
pub fn subspace_distance(o1: ArrayView2<'_, f64>, o2: ArrayView2<'_, f64>) -> Result<f64> {
    if o1.nrows() != o2.nrows() {
        return Err(Error::invalid(format!(
            "subspaces live in different dimensions ({} vs {})",
            o1.nrows(),
            o2.nrows()
        )));
    }
    let q1 = gram_schmidt(o1)?;
    let q2 = gram_schmidt(o2)?;
    if o1 == o2 {
        return Ok(0.0);
    }
    // With q_wide the wider basis, q_wide - Tr(P1 P2) = ‖(I - P_narrow) Q_wide‖²_F,
    // which keeps full relative accuracy when the spaces nearly coincide.
    let (narrow, wide) = if q1.ncols() <= q2.ncols() { (q1, q2) } else { (q2, q1) };
    let resid = &wide - &narrow.dot(&narrow.t().dot(&wide));
    let sq: f64 = resid.iter().map(|r| r * r).sum();
    Ok((sq / wide.ncols() as f64).clamp(0.0, 1.0).sqrt())
}

/// Errors of one replication against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationErrors {
    /// `‖L̂F̂ᵀ - LFᵀ‖²_F / ‖LFᵀ‖²_F`
    pub cc_err: f64,
    pub fl_dist: f64,
    pub fs_dist: f64,
}

pub fn replication_errors(
    fit: &FactorFit,
    true_loadings: ArrayView2<'_, f64>,
    true_factors: ArrayView2<'_, f64>,
) -> Result<ReplicationErrors> {
    if true_loadings.nrows() != fit.p() || true_factors.nrows() != fit.n() || true_loadings.ncols() != true_factors.ncols() {
        return Err(Error::invalid("ground truth dimensions do not match the fit"));
    }
    let truth = true_factors.dot(&true_loadings.t());
    let denom: f64 = truth.iter().map(|x| x * x).sum();
    if denom == 0.0 {
        return Err(Error::invalid("true common component is identically zero"));
    }
    let num: f64 = fit.common.iter().zip(truth.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(ReplicationErrors {
        cc_err: num / denom,
        fl_dist: subspace_distance(fit.loadings.view(), true_loadings)?,
        fs_dist: subspace_distance(fit.scores.view(), true_factors)?,
    })
}
