//! Minimum-variance portfolios on factor-model scatter estimates, rolling
//! backtests and contamination sensitivity.

use ndarray::{Array1, Array2, Axis};
use rand::seq::index;

use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::factor::{fit, subspace_distance, DataPanel, FactorFit, Method};
use crate::linalg::{spd_solve, SymMatrix};
use crate::par;

/// Below this `|1ᵀ Σ⁻¹ 1|` the weights cannot be normalized.
pub const WEIGHT_DENOMINATOR_FLOOR: f64 = 1e-12;

/// `w = Σ⁻¹1 / 1ᵀΣ⁻¹1`. Short positions are allowed.
pub fn min_variance_weights(sigma: &SymMatrix) -> Result<Array1<f64>> {
    let ones = Array1::ones(sigma.dim());
    let x = spd_solve(sigma, ones.view())?;
    let denom = x.sum();
    if !(denom.abs() >= WEIGHT_DENOMINATOR_FLOOR) {
        return Err(Error::DegenerateWeights(denom));
    }
    Ok(x / denom)
}

/// `Ĉᵀ Ĉ / n + diag(Ûᵀ Û / n)`: common-component scatter plus the diagonal
/// of the residual scatter.
pub fn estimate_scatter(fit: &FactorFit) -> SymMatrix {
    let w = fit.n() as f64;
    let mut sigma = fit.common.t().dot(&fit.common) / w;
    let resid_var = fit.residuals.map_axis(Axis(0), |c| c.dot(&c) / w);
    sigma.diag_mut().scaled_add(1.0, &resid_var);
    SymMatrix::from_upper(sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub method: Method,
    /// First rebalancing period (the window length); `returns[k]` belongs to
    /// period `start + k`.
    pub start: usize,
    pub returns: Vec<f64>,
    /// Compounded value, starting from 1 before the first period.
    pub net_value: Vec<f64>,
    /// `(n - window) x p`
    pub weights: Array2<f64>,
}

fn backtest_weights(panel: &DataPanel, method: Method, m: usize, window: usize, t: usize) -> Result<Array1<f64>> {
    let train = panel.window(t - window, t)?.centered();
    let fitted = fit(&train, m, method)?;
    min_variance_weights(&estimate_scatter(&fitted))
}

/// Refits on the trailing `window` rows before each period `t` and holds the
/// resulting minimum-variance portfolio over row `t`.
pub fn rolling_backtest(panel: &DataPanel, method: Method, m: usize, window: usize) -> Result<BacktestResult> {
    let (n, p) = (panel.n(), panel.p());
    if window < m + 2 || window >= n {
        return Err(Error::invalid(format!(
            "window {window} must satisfy m + 2 <= window < n (m = {m}, n = {n})"
        )));
    }
    let periods: Vec<usize> = (window..n).collect();
    let weights = par::map_ordered(periods.clone(), |t| {
        backtest_weights(panel, method, m, window, t).map_err(|e| Error::Backtest { period: t, source: Box::new(e) })
    });
    let mut all = Array2::zeros((periods.len(), p));
    let mut returns = Vec::with_capacity(periods.len());
    let mut net_value = Vec::with_capacity(periods.len());
    let mut value = 1.0;
    for (k, (t, w)) in periods.iter().zip(weights).enumerate() {
        let w = w?;
        let r = w.dot(&panel.view().row(*t));
        value *= 1.0 + r;
        returns.push(r);
        net_value.push(value);
        all.row_mut(k).assign(&w);
    }
    Ok(BacktestResult { method, start: window, returns, net_value, weights: all })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationReport {
    pub method: Method,
    pub levels: Vec<f64>,
    /// Mean loading-space distance at each level.
    pub mean_distance: Vec<f64>,
    /// `levels.len() x reps`
    pub distances: Array2<f64>,
}

/// Doubles `round(level·n·p)` distinct cells chosen uniformly at random.
pub fn contaminate(panel: &DataPanel, level: f64, stream: RngStream) -> Result<DataPanel> {
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::invalid(format!("contamination level must lie in [0, 1], got {level}")));
    }
    let (n, p) = (panel.n(), panel.p());
    let count = (level * (n * p) as f64).round() as usize;
    let mut rng = stream.into_rng();
    let mut values = panel.view().to_owned();
    for cell in index::sample(&mut rng, n * p, count) {
        values[[cell / p, cell % p]] *= 2.0;
    }
    DataPanel::new(values)
}

/// Distance between the loadings of the clean panel and of contaminated
/// copies. Repetition `r` at level index `i` uses stream
/// `rng.stream_id + ((i << 32) | r)` of `rng.seed`.
pub fn contamination_sensitivity(
    panel: &DataPanel,
    method: Method,
    m: usize,
    levels: &[f64],
    reps: usize,
    rng: RngStream,
) -> Result<ContaminationReport> {
    if reps == 0 || levels.is_empty() {
        return Err(Error::invalid("need at least one level and one repetition"));
    }
    if let Some(bad) = levels.iter().find(|l| !(0.0..=0.5).contains(*l)) {
        return Err(Error::invalid(format!("contamination levels must lie in [0, 0.5], got {bad}")));
    }
    let base = fit(panel, m, method)?;
    let jobs: Vec<(usize, usize)> = (0..levels.len()).flat_map(|i| (0..reps).map(move |r| (i, r))).collect();
    let results = par::map_ordered(jobs, |(i, r)| {
        let stream = RngStream::new(rng.seed, rng.stream_id.wrapping_add(((i as u64) << 32) | r as u64));
        let dirty = contaminate(panel, levels[i], stream)?;
        let refit = fit(&dirty, m, method)?;
        subspace_distance(base.loadings.view(), refit.loadings.view())
    });
    let flat = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let distances = Array2::from_shape_vec((levels.len(), reps), flat).expect("shape matches job count");
    let mean_distance = distances.mean_axis(Axis(1)).expect("reps > 0").to_vec();
    Ok(ContaminationReport { method, levels: levels.to_vec(), mean_distance, distances })
}
