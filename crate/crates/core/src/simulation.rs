//! Monte Carlo harness for the three simulation scenarios.
//!
//! The data-generating process is
//!
//! ```text
//! y_it = Σ_j L_ij f_jt + √θ u_it,        u_it = sqrt((1-ρ²)/(1+2Jβ²)) e_it
//! e_it = ρ e_i,t-1 + (1-β) v_it + Σ_{l=max(i-J,1)}^{min(i+J,p)} β v_lt
//! ```
//!
//! with `L_ij ~ N(0,1)` redrawn every replication and `(f_t, v_t)` drawn from
//! the configured family. Replication `r` consumes stream `r` of the base
//! seed, so reports do not depend on how replications are scheduled.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use ndarray::{s, Array1, Array2};
use rand_distr::{Distribution, StandardNormal};

use crate::distributions::{alpha_stable_draw, RngStream, SkewT, StreamRng};
use crate::error::{Error, Result};
use crate::factor::{fit, replication_errors, DataPanel, Method, ReplicationErrors};
use crate::linalg::SymMatrix;
use crate::par;

/// Pre-sample steps of the AR(1) error recursion when `ρ > 0`.
pub const BURN_IN: usize = 200;

/// Shape parameter (every coordinate) of the skewed-t family.
pub const SKEW_T_SHAPE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    A,
    B,
    C,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::A => "A",
            Scenario::B => "B",
            Scenario::C => "C",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Scenario::A),
            "B" => Ok(Scenario::B),
            "C" => Ok(Scenario::C),
            other => Err(Error::invalid(format!("unknown scenario '{other}' (expected A, B or C)"))),
        }
    }
}

/// Law of the joint vector `(f_t, v_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gaussian,
    /// Multivariate t with the given degrees of freedom (`t1` is Cauchy).
    StudentT(f64),
    /// Skewed t with 3 degrees of freedom and shape `20·1`.
    SkewT3,
    /// Gaussian factors with i.i.d. symmetric stable errors of the given index.
    AlphaStable(f64),
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Gaussian => f.write_str("gaussian"),
            Family::StudentT(nu) => write!(f, "t{nu}"),
            Family::SkewT3 => f.write_str("skew-t3"),
            Family::AlphaStable(a) => write!(f, "alpha-stable({a})"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let bad = || Error::invalid(format!("unknown family '{s}'"));
        match lower.as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "skew-t3" | "skewt3" | "skew-t" => Ok(Family::SkewT3),
            "alpha-stable" | "stable" => Ok(Family::AlphaStable(1.8)),
            _ => {
                if let Some(rest) = lower.strip_prefix("alpha-stable(").and_then(|r| r.strip_suffix(')')) {
                    let a: f64 = rest.parse().map_err(|_| bad())?;
                    return Ok(Family::AlphaStable(a));
                }
                if let Some(rest) = lower.strip_prefix('t') {
                    let nu: f64 = rest.parse().map_err(|_| bad())?;
                    return Ok(Family::StudentT(nu));
                }
                Err(bad())
            }
        }
    }
}

/// Cross-sectional bandwidth `J` of the error recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandwidth {
    Fixed(usize),
    /// `J = max{10, ⌊p/20⌋}`.
    Rule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub p: usize,
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub rho: f64,
    pub beta: f64,
    pub bandwidth: Bandwidth,
    pub family: Family,
    /// Scatter of the third factor in scenario C.
    pub snr: f64,
    pub replications: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    /// The parameter block of `scenario` with three factors and 100 replications.
    pub fn preset(scenario: Scenario, family: Family, p: usize, n: usize) -> Self {
        let (rho, beta, bandwidth) = match scenario {
            Scenario::A => (0.0, 0.0, Bandwidth::Fixed(0)),
            Scenario::B | Scenario::C => (0.5, 0.2, Bandwidth::Rule),
        };
        Self {
            scenario,
            p,
            n,
            m: 3,
            theta: 1.0,
            rho,
            beta,
            bandwidth,
            family,
            snr: if scenario == Scenario::C { 0.5 } else { 1.0 },
            replications: 100,
            seed: 0,
        }
    }

    pub fn with_reps(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn bandwidth(&self) -> usize {
        match self.bandwidth {
            Bandwidth::Fixed(j) => j,
            Bandwidth::Rule => (self.p / 20).max(10),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n < 2 {
            return Err(Error::invalid(format!("need p >= 1 and n >= 2, got p={} n={}", self.p, self.n)));
        }
        if self.m == 0 || self.m > (self.n - 1).min(self.p) {
            return Err(Error::invalid(format!("factor count {} incompatible with p={} n={}", self.m, self.p, self.n)));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::invalid(format!("theta must be >= 0, got {}", self.theta)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.scenario == Scenario::C && !(self.snr > 0.0 && self.snr <= 1.0) {
            return Err(Error::invalid(format!("scenario C needs snr in (0, 1], got {}", self.snr)));
        }
        if self.scenario == Scenario::C && self.m < 3 {
            return Err(Error::invalid("scenario C weakens the third factor and needs m >= 3"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("need at least one replication"));
        }
        match self.family {
            Family::StudentT(nu) if !(nu > 0.0) => Err(Error::invalid(format!("t degrees of freedom must be positive, got {nu}"))),
            Family::AlphaStable(a) if !(a > 0.0 && a <= 2.0) => {
                Err(Error::invalid(format!("stable index must lie in (0, 2], got {a}")))
            }
            _ => Ok(()),
        }
    }
}

/// One simulated panel together with the quantities that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `p x m`
    pub loadings: Array2<f64>,
    /// `n x m`
    pub factors: Array2<f64>,
    /// `n x p` scaled idiosyncratic errors `u_it`.
    pub errors: Array2<f64>,
    /// `n x p`, `F Lᵀ + √θ U`.
    pub panel: Array2<f64>,
}

fn standard_normals(rows: usize, cols: usize, rng: &mut StreamRng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

// Rows are the joint vectors (f_t, v_t) of length m + p.
fn joint_draws(config: &ScenarioConfig, steps: usize, rng: &mut StreamRng) -> Result<Array2<f64>> {
    let (m, p) = (config.m, config.p);
    let d = m + p;
    let mut draws = match config.family {
        Family::Gaussian => standard_normals(steps, d, rng),
        Family::StudentT(nu) => {
            let mut z = standard_normals(steps, d, rng);
            let chi2 = rand_distr::ChiSquared::new(nu).map_err(|e| Error::invalid(e.to_string()))?;
            for mut row in z.rows_mut() {
                let scale = (nu / chi2.sample(rng)).sqrt();
                row.mapv_inplace(|x| x * scale);
            }
            z
        }
        Family::SkewT3 => {
            let shape = Array1::from_elem(d, SKEW_T_SHAPE);
            let law = SkewT::new(Array1::zeros(d).view(), &SymMatrix::identity(d), shape.view(), 3.0)?;
            law.sample(steps, rng)
        }
        Family::AlphaStable(alpha) => {
            let mut out = Array2::zeros((steps, d));
            for mut row in out.rows_mut() {
                for j in 0..m {
                    row[j] = StandardNormal.sample(rng);
                }
                for j in m..d {
                    row[j] = alpha_stable_draw(alpha, 0.0, 1.0, 0.0, rng);
                }
            }
            out
        }
    };
    if config.scenario == Scenario::C {
        let scale = config.snr.sqrt();
        draws.column_mut(2).mapv_inplace(|x| x * scale);
    }
    Ok(draws)
}

// (1-β) v_i + β Σ_{|l-i|<=J} v_l, with the window clipped to the panel.
fn mix_neighbours(v: &[f64], beta: f64, bandwidth: usize, out: &mut [f64]) {
    let p = v.len();
    if beta == 0.0 {
        out.copy_from_slice(v);
        return;
    }
    let mut prefix = vec![0.0; p + 1];
    for i in 0..p {
        prefix[i + 1] = prefix[i] + v[i];
    }
    for i in 0..p {
        let lo = i.saturating_sub(bandwidth);
        let hi = (i + bandwidth).min(p - 1);
        out[i] = (1.0 - beta) * v[i] + beta * (prefix[hi + 1] - prefix[lo]);
    }
}

/// Draws replication `rep_index` of the configured scenario.
pub fn generate_scenario(config: &ScenarioConfig, rep_index: usize) -> Result<GroundTruth> {
    config.validate()?;
    let (m, p, n) = (config.m, config.p, config.n);
    let mut rng = RngStream::new(config.seed, rep_index as u64).into_rng();
    let loadings = standard_normals(p, m, &mut rng);

    let presample = if config.rho > 0.0 { BURN_IN + 1 } else { 0 };
    let draws = joint_draws(config, presample + n, &mut rng)?;
    let factors = draws.slice(s![presample.., ..m]).to_owned();

    let bandwidth = config.bandwidth();
    let scale = ((1.0 - config.rho * config.rho) / (1.0 + 2.0 * bandwidth as f64 * config.beta * config.beta)).sqrt();
    let mut e = vec![0.0; p];
    let mut mixed = vec![0.0; p];
    let mut errors = Array2::zeros((n, p));
    for (step, row) in draws.rows().into_iter().enumerate() {
        let v = row.slice(s![m..]).to_vec();
        mix_neighbours(&v, config.beta, bandwidth, &mut mixed);
        if presample > 0 && step == 0 {
            // start the recursion at its stationary scale
            let init = (1.0 - config.rho * config.rho).sqrt();
            e.iter_mut().zip(&mixed).for_each(|(ei, w)| *ei = w / init);
            continue;
        }
        e.iter_mut().zip(&mixed).for_each(|(ei, w)| *ei = config.rho * *ei + w);
        if step >= presample {
            let t = step - presample;
            errors.row_mut(t).iter_mut().zip(&e).for_each(|(u, ei)| *u = scale * ei);
        }
    }

    let mut panel = factors.dot(&loadings.t());
    if config.theta > 0.0 {
        panel.scaled_add(config.theta.sqrt(), &errors);
    }
    Ok(GroundTruth { loadings, factors, errors, panel })
}

/// Aggregated errors of one method over all replications.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub method: Method,
    pub per_replication: Vec<ReplicationErrors>,
    /// Median of `cc_err`.
    pub mee_cc: f64,
    pub mee_cc_iqr: f64,
    pub ave_fl: f64,
    pub ave_fl_sd: f64,
    pub ave_fs: f64,
    pub ave_fs_sd: f64,
}

/// Linear-interpolation quantile of sorted data (the median of an even
/// sample is the average of the two central order statistics).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl MetricsReport {
    pub fn from_replications(method: Method, per_replication: Vec<ReplicationErrors>) -> Self {
        assert!(!per_replication.is_empty(), "no replications to aggregate");
        let mut cc: Vec<f64> = per_replication.iter().map(|e| e.cc_err).collect();
        cc.sort_by(f64::total_cmp);
        let fl: Vec<f64> = per_replication.iter().map(|e| e.fl_dist).collect();
        let fs: Vec<f64> = per_replication.iter().map(|e| e.fs_dist).collect();
        let (ave_fl, ave_fl_sd) = mean_sd(&fl);
        let (ave_fs, ave_fs_sd) = mean_sd(&fs);
        Self {
            method,
            mee_cc: quantile(&cc, 0.5),
            mee_cc_iqr: quantile(&cc, 0.75) - quantile(&cc, 0.25),
            ave_fl,
            ave_fl_sd,
            ave_fs,
            ave_fs_sd,
            per_replication,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub config: ScenarioConfig,
    pub rts: MetricsReport,
    pub pca: MetricsReport,
}

impl SimulationReport {
    pub fn method(&self, method: Method) -> &MetricsReport {
        match method {
            Method::Rts => &self.rts,
            Method::Pca => &self.pca,
        }
    }
}

fn run_one(config: &ScenarioConfig, rep: usize) -> Result<[ReplicationErrors; 2]> {
    let truth = generate_scenario(config, rep)?;
    let panel = DataPanel::new(truth.panel)?.centered();
    let mut out = [ReplicationErrors { cc_err: 0.0, fl_dist: 0.0, fs_dist: 0.0 }; 2];
    for (slot, method) in out.iter_mut().zip(Method::ALL) {
        let fitted = fit(&panel, config.m, method)?;
        *slot = replication_errors(&fitted, truth.loadings.view(), truth.factors.view())?;
    }
    Ok(out)
}

/// Runs every replication with both estimators at the true factor count.
pub fn run_replications(config: &ScenarioConfig) -> Result<SimulationReport> {
    config.validate()?;
    let results = par::map_ordered((0..config.replications).collect(), |rep| {
        run_one(config, rep).map_err(|e| Error::Replication { index: rep, source: Box::new(e) })
    });
    let mut rts = Vec::with_capacity(config.replications);
    let mut pca = Vec::with_capacity(config.replications);
    for r in results {
        let [a, b] = r?;
        rts.push(a);
        pca.push(b);
    }
    Ok(SimulationReport {
        config: config.clone(),
        rts: MetricsReport::from_replications(Method::Rts, rts),
        pca: MetricsReport::from_replications(Method::Pca, pca),
    })
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const REPLICATIONS_HEADER: &str = "scenario,family,p,n,rep,method,cc_err,fl_dist,fs_dist";
pub const AGGREGATE_HEADER: &str =
    "scenario,family,p,n,snr,method,reps,mee_cc,mee_cc_iqr,ave_fl,ave_fl_sd,ave_fs,ave_fs_sd";

/// Per-replication rows for every report, preceded by the header.
pub fn write_replications_csv<W: Write>(out: &mut W, reports: &[SimulationReport]) -> io::Result<()> {
    writeln!(out, "{REPLICATIONS_HEADER}")?;
    for report in reports {
        let c = &report.config;
        for method in Method::ALL {
            for (rep, e) in report.method(method).per_replication.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    c.scenario,
                    c.family,
                    c.p,
                    c.n,
                    rep,
                    method,
                    fmt_f64(e.cc_err),
                    fmt_f64(e.fl_dist),
                    fmt_f64(e.fs_dist)
                )?;
            }
        }
    }
    Ok(())
}

/// One row per (configuration, method) with the aggregated metrics.
pub fn write_aggregate_csv<W: Write>(out: &mut W, reports: &[SimulationReport]) -> io::Result<()> {
    writeln!(out, "{AGGREGATE_HEADER}")?;
    for report in reports {
        let c = &report.config;
        for method in Method::ALL {
            let r = report.method(method);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.scenario,
                c.family,
                c.p,
                c.n,
                fmt_f64(c.snr),
                method,
                r.per_replication.len(),
                fmt_f64(r.mee_cc),
                fmt_f64(r.mee_cc_iqr),
                fmt_f64(r.ave_fl),
                fmt_f64(r.ave_fl_sd),
                fmt_f64(r.ave_fs),
                fmt_f64(r.ave_fs_sd)
            )?;
        }
    }
    Ok(())
}
