//! Browser bindings for three interactive views: an RTS/PCA error comparison,
//! Kendall vs covariance spectra, and a contamination curve.
//!
//! Each entry point returns a flat `Float64Array`; the layouts are documented
//! per function. The plain Rust functions behind them are exported for native
//! testing.

use rfa_core::distributions::RngStream;
use rfa_core::factor::{sample_covariance, DataPanel, Method};
use rfa_core::kendall::sample_kendall_tau;
use rfa_core::linalg::sym_eig;
use rfa_core::portfolio::contamination_sensitivity;
use rfa_core::simulation::{generate_scenario, run_replications, Family, Scenario, ScenarioConfig};
use wasm_bindgen::prelude::*;

/// Largest panel dimension the page accepts; keeps a click under a few seconds.
pub const MAX_DIM: usize = 400;

fn config(family: &str, p: usize, n: usize, seed: u32) -> Result<ScenarioConfig, String> {
    if p > MAX_DIM || n > MAX_DIM {
        return Err(format!("p and n are capped at {MAX_DIM} in the demo"));
    }
    let family: Family = family.parse().map_err(|e: rfa_core::Error| e.to_string())?;
    let cfg = ScenarioConfig::preset(Scenario::A, family, p, n).with_seed(seed as u64);
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn panel(cfg: &ScenarioConfig) -> Result<DataPanel, String> {
    let truth = generate_scenario(cfg, 0).map_err(|e| e.to_string())?;
    Ok(DataPanel::new(truth.panel).map_err(|e| e.to_string())?.centered())
}

/// `[RTS MEE-CC, AVE-FL, AVE-FS, PCA MEE-CC, AVE-FL, AVE-FS]`.
pub fn compare(family: &str, p: usize, n: usize, reps: usize, seed: u32) -> Result<Vec<f64>, String> {
    let cfg = config(family, p, n, seed)?.with_reps(reps);
    let report = run_replications(&cfg).map_err(|e| e.to_string())?;
    Ok(Method::ALL
        .iter()
        .flat_map(|&m| {
            let r = report.method(m);
            [r.mee_cc, r.ave_fl, r.ave_fs]
        })
        .collect())
}

/// Leading `k = min(p, 10)` eigenvalues of each matrix divided by its trace:
/// `[kendall_1..k, covariance_1..k]`.
pub fn spectra(family: &str, p: usize, n: usize, seed: u32) -> Result<Vec<f64>, String> {
    let data = panel(&config(family, p, n, seed)?)?;
    let k = p.min(10);
    let mut out = Vec::with_capacity(2 * k);
    let kendall = sample_kendall_tau(&data).map_err(|e| e.to_string())?.matrix;
    for matrix in [kendall, sample_covariance(&data)] {
        let eig = sym_eig(&matrix).map_err(|e| e.to_string())?;
        let trace: f64 = eig.values.sum();
        out.extend(eig.values.iter().take(k).map(|v| v / trace));
    }
    Ok(out)
}

/// Six levels evenly spaced on `[0, max_level]`:
/// `[levels.., RTS mean distance.., PCA mean distance..]`.
pub fn contamination(family: &str, p: usize, n: usize, reps: usize, max_level: f64, seed: u32) -> Result<Vec<f64>, String> {
    let cfg = config(family, p, n, seed)?;
    let data = panel(&cfg)?;
    let levels: Vec<f64> = (0..6).map(|i| max_level * i as f64 / 5.0).collect();
    let mut out = levels.clone();
    for method in Method::ALL {
        let report = contamination_sensitivity(&data, method, cfg.m, &levels, reps, RngStream::new(seed as u64, 1))
            .map_err(|e| e.to_string())?;
        out.extend(report.mean_distance);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = compareMethods)]
pub fn compare_methods(family: &str, p: usize, n: usize, reps: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    compare(family, p, n, reps, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = eigenSpectra)]
pub fn eigen_spectra(family: &str, p: usize, n: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    spectra(family, p, n, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = contaminationCurve)]
pub fn contamination_curve(
    family: &str,
    p: usize,
    n: usize,
    reps: usize,
    max_level: f64,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    contamination(family, p, n, reps, max_level, seed).map_err(|e| JsError::new(&e))
}
