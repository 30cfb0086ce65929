use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rfa_core::distributions::RngStream;
use rfa_core::factor::{default_max_factors, estimate_factor_number, fit, DataPanel, Method};
use rfa_core::portfolio::{contamination_sensitivity, rolling_backtest};
use rfa_core::simulation::{fmt_f64, run_replications, write_aggregate_csv, write_replications_csv};
use thiserror::Error;

use crate::config::{CliConfig, MethodChoice, SubcommandKind};
use crate::panel_io::{read_panel, FormatError, NamedPanel};

/// Failure after arguments were accepted; maps to exit code 1.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] rfa_core::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| RunError::Write { path: dir.to_owned(), source })?;
    }
    File::create(path).map(BufWriter::new).map_err(|source| RunError::Write { path: path.to_owned(), source })
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), RunError> {
    let mut out = create(path)?;
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|source| RunError::Write { path: path.to_owned(), source })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn csv_line<W: Write>(out: &mut W, cells: &[String]) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(cells).map_err(io::Error::other)?;
    out.write_all(&w.into_inner().map_err(|e| io::Error::other(e.to_string()))?)
}

// With `both`, each method writes into its own subdirectory.
fn method_dir(base: &Path, choice: MethodChoice, method: Method) -> PathBuf {
    match choice {
        MethodChoice::Both => base.join(method.to_string().to_ascii_lowercase()),
        _ => base.to_owned(),
    }
}

fn load(cfg: &CliConfig) -> Result<NamedPanel, RunError> {
    let path = cfg.input_path.as_deref().expect("input checked at parse time");
    let named = read_panel(path)?;
    eprintln!("read {} x {} panel from {}", named.panel.n(), named.panel.p(), path.display());
    Ok(named)
}

pub fn dispatch(cfg: &CliConfig) -> Result<(), RunError> {
    match cfg.subcommand {
        SubcommandKind::Simulate => simulate(cfg),
        SubcommandKind::Fit => fit_panel(cfg),
        SubcommandKind::SelectRank => select_rank(cfg),
        SubcommandKind::Backtest => backtest(cfg),
        SubcommandKind::Perturb => perturb(cfg),
    }
}

fn simulate(cfg: &CliConfig) -> Result<(), RunError> {
    let sc = cfg.scenario.as_ref().expect("scenario resolved at parse time");
    eprintln!(
        "simulating scenario {} {} (p={}, n={}, m={}) with {} replications, seed {}",
        sc.scenario, sc.family, sc.p, sc.n, sc.m, sc.replications, sc.seed
    );
    let report = run_replications(sc)?;
    for method in Method::ALL {
        let r = report.method(method);
        eprintln!("{method}: MEE-CC {:.4} AVE-FL {:.4} AVE-FS {:.4}", r.mee_cc, r.ave_fl, r.ave_fs);
    }
    let reports = std::slice::from_ref(&report);
    write_file(&cfg.output_dir.join("replications.csv"), |w| write_replications_csv(w, reports))?;
    write_file(&cfg.output_dir.join("aggregate.csv"), |w| write_aggregate_csv(w, reports))
}

fn factor_header(first: &str, m: usize) -> Vec<String> {
    std::iter::once(first.to_owned()).chain((1..=m).map(|j| format!("factor_{j}"))).collect()
}

fn fit_panel(cfg: &CliConfig) -> Result<(), RunError> {
    let named = load(cfg)?;
    let panel = named.panel.centered();
    for method in cfg.method.methods() {
        let m = match cfg.m {
            Some(m) => m,
            None => {
                let m = estimate_factor_number(&panel, default_max_factors(&panel), method)?;
                eprintln!("{method}: eigenvalue-ratio estimate m = {m}");
                m
            }
        };
        let f = fit(&panel, m, method)?;
        if f.eigengap_warning {
            eprintln!("{method}: warning: eigenvalues {m} and {} nearly coincide", m + 1);
        }
        let dir = method_dir(&cfg.output_dir, cfg.method, method);
        write_file(&dir.join("loadings.csv"), |w| {
            csv_line(w, &factor_header("series", m))?;
            for (name, row) in named.names.iter().zip(f.loadings.rows()) {
                let cells: Vec<String> = std::iter::once(name.clone()).chain(row.iter().map(|&x| fmt_f64(x))).collect();
                csv_line(w, &cells)?;
            }
            Ok(())
        })?;
        write_file(&dir.join("scores.csv"), |w| {
            csv_line(w, &factor_header("period", m))?;
            for (t, row) in f.scores.rows().into_iter().enumerate() {
                let cells: Vec<String> = std::iter::once((t + 1).to_string()).chain(row.iter().map(|&x| fmt_f64(x))).collect();
                csv_line(w, &cells)?;
            }
            Ok(())
        })?;
        write_file(&dir.join("eigenvalues.csv"), |w| {
            writeln!(w, "index,eigenvalue")?;
            for (j, v) in f.eigenvalues.iter().enumerate() {
                writeln!(w, "{},{}", j + 1, fmt_f64(*v))?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn select_rank(cfg: &CliConfig) -> Result<(), RunError> {
    let panel = load(cfg)?.panel.centered();
    let method = cfg.method.methods()[0];
    let m_max = cfg.m_max.unwrap_or_else(|| default_max_factors(&panel));
    let m = estimate_factor_number(&panel, m_max, method)?;
    println!("{m}");
    Ok(())
}

fn backtest(cfg: &CliConfig) -> Result<(), RunError> {
    let named = load(cfg)?;
    let (m, window) = (cfg.m.expect("m resolved"), cfg.window.expect("window resolved"));
    for method in cfg.method.methods() {
        let result = rolling_backtest(&named.panel, method, m, window)?;
        eprintln!(
            "{method}: {} periods, terminal net value {:.6}",
            result.returns.len(),
            result.net_value.last().copied().unwrap_or(1.0)
        );
        let dir = method_dir(&cfg.output_dir, cfg.method, method);
        write_file(&dir.join("netvalue.csv"), |w| {
            writeln!(w, "period,return,net_value")?;
            for (k, (r, v)) in result.returns.iter().zip(&result.net_value).enumerate() {
                writeln!(w, "{},{},{}", result.start + k + 1, fmt_f64(*r), fmt_f64(*v))?;
            }
            Ok(())
        })?;
        write_file(&dir.join("weights.csv"), |w| {
            let header: Vec<String> = std::iter::once("period".to_owned()).chain(named.names.iter().cloned()).collect();
            csv_line(w, &header)?;
            for (k, row) in result.weights.rows().into_iter().enumerate() {
                let cells: Vec<String> =
                    std::iter::once((result.start + k + 1).to_string()).chain(row.iter().map(|&x| fmt_f64(x))).collect();
                csv_line(w, &cells)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn perturb(cfg: &CliConfig) -> Result<(), RunError> {
    let panel: DataPanel = load(cfg)?.panel.centered();
    let m = cfg.m.expect("m resolved");
    let mut reports = Vec::new();
    for method in cfg.method.methods() {
        eprintln!("{method}: {} levels x {} repetitions", cfg.levels.len(), cfg.reps);
        reports.push(contamination_sensitivity(&panel, method, m, &cfg.levels, cfg.reps, RngStream::new(cfg.seed, 0))?);
    }
    write_file(&cfg.output_dir.join("contamination.csv"), |w| {
        writeln!(w, "method,level,mean_distance")?;
        for r in &reports {
            for (level, d) in r.levels.iter().zip(&r.mean_distance) {
                writeln!(w, "{},{},{}", r.method, fmt_f64(*level), fmt_f64(*d))?;
            }
        }
        Ok(())
    })
}
