//! Command-line and config-file parsing.
//!
//! Every setting resolves as flag, then config file, then (for the seed) the
//! `RFA_SEED` environment variable, then the built-in default.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rfa_core::factor::Method;
use rfa_core::simulation::{Bandwidth, Family, Scenario, ScenarioConfig};

pub const DEFAULT_WINDOW: usize = 52;
pub const DEFAULT_LEVELS: [f64; 4] = [0.0, 0.01, 0.05, 0.10];
pub const DEFAULT_PERTURB_REPS: usize = 100;

const KNOWN_KEYS: &[&str] = &[
    "seed", "threads", "output_dir", "input", "scenario", "family", "p", "n", "m", "reps", "snr", "theta",
    "rho", "beta", "bandwidth", "method", "window", "m_max", "levels",
];

#[derive(Debug, Parser)]
#[command(name = "rfa", version, about = "Robust factor analysis with the spatial Kendall's tau matrix")]
pub struct Cli {
    /// Flat `key = value` file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads [default: available parallelism]. Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Base random seed [default: $RFA_SEED, else 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output CSV files [default: .].
    #[arg(long, short = 'o', global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo comparison of RTS and PCA on a simulated scenario.
    Simulate(SimulateArgs),
    /// Fit a factor model to a panel CSV.
    Fit(FitArgs),
    /// Print the eigenvalue-ratio estimate of the factor count.
    SelectRank(SelectRankArgs),
    /// Rolling minimum-variance backtest on a return panel.
    Backtest(BacktestArgs),
    /// Loading sensitivity to randomly doubled cells.
    Perturb(PerturbArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// A, B or C [default: A].
    #[arg(long)]
    pub scenario: Option<String>,
    /// gaussian, t3, t2, t1, skew-t3 or alpha-stable(1.8) [default: gaussian].
    #[arg(long)]
    pub family: Option<String>,
    /// Cross-section size [default: 150].
    #[arg(long)]
    pub p: Option<usize>,
    /// Sample size [default: 100].
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of factors [default: 3].
    #[arg(long)]
    pub m: Option<usize>,
    /// Replications [default: 100].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Scatter of the third factor, scenario C only [default: 0.5].
    #[arg(long)]
    pub snr: Option<f64>,
    /// Noise scale [default: 1].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Error autocorrelation [default: 0 for A, 0.5 for B and C].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Cross-sectional error coupling [default: 0 for A, 0.2 for B and C].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Integer J or `rule` for max(10, p/20) [default: 0 for A, rule for B and C].
    #[arg(long)]
    pub bandwidth: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Panel CSV.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// rts, pca or both [default: rts].
    #[arg(long)]
    pub method: Option<String>,
    /// Number of factors [default: eigenvalue-ratio estimate].
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelectRankArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// rts or pca [default: rts].
    #[arg(long)]
    pub method: Option<String>,
    /// Largest candidate [default: min(n, p)/2 capped at 8].
    #[arg(long)]
    pub m_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Return panel CSV (raw, uncentered returns).
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// rts, pca or both [default: both].
    #[arg(long)]
    pub method: Option<String>,
    /// Number of factors (required).
    #[arg(long)]
    pub m: Option<usize>,
    /// Estimation window length [default: 52].
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// rts, pca or both [default: both].
    #[arg(long)]
    pub method: Option<String>,
    /// Number of factors (required).
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated proportions in [0, 0.5] [default: 0,0.01,0.05,0.1].
    #[arg(long)]
    pub levels: Option<String>,
    /// Repetitions per level [default: 100].
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcommandKind {
    Simulate,
    Fit,
    SelectRank,
    Backtest,
    Perturb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Rts,
    Pca,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Rts => vec![Method::Rts],
            MethodChoice::Pca => vec![Method::Pca],
            MethodChoice::Both => Method::ALL.to_vec(),
        }
    }
}

impl FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rts" => Ok(MethodChoice::Rts),
            "pca" => Ok(MethodChoice::Pca),
            "both" => Ok(MethodChoice::Both),
            _ => Err(format!("unknown method '{s}' (expected rts, pca or both)")),
        }
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub subcommand: SubcommandKind,
    pub input_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub scenario: Option<ScenarioConfig>,
    pub method: MethodChoice,
    pub m: Option<usize>,
    pub m_max: Option<usize>,
    pub window: Option<usize>,
    pub levels: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

/// Bad arguments or configuration; maps to exit code 2.
#[derive(Debug)]
pub enum UsageError {
    Clap(clap::Error),
    Message(String),
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UsageError::Clap(e) => write!(f, "{e}"),
            UsageError::Message(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError::Message(msg.into())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<HashMap<String, String>, UsageError> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(usage(format!("config line {}: unknown key '{key}'", i + 1)));
        }
        out.insert(key, value.trim().to_owned());
    }
    Ok(out)
}

struct Layers {
    file: HashMap<String, String>,
}

impl Layers {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| usage(format!("config key '{key}': {e}"))),
        }
    }
}

fn parse_value<T: FromStr>(name: &str, value: Option<String>) -> Result<Option<T>, UsageError>
where
    T::Err: fmt::Display,
{
    value.map(|v| v.parse().map_err(|e| usage(format!("--{name}: {e}")))).transpose()
}

fn parse_levels(text: &str) -> Result<Vec<f64>, UsageError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("bad contamination level '{s}'"))))
        .collect()
}

fn parse_bandwidth(text: &str) -> Result<Bandwidth, UsageError> {
    if text.eq_ignore_ascii_case("rule") {
        return Ok(Bandwidth::Rule);
    }
    text.parse().map(Bandwidth::Fixed).map_err(|_| usage(format!("bad bandwidth '{text}'")))
}

/// Resolves arguments (without the program name) against an optional config
/// file and the `RFA_SEED` value.
pub fn parse_config<I, S>(args: I, env_seed: Option<&str>) -> Result<CliConfig, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("rfa")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(UsageError::Clap)?;
    resolve(cli, env_seed)
}

fn read_config(path: &Path) -> Result<HashMap<String, String>, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_file(&text)
}

pub fn resolve(cli: Cli, env_seed: Option<&str>) -> Result<CliConfig, UsageError> {
    let layers = Layers { file: cli.config.as_deref().map(read_config).transpose()?.unwrap_or_default() };
    let env_seed = env_seed
        .map(|s| s.trim().parse::<u64>().map_err(|_| usage(format!("RFA_SEED must be an integer, got '{s}'"))))
        .transpose()?;
    let seed = layers.get(cli.seed, "seed")?.or(env_seed).unwrap_or(0);
    let threads = layers.get(cli.threads, "threads")?;
    if threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let output_dir = layers.get(cli.output_dir, "output_dir")?.unwrap_or_else(|| PathBuf::from("."));

    let mut cfg = CliConfig {
        subcommand: SubcommandKind::Simulate,
        input_path: None,
        output_dir,
        scenario: None,
        method: MethodChoice::Both,
        m: None,
        m_max: None,
        window: None,
        levels: Vec::new(),
        reps: DEFAULT_PERTURB_REPS,
        seed,
        threads,
    };

    let require_input = |flag: Option<PathBuf>, cmd: &str| -> Result<Option<PathBuf>, UsageError> {
        match layers.get(flag, "input")? {
            Some(p) => Ok(Some(p)),
            None => Err(usage(format!("{cmd} needs --input <FILE>"))),
        }
    };
    let method = |flag: Option<String>, default: MethodChoice| -> Result<MethodChoice, UsageError> {
        Ok(layers.get(parse_value("method", flag)?, "method")?.unwrap_or(default))
    };

    match cli.command {
        Command::Simulate(a) => {
            let scenario: Scenario = layers.get(parse_value("scenario", a.scenario)?, "scenario")?.unwrap_or(Scenario::A);
            let family: Family = layers.get(parse_value("family", a.family)?, "family")?.unwrap_or(Family::Gaussian);
            let p = layers.get(a.p, "p")?.unwrap_or(150);
            let n = layers.get(a.n, "n")?.unwrap_or(100);
            let mut sc = ScenarioConfig::preset(scenario, family, p, n).with_seed(seed);
            if let Some(m) = layers.get(a.m, "m")? {
                sc.m = m;
            }
            if let Some(r) = layers.get(a.reps, "reps")? {
                sc.replications = r;
            }
            if let Some(v) = layers.get(a.snr, "snr")? {
                sc.snr = v;
            }
            if let Some(v) = layers.get(a.theta, "theta")? {
                sc.theta = v;
            }
            if let Some(v) = layers.get(a.rho, "rho")? {
                sc.rho = v;
            }
            if let Some(v) = layers.get(a.beta, "beta")? {
                sc.beta = v;
            }
            if let Some(b) = layers.get(a.bandwidth, "bandwidth")? {
                sc.bandwidth = parse_bandwidth(&b)?;
            }
            sc.validate().map_err(|e| usage(e.to_string()))?;
            cfg.reps = sc.replications;
            cfg.m = Some(sc.m);
            cfg.scenario = Some(sc);
        }
        Command::Fit(a) => {
            cfg.subcommand = SubcommandKind::Fit;
            cfg.input_path = require_input(a.input, "fit")?;
            cfg.method = method(a.method, MethodChoice::Rts)?;
            cfg.m = layers.get(a.m, "m")?;
        }
        Command::SelectRank(a) => {
            cfg.subcommand = SubcommandKind::SelectRank;
            cfg.input_path = require_input(a.input, "select-rank")?;
            cfg.method = method(a.method, MethodChoice::Rts)?;
            if cfg.method == MethodChoice::Both {
                return Err(usage("select-rank takes a single method (rts or pca)"));
            }
            cfg.m_max = layers.get(a.m_max, "m_max")?;
        }
        Command::Backtest(a) => {
            cfg.subcommand = SubcommandKind::Backtest;
            cfg.input_path = require_input(a.input, "backtest")?;
            cfg.method = method(a.method, MethodChoice::Both)?;
            cfg.m = Some(layers.get(a.m, "m")?.ok_or_else(|| usage("backtest needs --m <FACTORS>"))?);
            cfg.window = Some(layers.get(a.window, "window")?.unwrap_or(DEFAULT_WINDOW));
        }
        Command::Perturb(a) => {
            cfg.subcommand = SubcommandKind::Perturb;
            cfg.input_path = require_input(a.input, "perturb")?;
            cfg.method = method(a.method, MethodChoice::Both)?;
            cfg.m = Some(layers.get(a.m, "m")?.ok_or_else(|| usage("perturb needs --m <FACTORS>"))?);
            cfg.levels = match layers.get(a.levels, "levels")? {
                Some(text) => parse_levels(&text)?,
                None => DEFAULT_LEVELS.to_vec(),
            };
            cfg.reps = layers.get(a.reps, "reps")?.unwrap_or(DEFAULT_PERTURB_REPS);
        }
    }
    if cfg.m == Some(0) {
        return Err(usage("--m must be at least 1"));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_table_block() {
        let args = ["simulate", "--scenario", "A", "--family", "t3", "--p", "150", "--n", "100", "--reps", "100", "--seed", "7"];
        let cfg = parse_config(args, None).unwrap();
        let sc = cfg.scenario.unwrap();
        assert_eq!((sc.scenario, sc.family, sc.p, sc.n, sc.m), (Scenario::A, Family::StudentT(3.0), 150, 100, 3));
        assert_eq!((sc.replications, sc.seed, sc.rho, sc.beta), (100, 7, 0.0, 0.0));
    }

    #[test]
    fn fit_requires_input() {
        assert!(matches!(parse_config(["fit"], None), Err(UsageError::Message(_))));
    }

    #[test]
    fn config_file_keys() {
        let map = parse_config_file("# comment\nseed = 1\n\nwindow=10 # trailing\n").unwrap();
        assert_eq!(map["seed"], "1");
        assert_eq!(map["window"], "10");
        assert!(parse_config_file("colour = red").is_err());
        assert!(parse_config_file("seed").is_err());
    }

    #[test]
    fn seed_precedence() {
        let cfg = parse_config(["simulate"], Some("5")).unwrap();
        assert_eq!(cfg.seed, 5);
        let cfg = parse_config(["simulate", "--seed", "9"], Some("5")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(parse_config(["simulate"], None).unwrap().seed, 0);
        assert!(parse_config(["simulate"], Some("abc")).is_err());
    }

    #[test]
    fn unknown_flag_and_bad_values() {
        assert!(matches!(parse_config(["simulate", "--colour", "red"], None), Err(UsageError::Clap(_))));
        assert!(parse_config(["simulate", "--family", "t"], None).is_err());
        assert!(parse_config(["simulate", "--scenario", "D"], None).is_err());
        assert!(parse_config(["backtest", "--input", "x.csv"], None).is_err());
        assert!(parse_config(["select-rank", "--input", "x.csv", "--method", "both"], None).is_err());
        assert!(parse_config(["simulate", "--threads", "0"], None).is_err());
    }

    #[test]
    fn bandwidth_forms() {
        let cfg = parse_config(["simulate", "--scenario", "B", "--bandwidth", "3"], None).unwrap();
        assert_eq!(cfg.scenario.unwrap().bandwidth, Bandwidth::Fixed(3));
        let cfg = parse_config(["simulate", "--bandwidth", "rule"], None).unwrap();
        assert_eq!(cfg.scenario.unwrap().bandwidth, Bandwidth::Rule);
    }
}
