use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ndarray::Array2;
use rfa_cli::config::parse_config;
use rfa_cli::{read_panel, write_panel};
use rfa_core::distributions::RngStream;
use rfa_core::simulation::{generate_scenario, Family, Scenario, ScenarioConfig};

fn rfa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfa")).args(args).env_remove("RFA_SEED").output().unwrap()
}

fn write_csv(path: &Path, values: &Array2<f64>) {
    let names: Vec<String> = (0..values.ncols()).map(|j| format!("s{j}")).collect();
    write_panel(fs::File::create(path).unwrap(), &names, values.view()).unwrap();
}

fn simulated_panel(dir: &Path) -> std::path::PathBuf {
    let cfg = ScenarioConfig::preset(Scenario::A, Family::StudentT(3.0), 150, 100).with_seed(5);
    let path = dir.join("panel.csv");
    write_csv(&path, &generate_scenario(&cfg, 0).unwrap().panel);
    path
}

#[test]
fn simulate_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = rfa(&["simulate", "--scenario", "A", "--p", "150", "--n", "100", "--reps", "10", "-o", out]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(res.stdout.is_empty(), "logs must stay on stderr");
    let reps = fs::read_to_string(dir.path().join("replications.csv")).unwrap();
    assert!(reps.starts_with("scenario,family,p,n,rep,method,cc_err,fl_dist,fs_dist\n"));
    assert_eq!(reps.lines().count(), 1 + 2 * 10);
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 3);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let out = dir.path().to_str().unwrap();
        let res = rfa(&["simulate", "--family", "t1", "--p", "60", "--n", "40", "--reps", "12", "--seed", "3", "--threads", threads, "-o", out]);
        assert_eq!(res.status.code(), Some(0));
    }
    for file in ["replications.csv", "aggregate.csv"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
    }
}

#[test]
fn missing_input_is_a_usage_error() {
    assert_eq!(rfa(&["fit"]).status.code(), Some(2));
    assert_eq!(rfa(&["simulate", "--bogus"]).status.code(), Some(2));
    assert_eq!(rfa(&["simulate", "--family", "t3", "--rho", "1.5"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(&path, "# base settings\nseed = 1\nreps = 4\n").unwrap();
    let conf = path.to_str().unwrap();
    let cfg = parse_config(["simulate", "--config", conf, "--seed", "9"], Some("5")).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.reps, 4);
    let cfg = parse_config(["simulate", "--config", conf], Some("5")).unwrap();
    assert_eq!(cfg.seed, 1);

    fs::write(&path, "colour = blue\n").unwrap();
    assert_eq!(rfa(&["simulate", "--config", conf]).status.code(), Some(2));
}

#[test]
fn degenerate_panel_fails_at_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    fs::write(&path, "a,b,c\n1,2,3\n1,2,3\n1,2,3\n").unwrap();
    let res = rfa(&["fit", "--input", path.to_str().unwrap(), "--m", "1", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("degenerate panel"));
}

#[test]
fn malformed_panel_names_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "a,b\n1,2\n3,NaN\n").unwrap();
    let res = rfa(&["fit", "--input", path.to_str().unwrap(), "--m", "1"]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 3, column 2"), "{err}");
}

#[test]
fn select_rank_recovers_simulated_factor_count() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(dir.path());
    let res = rfa(&["select-rank", "--input", panel.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&res.stdout), "3\n");
}

#[test]
fn fit_writes_loadings_scores_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulated_panel(dir.path());
    let out = dir.path().join("fit");
    let res = rfa(&["fit", "--input", panel.to_str().unwrap(), "--method", "both", "-o", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for sub in ["rts", "pca"] {
        let loadings = fs::read_to_string(out.join(sub).join("loadings.csv")).unwrap();
        assert!(loadings.starts_with("series,factor_1,factor_2,factor_3\n"));
        assert_eq!(loadings.lines().count(), 151);
        assert_eq!(fs::read_to_string(out.join(sub).join("scores.csv")).unwrap().lines().count(), 101);
        assert_eq!(fs::read_to_string(out.join(sub).join("eigenvalues.csv")).unwrap().lines().count(), 151);
    }
}

#[test]
fn backtest_and_perturb_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(8, 0).into_rng();
    let values = Array2::from_shape_fn((30, 6), |_| rand_uniform(&mut rng));
    let path = dir.path().join("returns.csv");
    write_csv(&path, &values);
    let input = path.to_str().unwrap();
    let out = dir.path().to_str().unwrap();

    let res = rfa(&["backtest", "--input", input, "--m", "1", "--window", "20", "-o", out]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for sub in ["rts", "pca"] {
        let nv = fs::read_to_string(dir.path().join(sub).join("netvalue.csv")).unwrap();
        assert!(nv.starts_with("period,return,net_value\n21,"));
        assert_eq!(nv.lines().count(), 11);
        let weights = fs::read_to_string(dir.path().join(sub).join("weights.csv")).unwrap();
        for line in weights.lines().skip(1) {
            let sum: f64 = line.split(',').skip(1).map(|c| c.parse::<f64>().unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-10);
        }
    }

    let res = rfa(&["perturb", "--input", input, "--m", "1", "--reps", "5", "--levels", "0,0.1", "-o", out]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(dir.path().join("contamination.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().ends_with(",0.0000000000000000e0"));
}

fn rand_uniform(rng: &mut rfa_core::distributions::StreamRng) -> f64 {
    use rand::Rng;
    rng.random_range(-0.05..0.05)
}

#[test]
fn panel_round_trip_is_exact() {
    let mut rng = RngStream::new(9, 0).into_rng();
    let values = Array2::from_shape_fn((20, 5), |_| rand_uniform(&mut rng) * 1e3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    write_csv(&path, &values);
    let back = read_panel(&path).unwrap();
    for (a, b) in back.panel.view().iter().zip(values.iter()) {
        assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
    }
    assert_eq!(back.panel.view(), values.view());
}
