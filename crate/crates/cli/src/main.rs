use std::process::ExitCode;

use rfa_cli::{dispatch, parse_config, UsageError};

fn main() -> ExitCode {
    let env_seed = std::env::var("RFA_SEED").ok();
    let cfg = match parse_config(std::env::args_os().skip(1), env_seed.as_deref()) {
        Ok(cfg) => cfg,
        Err(UsageError::Clap(e)) => {
            // --help and --version land here too; clap picks the exit code
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(threads) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
