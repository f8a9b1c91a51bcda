//! Thin command-line front end: load a scenario file, validate or run it.
//!
//! Exit codes: 0 success, 2 config error, 3 dataset/output I/O error,
//! 4 simulation error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bacsim::config::ScenarioConfig;
use bacsim::runner;

#[derive(Parser)]
#[command(
    name = "bacsim",
    version,
    about = "Battery-assisted EV charge point simulator"
)]
struct Args {
    /// Scenario configuration file (TOML).
    config: PathBuf,

    /// Check the configuration and report every violation without running.
    #[arg(long)]
    validate: bool,

    /// Worker threads for the sweep; 0 means one per core.
    #[arg(long)]
    workers: Option<usize>,

    /// Override the synthetic-data seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();

    let base_dir = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));

    let mut config = match ScenarioConfig::load(&args.config) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: {err}");
            if let Some(source) = std::error::Error::source(&err) {
                eprintln!("  caused by: {source}");
            }
            return ExitCode::from(2);
        }
    };
    if let Some(workers) = args.workers {
        config.run.workers = workers;
    }

    if args.validate {
        let issues = config.validate(&base_dir);
        if issues.is_empty() {
            println!("ok");
            return ExitCode::SUCCESS;
        }
        for issue in &issues {
            println!("violation: {issue}");
        }
        return ExitCode::from(2);
    }

    match runner::run(&config, &base_dir, args.out.as_deref(), args.seed) {
        Ok(_) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
