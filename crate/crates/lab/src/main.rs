//! `polymer-lab`: run one experiment described by a JSON configuration.
//!
//! ```text
//! polymer-lab <experiment-kind> --config <path> [--out <dir>] [--seed <u64>]
//!             [--workers <n>] [--tw-table <path>]
//! polymer-lab validate --config <path>
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 i/o error.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{validate, ExperimentConfig, Severity};
use run::{run, RunError};

#[derive(Parser, Debug)]
#[command(
    name = "polymer-lab",
    version,
    about = "Directed-polymer simulation and numerics laboratory"
)]
struct Cli {
    /// Experiment kind (must match the config's "kind"), or `validate`.
    kind: String,
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for results.csv, summary.json, manifest.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the configuration's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to POLYMER_LAB_WORKERS, then all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Tracy-Widom table CSV (as written by the tw-table experiment).
    #[arg(long)]
    tw_table: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let bytes = std::fs::read(&cli.config).map_err(|e| RunError::Io(e.to_string()))?;
    let mut config: ExperimentConfig =
        serde_json::from_slice(&bytes).map_err(|e| RunError::Config(e.to_string()))?;
    if cli.kind != "validate" && config.kind() != cli.kind {
        return Err(RunError::Config(format!(
            "experiment kind '{}' does not match the config's '{}'",
            cli.kind,
            config.kind()
        )));
    }
    if let Some(seed) = cli.seed {
        config.set_master_seed(seed);
    }
    Ok(config)
}

fn worker_count(cli: &Cli) -> usize {
    cli.workers
        .or_else(|| {
            std::env::var("POLYMER_LAB_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    if cli.kind == "validate" {
        let violations = validate(&config);
        for v in &violations {
            let tag = match v.severity {
                Severity::Warning => "warning",
                Severity::Error => "error",
            };
            eprintln!("{tag}: {}", v.message);
        }
        if violations.iter().any(|v| v.severity == Severity::Error) {
            return ExitCode::from(2);
        }
        println!("config ok: kind {}", config.kind());
        return ExitCode::SUCCESS;
    }

    let workers = worker_count(&cli);
    match run(config, &cli.out, workers, cli.tw_table.clone()) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} finished in {:.1}s; outputs in {}",
                outcome.manifest.kind,
                outcome.manifest.wall_clock_seconds,
                cli.out.display()
            );
            if let Ok(pretty) = serde_json::to_string_pretty(&outcome.summary) {
                println!("{pretty}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
