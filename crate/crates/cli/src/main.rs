//! `gq run <experiment> [--config FILE] [--key value ...]`

mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "gq", version, about = "Classical and quantum Gibbs-state studies for the quintic Hartree equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        /// One of the experiment names listed in the README.
        experiment: String,
        /// TOML configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides as `--key value` pairs, e.g. `--samples 1000 --tau 1,2,4`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

fn set_threads() -> Result<(), String> {
    let Ok(text) = std::env::var("GQ_THREADS") else { return Ok(()) };
    let n: usize = text.trim().parse().map_err(|_| format!("GQ_THREADS must be a positive integer, got {text:?}"))?;
    if n == 0 {
        return Err("GQ_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(experiment: &str, config: Option<&Path>, overrides: &[String]) -> Result<bool, experiments::BoxError> {
    set_threads()?;
    let pairs = config::parse_overrides(overrides)?;
    let text = match config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?),
        None => None,
    };
    let cfg = config::resolve(experiment, text.as_deref(), &pairs)?;
    let base = config.and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default();
    experiments::preflight(&cfg, &base)?;
    let outcome = experiments::run(&cfg, &base)?;
    let dir = output::run_directory(&cfg);
    output::write_artifacts(&dir, &cfg, &outcome)?;
    for c in &outcome.checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("artifacts: {}", dir.display());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { experiment, config, overrides } = cli.command;
    match run(&experiment, config.as_deref(), &overrides) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
