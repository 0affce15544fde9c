//! Batch front end: run configs in, JSON/CSV reports and plot-ready data
//! out.  One command per process; exit code 0 on pass, 1 on a
//! quantitative gate or convergence failure, 2 on a usage/config error.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use superliouville::error::Error;

/// Why a run did not succeed: configuration/usage problems exit with 2,
/// quantitative failures (gates, non-convergence) with 1.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Gate(String),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Failure {
        match err {
            // Quantitative outcomes of a well-formed run.
            Error::NoConvergence { .. }
            | Error::LinearSolveFailure { .. }
            | Error::NotASolution { .. } => Failure::Gate(err.to_string()),
            // Everything else means the configuration asked for something
            // the geometry or the operators cannot provide.
            _ => Failure::Config(err.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "superliouville",
    version,
    about = "Finite-difference toolkit for the coupled Liouville-Dirac system",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory reports and CSV files are written to (created if absent).
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Force deterministic single-threaded execution.
    #[arg(long, global = true)]
    serial: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an exact solution family and gate its diagnostics.
    Verify,
    /// Newton-solve from an initial guess, then gate the diagnostics.
    Solve,
    /// Generate a bubbling sequence and detect concentration.
    Blowup,
    /// Dump node-sampled fields as CSV.
    Export,
    /// Kelvin-transform a family and re-verify the local diagnostics.
    Kelvin,
}

/// Cap rayon's parallelism before any work happens: --serial forces one
/// thread, otherwise SUPERLIOUVILLE_THREADS (unset or 0 = rayon default).
fn init_threads(serial: bool) -> Result<(), Failure> {
    let threads = if serial {
        1
    } else {
        match std::env::var("SUPERLIOUVILLE_THREADS") {
            Ok(text) => text.parse::<usize>().map_err(|_| {
                Failure::Config(format!(
                    "SUPERLIOUVILLE_THREADS must be a non-negative integer, got {text:?}"
                ))
            })?,
            Err(_) => 0,
        }
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn load_config<T: DeserializeOwned>(path: &Option<PathBuf>) -> Result<T, Failure> {
    let path = path
        .as_ref()
        .ok_or_else(|| Failure::Config("missing required flag --config <PATH>".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("invalid config {}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    init_threads(cli.serial)?;
    fs::create_dir_all(&cli.out).map_err(|e| {
        Failure::Config(format!(
            "cannot create output directory {}: {e}",
            cli.out.display()
        ))
    })?;
    match cli.command {
        Command::Verify => commands::cmd_verify(&load_config(&cli.config)?, &cli.out),
        Command::Solve => commands::cmd_solve(&load_config(&cli.config)?, &cli.out),
        Command::Blowup => commands::cmd_blowup(&load_config(&cli.config)?, &cli.out),
        Command::Export => commands::cmd_export(&load_config(&cli.config)?, &cli.out),
        Command::Kelvin => commands::cmd_kelvin(&load_config(&cli.config)?, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Gate(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
