//! `rosensweig`: command-line driver for the Rosensweig pattern engine.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid argument,
//! 3 no positive maximum of the dispersion relation, 4 convergence failure,
//! 5 I/O error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Settings;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "rosensweig", version, about = "Doubly periodic Rosensweig patterns near onset")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, env = "ROSENSWEIG_CONFIG")]
    config: Option<PathBuf>,

    #[command(flatten)]
    settings: Settings,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Dimensionless numbers alpha, beta, gamma from physical inputs (JSON).
    Dimensionless,
    /// Samples of the dispersion relation r(|k|) with the maximum flagged (CSV).
    Dispersion,
    /// Branch coefficients and classification for one pattern (JSON).
    Branch,
    /// Sign of gamma2 over a two-parameter grid (CSV).
    Signmap,
    /// Second-order reconstruction of the free surface on the base cell (CSV).
    Surface,
}

fn run(cli: Cli) -> CliResult<()> {
    let settings = config::load(cli.settings, cli.config.as_deref())?;
    if let Some(seed) = settings.seed {
        eprintln!("seed {seed}");
    }
    let output = match cli.command {
        Command::Dimensionless => commands::dimensionless(&settings)?,
        Command::Dispersion => commands::dispersion(&settings)?,
        Command::Branch => commands::branch(&settings)?,
        Command::Signmap => commands::signmap(&settings)?,
        Command::Surface => commands::surface(&settings)?,
    };
    output.emit(settings.out.as_ref())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
