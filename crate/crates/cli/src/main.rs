//! `coarray-doa`: geometry inspection, single-shot DOA estimation and
//! Monte Carlo RMSE sweeps.
//!
//! Exit codes: 0 success, 1 I/O or runtime failure, 2 invalid input.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coarray_doa::DoaError;

#[derive(Debug, Parser)]
#[command(name = "coarray-doa", version, about = "Sparse-array DOA estimation with variable-window coarray smoothing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print positions, coarray weights, UDOF, G and the shrinkage bound.
    Geometry {
        /// `ula N`, `nested N1 N2`, `super-nested N1 N2`, `mra N` or
        /// `custom P0 P1 ...`.
        #[arg(required = true, num_args = 1.., allow_negative_numbers = true)]
        spec: Vec<String>,
        /// Source count for the shrinkage bound.
        #[arg(long)]
        sources: Option<usize>,
    },
    /// Estimate DOAs once from simulated or recorded snapshots.
    Estimate {
        /// TOML config file.
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// MUSIC grid size.
        #[arg(long)]
        grid: Option<usize>,
        /// Report angles in degrees instead of sine units.
        #[arg(long)]
        degrees: bool,
        /// Write the pseudospectrum as CSV (`theta,value`) to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Machine-readable output instead of the text report.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Run a Monte Carlo RMSE sweep.
    Sweep {
        /// TOML config file.
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// MUSIC grid size.
        #[arg(long)]
        grid: Option<usize>,
        /// Result file; CSV also gets a `.json` sidecar. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    /// Exit code 1.
    Io(String),
    /// Exit code 2.
    Validation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Validation(m) => f.write_str(m),
        }
    }
}

impl From<DoaError> for CliError {
    fn from(e: DoaError) -> Self {
        match e {
            DoaError::Io(_) | DoaError::Numerical(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Geometry { spec, sources } => commands::geometry(&spec, sources),
        Command::Estimate {
            config,
            seed,
            grid,
            degrees,
            out,
            format,
        } => commands::estimate(
            &config,
            config::Overrides { seed, trials: None, grid },
            degrees,
            out.as_deref(),
            format,
        ),
        Command::Sweep {
            config,
            seed,
            trials,
            grid,
            out,
            format,
        } => commands::sweep(&config, config::Overrides { seed, trials, grid }, out.as_deref(), format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
