//! Command-line front end for `hbac-core`.
//!
//! The binary is a thin wrapper around [`run`]; everything else is exposed so
//! exported artifacts can be read back programmatically.

pub mod args;
pub mod asymptote;
pub mod output;
pub mod simulate;
pub mod sweep;
pub mod trajectory_io;
pub mod verify;

use std::ffi::OsString;
use std::io;

use clap::{Parser, Subcommand};
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const VERIFICATION_FAILED: i32 = 2;
    pub const NOT_CONVERGED: i32 = 3;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] hbac_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Core(hbac_core::Error::InvalidParameter(_))
            | CliError::Core(hbac_core::Error::InvalidState(_)) => exit::USAGE,
            _ => exit::RUNTIME,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "hbac",
    version,
    about = "Partner-pairing heat-bath algorithmic cooling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate the sort/reset dynamics and export the trajectory.
    Simulate(simulate::SimulateArgs),
    /// Closed-form limits for one configuration.
    Asymptote(asymptote::AsymptoteArgs),
    /// Run randomized theorem checks.
    Verify(verify::VerifyArgs),
    /// Tabulate closed-form limits over a parameter grid.
    Sweep(sweep::SweepArgs),
}

/// Parses `argv` and runs the selected command, returning the exit code.
/// Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Asymptote(a) => asymptote::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Sweep(a) => sweep::run(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Io(err)) if err.kind() == io::ErrorKind::BrokenPipe => exit::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
