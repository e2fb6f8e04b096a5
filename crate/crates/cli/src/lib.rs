//! Library half of the `gibbs-tree` command-line tool.
//!
//! Exit codes: 0 success, 1 internal error, 2 solver hypothesis violated,
//! 3 enumeration budget exceeded, 64 usage error, 74 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

pub mod args;
pub mod commands;
pub mod records;
pub mod svg;

pub use args::{Cli, Command, SetSelector};
pub use commands::{solve_records, sweep_records, theta_grid, verify_entries, VerifyEntry};
pub use records::{read_csv, write_csv, SolutionEntry, SweepRecord, CSV_HEADER};

/// Overrides the oracle's enumeration budget.
pub const MAX_ENUM_ENV: &str = "GIBBS_TREE_MAX_ENUM";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Malformed data read from a file.
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] gibbs_tree_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use gibbs_tree_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Input(_) => EXIT_USAGE,
            CliError::Model(E::Hypothesis(_)) => EXIT_HYPOTHESIS,
            CliError::Model(E::BudgetExceeded { .. } | E::TreeTooLarge { .. }) => EXIT_BUDGET,
            CliError::Model(E::InvalidParams(_) | E::InvalidSet(_) | E::InvalidConfig(_)) => EXIT_USAGE,
            CliError::Model(_) | CliError::Json(_) => EXIT_INTERNAL,
            CliError::Io { .. } => EXIT_IO,
            CliError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(_) => EXIT_IO,
                _ => EXIT_USAGE,
            },
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match commands::dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
