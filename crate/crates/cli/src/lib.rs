//! Batch front end for the `harqbeck-core` routines: reads a JSON
//! experiment config, runs one command and writes CSV or JSON rows.

pub mod commands;
pub mod config;
pub mod report;
pub mod selftest;

use std::path::PathBuf;

pub use commands::{cmd_ltat, cmd_optimize, cmd_outage, RunOptions};
pub use config::ExperimentConfig;
pub use report::{SweepReport, Value};
pub use selftest::{cmd_selftest, SelftestOptions, SuiteOutcome};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const NUMERIC: i32 = 2;
    pub const SELFTEST: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] harqbeck_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("writing output: {0}")]
    Csv(#[from] csv::Error),

    #[error("writing output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use harqbeck_core::Error as E;
        match self {
            CliError::Core(E::Dimension { .. } | E::InvalidParameter { .. } | E::InvalidModel(_)) => exit::VALIDATION,
            CliError::Core(_) => exit::NUMERIC,
            _ => exit::VALIDATION,
        }
    }
}
