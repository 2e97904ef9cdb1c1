//! Experiment runner for the stochastic Schrödinger LDG solver: config
//! parsing, a thread-parallel sample executor, CSV and plot-script output,
//! the noise-path dump format and subcommand dispatch.

pub mod commands;
pub mod config;
pub mod dump;
pub mod exec;
pub mod output;
pub mod plots;

use std::path::PathBuf;

pub use commands::{dispatch, Outcome};
pub use config::{Command, RunConfig};
pub use exec::RayonExecutor;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error("{0}")]
    Study(#[from] sldg_core::Error),
}

impl CliError {
    /// Process exit code: 1 for config and IO problems, 2 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Study(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
