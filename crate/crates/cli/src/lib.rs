//! Driver behind the `mpp-lab` binary: configs, commands, suites and output.

pub mod app;
pub mod commands;
pub mod config;
pub mod output;
pub mod suites;

use std::path::PathBuf;

/// Errors that end a command, each with a stable exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Numeric(mpp_lab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Numeric(_) => 1,
        }
    }
}

impl From<mpp_lab::Error> for CliError {
    fn from(e: mpp_lab::Error) -> Self {
        use mpp_lab::Error as E;
        match e {
            E::InvalidParameter { name, reason } => CliError::Config(format!("{name}: {reason}")),
            E::DimensionMismatch { .. } | E::NotOrdered(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
