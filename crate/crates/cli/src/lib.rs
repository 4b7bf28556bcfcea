//! Experiment runners behind the `endspin` command line.
//!
//! Every runner is a pure function of its arguments; parallel work is merged
//! in key order so the thread count never changes the output bytes.

pub mod args;
pub mod manifest;
pub mod output;
pub mod runs;

pub use args::{Cli, Command};
pub use manifest::RunManifest;
pub use runs::*;

use endspin_core::Error as CoreError;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Usage = 1,
    Validation = 2,
    Numerical = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Usage(_) => Exit::Usage,
            CliError::Validation(_) => Exit::Validation,
            CliError::Numerical(_) => Exit::Numerical,
            CliError::Io(_) => Exit::Usage,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NumericalFault(_)
            | CoreError::UnexpectedDegeneracy(_)
            | CoreError::NoMaximum { .. } => CliError::Numerical(e.to_string()),
            CoreError::NotPurifiable(_) | CoreError::NotConverged { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
