use std::path::PathBuf;

use thiserror::Error;

/// Failures of the command-line layer.
#[derive(Debug, Error)]
pub enum CliError {
    /// Schema or value error at a location in the scenario document.
    #[error("{path}: {message}")]
    Scenario { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] mmrd::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Scenario {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
