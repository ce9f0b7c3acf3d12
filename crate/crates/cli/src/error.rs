use std::path::PathBuf;

use thiserror::Error;

use crate::scenario_file::ParseError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(ParseError),
    #[error("{path}: malformed trace: {message}")]
    Trace { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] rcta_core::Error),
    #[error("validation failed")]
    ValidationFailed,
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 1 for failed validation, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed => 1,
            _ => 2,
        }
    }
}
