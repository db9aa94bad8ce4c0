use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] wavespoof_core::Error),
}

impl CliError {
    pub fn file(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::File { path: path.into(), message: message.to_string() }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        CliError::Parse { path: path.into(), line, message: message.to_string() }
    }

    /// 1 for validation failures, 2 for runtime and data failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::Core(wavespoof_core::Error::InvalidParameter { .. }) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
