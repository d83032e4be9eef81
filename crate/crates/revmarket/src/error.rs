use std::path::PathBuf;

/// Failure classes, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or input, detected before any compute.
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<revmarket_core::Error> for CliError {
    fn from(e: revmarket_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Input file problems; row errors carry the 1-based line number.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}:{line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Series {
        path: PathBuf,
        source: revmarket_core::Error,
    },
}

pub fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
