use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse { path: PathBuf, line: Option<u64>, message: String },

    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },

    #[error("{0}")]
    Domain(String),

    #[error(transparent)]
    Core(#[from] ltebounds::Error),
}

impl CliError {
    pub fn parse(path: impl Into<PathBuf>, line: Option<u64>, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.into(), line, message: message.into() }
    }

    pub fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Schema { path: path.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit code: 3 for malformed input, 2 for an empty identified
    /// set, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Schema { .. } | CliError::Domain(_) => 3,
            CliError::Core(ltebounds::Error::Invalid(_)) | CliError::Core(ltebounds::Error::Domain(_)) => 3,
            CliError::Core(ltebounds::Error::Infeasible(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
