use std::path::PathBuf;

use thiserror::Error;

/// CLI failure, mapped onto a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Data {
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

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Data { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<sirfit_core::Error> for CliError {
    fn from(e: sirfit_core::Error) -> Self {
        use sirfit_core::Error as E;
        match e {
            E::InvalidInput(m) | E::Config(m) => CliError::Config(vec![m]),
            E::TooManySteps { .. } | E::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
