use std::path::PathBuf;

use thiserror::Error;

/// Failures of a run, each tied to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("config {path} is malformed: {source}")]
    ConfigParse {
        path: PathBuf,
        source: toml::de::Error,
    },

    #[error("config rejected: {0}")]
    ConfigInvalid(diracloc::Error),

    #[error("numerics inconclusive: {0}")]
    Inconclusive(String),

    #[error("numerical failure: {0}")]
    Numerics(diracloc::Error),

    #[error("output error on {path}: {message}")]
    Output { path: PathBuf, message: String },

    #[error("thread pool: {0}")]
    Threads(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigRead { .. }
            | CliError::ConfigParse { .. }
            | CliError::ConfigInvalid(_)
            | CliError::Threads(_) => 1,
            CliError::Inconclusive(_) | CliError::Numerics(_) | CliError::Output { .. } => 2,
        }
    }
}

impl From<diracloc::Error> for CliError {
    fn from(e: diracloc::Error) -> Self {
        use diracloc::Error as E;
        match e {
            E::InvalidParameter(_) | E::PotentialRejected(_) | E::DimensionCap { .. } => {
                CliError::ConfigInvalid(e)
            }
            E::ContourUnsafe(_) | E::NonIntegerIndex { .. } => {
                CliError::Inconclusive(e.to_string())
            }
            _ => CliError::Numerics(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
