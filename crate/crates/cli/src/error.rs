use std::path::{Path, PathBuf};

use lhfi::LhfiError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Failure of one pipeline stage, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: {message}")]
    Validation { stage: &'static str, message: String },

    #[error("{stage}: {message}")]
    Sampler { stage: &'static str, message: String },

    #[error("{stage}: {}: {source}", path.display())]
    Io { stage: &'static str, path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn validation(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Validation { stage, message: message.into() }
    }

    pub fn io(stage: &'static str, path: &Path, source: std::io::Error) -> Self {
        CliError::Io { stage, path: path.to_path_buf(), source }
    }

    /// Maps a library error raised while sampling or summarising: bad
    /// arguments are validation failures, everything else is a sampler
    /// failure.
    pub fn from_model(stage: &'static str, e: LhfiError) -> Self {
        match e {
            LhfiError::InvalidArgument(m) => CliError::Validation { stage, message: m },
            other => CliError::Sampler { stage, message: other.to_string() },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Sampler { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}
