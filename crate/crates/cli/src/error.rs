use std::path::{Path, PathBuf};

use serde::Serialize;
use weednet_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] weednet_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Weights {
        path: PathBuf,
        #[source]
        source: crate::weights::WeightError,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl AsRef<Path>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.as_ref().to_path_buf();
        move |source| CliError::Io { path, source }
    }

    pub fn json(path: impl AsRef<Path>) -> impl FnOnce(serde_json::Error) -> CliError {
        let path = path.as_ref().to_path_buf();
        move |e| CliError::Json { path, message: e.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(
                CoreError::InvalidParam(_)
                | CoreError::HeadMismatch { .. }
                | CoreError::BudgetExceeded { .. }
                | CoreError::Genotype(_),
            )
            | CliError::Config(_) => "config",
            CliError::Core(_) => "core",
            CliError::Io { .. } => "io",
            CliError::Image { .. } => "image",
            CliError::Csv { .. } => "csv",
            CliError::Json { .. } => "json",
            CliError::Weights { .. } => "weights",
        }
    }

    /// One-line machine-readable form, as printed on failure.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Line { error: self.kind(), message: self.to_string() })
            .expect("plain struct serializes")
    }
}
