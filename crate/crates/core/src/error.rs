use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed parameters: {0}")]
    MalformedParameters(String),

    #[error("constraint violated: {constraint} ({detail})")]
    Constraint { constraint: String, detail: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("outside model domain: {0}")]
    Domain(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("focusing blow-up of trχ at ubar = {ubar:e} (node {node})")]
    Focusing { ubar: f64, node: usize },

    #[error("solver did not converge at ubar = {ubar:e}: {reason}")]
    NonConvergence { ubar: f64, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// `reason` is "missing" or names the mismatching configuration hashes.
    #[error("upstream artifact {path} is {reason}: run `{required}` first")]
    Dependency { required: String, path: PathBuf, reason: String },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("container format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn constraint(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Constraint {
            constraint: name.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
