use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("axis dominance error: {0}")]
    Dominance(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("degenerate histogram: {0}")]
    DegenerateHistogram(String),

    #[error("empty foreground mask: {0}")]
    Mask(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Geometry(_) => "geometry",
            Error::Dominance(_) => "dominance",
            Error::Parameter(_) => "parameter",
            Error::Usage(_) => "usage",
            Error::DegenerateHistogram(_) => "degenerate-histogram",
            Error::Mask(_) => "mask",
            Error::Numeric(_) => "numeric",
            Error::Format { .. } => "format",
            Error::Manifest(_) => "manifest",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
