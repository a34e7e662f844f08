use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty scatterer field")]
    EmptyScattererField,

    #[error("degenerate ellipse: access point and mobile station coincide")]
    DegenerateEllipse,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("noiseless rank-deficient training")]
    NoiselessRankDeficient,

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("optimizer failure: {0}")]
    Optimizer(String),

    #[error("GEE trace decreased at step {step}: {previous} -> {current}")]
    MonotonicityViolation {
        step: usize,
        previous: f64,
        current: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
