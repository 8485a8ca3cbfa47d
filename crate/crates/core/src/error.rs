use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the domain of a physical conversion.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{path}:{line}: field `{field}`: {message}")]
    Ingest {
        path: PathBuf,
        line: u64,
        field: String,
        message: String,
    },

    /// Irradiance data does not cover the requested photoperiod window.
    #[error("data gap on {date}: missing steps {missing:?}")]
    Gap { date: String, missing: Vec<usize> },

    #[error("model file {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("no trained {kind} model for month {month}; run `helios train --model {kind}` first")]
    MissingModel { kind: String, month: u32 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used by the command-line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Validation(_) => "validation",
            Error::Ingest { .. } => "ingest",
            Error::Gap { .. } => "gap",
            Error::Schema { .. } => "schema",
            Error::Divergence { .. } => "divergence",
            Error::MissingModel { .. } => "missing_model",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Whether the error stems from user-provided input rather than an internal fault.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Divergence { .. })
    }
}
