use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the domain of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Requested battery power exceeds U²/(4·R_int).
    #[error("battery power {requested_w} W exceeds the deliverable limit {limit_w} W")]
    PowerLimitExceeded { requested_w: f64, limit_w: f64 },

    /// Model produced a physically inconsistent value (e.g. negative engine loss).
    #[error("model validation error: {0}")]
    ModelValidation(String),

    /// API misuse, such as stepping a finished episode.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("training diverged at episode {episode}, step {step}: {message}")]
    Training {
        episode: usize,
        step: usize,
        message: String,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by inputs (configuration, files, arguments)
    /// rather than by the model at run time.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Argument(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::Json(_)
        )
    }
}
