use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed WAV, chunk {chunk:?}: {reason}")]
    Wav { chunk: String, reason: String },

    #[error("measurement file line {line}, column {column}: {reason}")]
    MeasurementValue {
        line: usize,
        column: usize,
        reason: String,
    },

    #[error("measurement file: {0}")]
    MeasurementFormat(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("solver diverged at iteration {iteration} with step size {step}: objective {value:e} exceeds 1e6 x initial {initial:e}")]
    Diverged {
        iteration: usize,
        step: f64,
        value: f64,
        initial: f64,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn wav(chunk: &str, reason: impl Into<String>) -> Self {
        Error::Wav {
            chunk: chunk.to_string(),
            reason: reason.into(),
        }
    }
}
