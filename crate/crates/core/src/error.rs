use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value violated a constraint. `field` names the offending input.
    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("domain: x = {x} outside tabulated range [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("integration failed at step {step} (t = {time}): {message}")]
    Integration { step: usize, time: f64, message: String },

    #[error("runaway detected at step {step} (t = {time}): |acceleration| = {acceleration:e} exceeds {threshold:e}")]
    Runaway {
        step: usize,
        time: f64,
        acceleration: f64,
        threshold: f64,
    },

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("classical orbit escaped at t = {time}")]
    Escape { time: f64 },

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors raised while stepping an equation of motion.
    pub fn is_runtime(&self) -> bool {
        match self {
            Error::Integration { .. } | Error::Runaway { .. } | Error::Escape { .. } => true,
            Error::Trajectory { source, .. } => source.is_runtime(),
            _ => false,
        }
    }
}
