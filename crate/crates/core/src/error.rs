use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Malformed XML; `line` is 1-based.
    #[error("XML parse error at line {line}: {message}")]
    Xml { line: usize, message: String },

    /// A single trace, event or row could not be turned into a valid record.
    #[error("invalid record in {location}: {message}")]
    Record { location: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("solver did not converge after {iterations} iterations (violation {violation:.3e})")]
    Convergence { iterations: usize, violation: f64 },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub(crate) fn record(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Record {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user input (bad files, bad configuration)
    /// rather than by an internal failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Xml { .. }
                | Error::Record { .. }
                | Error::Config(_)
                | Error::Dimension { .. }
                | Error::Serde(_)
                | Error::Csv(_)
        )
    }
}
