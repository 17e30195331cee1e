use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error classes shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a structural precondition (norm, trace, shape, range).
    #[error("validation: {0}")]
    Validation(String),
    /// Matrix or vector dimensions do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An operation was applied to a state of the wrong stage.
    #[error("sequencing: {0}")]
    Sequencing(String),
    /// The integrator detected unacceptable drift; reduce the step size.
    #[error("integration: {0}")]
    Integration(String),
    /// A resolvent or linear solve hit a (near-)singular system.
    #[error("singularity: {0}")]
    Singularity(String),
    /// Text input could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// A run-level invariant was breached.
    #[error("invariant: {0}")]
    Invariant(String),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
