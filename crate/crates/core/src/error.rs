use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or layer dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An argument violates a precondition (bad label, empty input, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A text or binary input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A malformed row in a tabular input, with its 1-based line number.
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    /// A stream that must stay frozen was mutated.
    #[error("stream not frozen: {0}")]
    StreamNotFrozen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ShapeMismatch(_)
                | Error::InvalidArgument(_)
                | Error::Parse(_)
                | Error::MalformedRecord { .. }
        )
    }
}
