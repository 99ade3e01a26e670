use thiserror::Error;

/// Errors produced while training, loading or evaluating models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("insufficient data: need {needed} tokens but only {available} available (short by {})", needed - available)]
    InsufficientData { needed: usize, available: usize },

    #[error("line {line}: malformed model file: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: unsupported model format version `{found}` (this build reads version {expected})")]
    Version { line: usize, found: String, expected: u32 },

    #[error("line {line}: duplicate entry for `{entry}`")]
    Duplicate { line: usize, entry: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(message: impl Into<String>) -> Error {
    Error::InvalidArgument(message.into())
}
