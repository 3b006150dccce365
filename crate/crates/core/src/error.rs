use thiserror::Error;

/// Errors raised by grid construction, estimators, and experiment drivers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A precondition on an argument was violated (bad parameter, malformed
    /// ladder, off-grid time, unknown name, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Data fell outside the region an operation requires (sample outside the
    /// space grid, field support touching the grid boundary, missing margin).
    #[error("out of range: {0}")]
    OutOfRange(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn range(msg: impl Into<String>) -> Self {
        Error::OutOfRange(msg.into())
    }
}
