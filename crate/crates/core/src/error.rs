use thiserror::Error;

/// Failure categories. Each maps onto one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration (exit code 1).
    #[error("invalid input: {0}")]
    Invalid(String),
    /// File system or format problems (exit code 2).
    #[error("io: {0}")]
    Io(String),
    /// A computation could not produce a meaningful result (exit code 3).
    #[error("numerical: {0}")]
    Numerical(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) => 1,
            Error::Io(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
