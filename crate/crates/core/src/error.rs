use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed arguments: wrong lengths, negative quantities, empty inputs.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mathematical function evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration field failed validation or the file could not be parsed.
    #[error("config error: {field}: {message}")]
    Config { field: String, message: String },

    /// The LP solver returned something a well-formed planner instance cannot produce.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
