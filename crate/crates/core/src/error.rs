use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A special function or distribution was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input is well-formed but carries no information (e.g. all amplitudes zero).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The moment chain produced a non-positive normalization factor.
    #[error("numeric instability: {0}")]
    NumericInstability(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
