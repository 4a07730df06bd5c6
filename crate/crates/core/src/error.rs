use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An index or argument lies outside the object's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Caller supplied invalid parameters.
    #[error("invalid input: {0}")]
    Input(String),
    /// A numerical routine failed to reach its tolerance.
    #[error("numeric failure: {what} (residual {residual:e})")]
    Numeric { what: String, residual: f64 },
    /// The combination is meaningful but not implemented.
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
