use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Each variant maps to a distinct CLI exit code, see [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("envelope violation: {0}")]
    Envelope(String),
    #[error("explosion guard: {0}")]
    Explosion(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Hypothesis(_) => 3,
            Error::Convergence(_) => 4,
            Error::Envelope(_) => 5,
            Error::Explosion(_) => 6,
            Error::Domain(_) | Error::Contract(_) => 7,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
