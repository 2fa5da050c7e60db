use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// A result that should be real or Hermitian failed its consistency check.
    #[error("numerical consistency error: {0}")]
    Numerical(String),

    /// The fixed-step integrator drifted beyond its accuracy budget.
    #[error("integration accuracy error: {0}")]
    IntegrationAccuracy(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("no wavefront found: {0}")]
    NoWavefront(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("unknown configuration keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}
