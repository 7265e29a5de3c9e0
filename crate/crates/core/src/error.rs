use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integrand or density produced NaN or an infinity.
    #[error("non-finite value {value} at {location}")]
    NonFinite { value: f64, location: String },

    /// A weighted integrand is singular on the evaluated set.
    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A volume-preserving variation did not have mean zero.
    #[error("constraint violated: {0}")]
    Constraint(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
