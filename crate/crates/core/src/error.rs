use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite integrand value at a quadrature node.
    #[error("evaluation error: integrand is {value} at r = {radius:e}")]
    Evaluation { radius: f64, value: f64 },

    #[error("resolution error: {reason} (need at least {required} nodes, have {available})")]
    Resolution {
        reason: String,
        required: usize,
        available: usize,
    },

    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
