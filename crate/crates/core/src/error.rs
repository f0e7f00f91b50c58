use thiserror::Error;

/// Errors raised by the analytics, samplers and statistical comparators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index points are not ordered: {0}")]
    NotOrdered(String),

    #[error(
        "{what} did not converge: partial value {partial:e}, error estimate {error_estimate:e}"
    )]
    NonConvergence {
        what: &'static str,
        partial: f64,
        error_estimate: f64,
    },

    #[error("log-magnitude overflow in {0}")]
    Overflow(&'static str),

    #[error("gamma pole at nonpositive integer argument {0}")]
    GammaPole(f64),

    #[error("quadrature tolerance not reached: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("path budget exceeded after {steps} operational-time steps")]
    BudgetExceeded { steps: usize },

    #[error("statistic unavailable: {0}")]
    Statistics(String),

    #[error("replica {index} failed: {source}")]
    Replica {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
