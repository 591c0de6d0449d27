use thiserror::Error;

/// Errors raised by the channel, outage and optimizer routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid channel model: {0}")]
    InvalidModel(String),

    #[error("real covariance is not positive definite within the jitter budget (last jitter {jitter:e})")]
    Factorization { jitter: f64 },

    #[error("real covariance is singular; the density is not absolutely continuous")]
    SingularCovariance,

    #[error("rates {0:?} are too close for the closed-form kernel; use the quadrature path")]
    NearEqualRates(Vec<f64>),

    #[error("quadrature did not converge after {depth} refinements (best estimate {estimate}, last relative change {change:e})")]
    Quadrature {
        depth: u32,
        estimate: f64,
        change: f64,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("non-finite objective value at rate {0}")]
    NonFinite(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
