use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Payloads are stored as `f64` regardless of the scalar type the caller
/// works in so that one error type serves every instantiation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An adaptive procedure ran out of budget before meeting its tolerance.
    #[error("{context}: no convergence (best estimate {estimate:e}, error bound {error:e})")]
    Convergence {
        context: String,
        estimate: f64,
        error: f64,
    },

    /// A documented precondition of the call does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The target characteristic function produces a non-monotone k_psi.
    #[error("model violation: k_psi increases on [{from}, {to}] ({detail})")]
    ModelViolation { from: f64, to: f64, detail: String },

    /// Requested value lies outside what can be attained at working precision.
    #[error("range error: {0}")]
    Range(String),

    /// Unknown name or malformed specification string.
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn require_finite<T: crate::Real>(x: T, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {x}")))
    }
}
