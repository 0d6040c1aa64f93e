use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what} did not converge within {terms} terms")]
    NonConvergence { what: String, terms: usize },
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("pole of the q-Gamma function at t = {0}")]
    Pole(f64),
    #[error("argument outside the radius of convergence: {0}")]
    Radius(String),
    #[error("degenerate denominator parameter: {0}")]
    DegenerateDenominator(String),
    #[error("order out of range: {0}")]
    OrderOutOfRange(String),
}

impl QError {
    pub(crate) fn nonconv(what: impl Into<String>, terms: usize) -> Self {
        QError::NonConvergence {
            what: what.into(),
            terms,
        }
    }
}

pub type QResult<T> = Result<T, QError>;
