use thiserror::Error;

use crate::geometry::EllipsoidRec;

/// Errors raised by body construction, evaluation and the estimators.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition of an operation was not met (dimension mismatch, bad parameter).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An iterative solver stopped without reaching its tolerance.
    #[error("numeric failure in {what}: residual {residual:.3e}")]
    NumericFailure { what: String, residual: f64 },

    /// The John/Löwner solver ran out of rounds; the best feasible ellipsoid is attached.
    #[error("ellipsoid solver did not converge after {rounds} rounds (violation {violation:.3e})")]
    EllipsoidNotConverged {
        rounds: usize,
        violation: f64,
        best: Box<EllipsoidRec>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn numeric(what: impl Into<String>, residual: f64) -> Error {
    Error::NumericFailure {
        what: what.into(),
        residual,
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::contract(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
