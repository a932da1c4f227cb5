use thiserror::Error;

use crate::state::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(#[from] Violation),

    /// A qubit marginal has a zero entry, so its polarization is infinite.
    #[error("polarization of qubit {qubit} is singular (marginal {p0} / {p1})")]
    SingularPolarization { qubit: usize, p0: f64, p1: f64 },

    /// A marginal entry is zero, so a log-ratio distance is undefined.
    #[error("distance {index} is singular: zero marginal probability")]
    SingularDistance { index: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
