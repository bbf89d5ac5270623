//! Crate-wide error type.

use thiserror::Error;

use crate::state::StateError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QftcError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("value {value} is outside the range of {format}")]
    Range { value: f64, format: String },
    #[error("{0}")]
    Unrepresentable(String),
    #[error("input vector is not normalized (norm {norm:.12})")]
    NotNormalized { norm: f64 },
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("circulant is not Hermitian")]
    NotHermitian,
    #[error("{needed} qubits exceed the budget of {limit}; use block-diagonal mode")]
    QubitBudget { needed: usize, limit: usize },
    #[error("sweep of {cases} cases exceeds the budget of {limit}")]
    SweepBudget { cases: u64, limit: u64 },
}

pub type Result<T, E = QftcError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> QftcError {
    QftcError::InvalidArgument(msg.into())
}
