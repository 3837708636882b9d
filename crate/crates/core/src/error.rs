use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index {index} out of range for {len} qubits (wire label {label})", label = index + 1)]
    IndexOutOfRange { index: usize, len: usize },

    #[error("capacity exceeded for {what}: {got} > {cap}")]
    Capacity { what: &'static str, got: usize, cap: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("mixed injection modes")]
    MixedInjectionModes,

    #[error("backend does not support {0}")]
    Unsupported(String),

    #[error("joint sign system is infeasible: {0}")]
    SignInfeasible(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

pub(crate) fn check_index(index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, len })
    }
}
