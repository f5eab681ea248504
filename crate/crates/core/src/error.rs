use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("conditioning on null event: {0}")]
    NullEvent(String),
    #[error("enumeration needs {needed} states, cap is {cap}")]
    SizeCap { needed: u128, cap: usize },
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("undefined conditional row at label {0}")]
    UndefinedRow(i64),
    #[error("index {index} out of range for {len} items")]
    Index { index: usize, len: usize },
    #[error("quadrature did not converge: estimate {value}, error {error}")]
    Quadrature { value: f64, error: f64 },
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Validation { field: field.into(), reason: reason.into() }
}
