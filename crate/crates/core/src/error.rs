use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Operand shapes do not conform.
    #[error("shape error: {0}")]
    Shape(String),
    /// A hyper-parameter or argument is outside its valid range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A non-finite value appeared during computation.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Input data violates a domain requirement (e.g. negative entries).
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
