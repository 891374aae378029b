//! Error type shared by all modules.

use thiserror::Error;

/// Domain errors. The variant name is the stable, machine-readable error
/// name reported by the CLI on standard error.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("DivisionByZero: {0}")]
    DivisionByZero(String),
    #[error("FieldMismatch: {0}")]
    FieldMismatch(String),
    #[error("FieldError: {0}")]
    FieldError(String),
    #[error("PrecisionFailure: {0}")]
    PrecisionFailure(String),
    #[error("Unsupported: {0}")]
    Unsupported(String),
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("NumericalFailure: {0}")]
    NumericalFailure(String),
    #[error("BudgetExceeded: {0}")]
    BudgetExceeded(String),
    #[error("ConstraintViolation: {0}")]
    ConstraintViolation(String),
    #[error("NotPositiveDefinite: {0}")]
    NotPositiveDefinite(String),
    #[error("NotFullLattice: {0}")]
    NotFullLattice(String),
    #[error("InvalidScaling: {0}")]
    InvalidScaling(String),
    #[error("NotIdempotent: {0}")]
    NotIdempotent(String),
    #[error("NotInvertible: {0}")]
    NotInvertible(String),
    #[error("NotPositive: {0}")]
    NotPositive(String),
    #[error("CompositionError: {0}")]
    CompositionError(String),
    #[error("PositivityViolation: {0}")]
    PositivityViolation(String),
    #[error("ZeroModule: {0}")]
    ZeroModule(String),
    #[error("NotReconstructing: {0}")]
    NotReconstructing(String),
    #[error("ModeError: {0}")]
    ModeError(String),
    #[error("InvalidTwoCategory: {0}")]
    InvalidTwoCategory(String),
    #[error("ParseError: {0}")]
    Parse(String),
}

impl Error {
    /// Stable error name (the variant identifier).
    pub fn name(&self) -> &'static str {
        match self {
            Error::DivisionByZero(_) => "DivisionByZero",
            Error::FieldMismatch(_) => "FieldMismatch",
            Error::FieldError(_) => "FieldError",
            Error::PrecisionFailure(_) => "PrecisionFailure",
            Error::Unsupported(_) => "Unsupported",
            Error::InvalidInput(_) => "InvalidInput",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::ConstraintViolation(_) => "ConstraintViolation",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::NotFullLattice(_) => "NotFullLattice",
            Error::InvalidScaling(_) => "InvalidScaling",
            Error::NotIdempotent(_) => "NotIdempotent",
            Error::NotInvertible(_) => "NotInvertible",
            Error::NotPositive(_) => "NotPositive",
            Error::CompositionError(_) => "CompositionError",
            Error::PositivityViolation(_) => "PositivityViolation",
            Error::ZeroModule(_) => "ZeroModule",
            Error::NotReconstructing(_) => "NotReconstructing",
            Error::ModeError(_) => "ModeError",
            Error::InvalidTwoCategory(_) => "InvalidTwoCategory",
            Error::Parse(_) => "ParseError",
        }
    }
}
