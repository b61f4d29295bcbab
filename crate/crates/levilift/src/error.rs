//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
///
/// `Precision` and the input-shaped variants map to CLI exit code 2;
/// failed mathematical checks are reported, not raised, and map to exit
/// code 1 at the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field description: {0}")]
    FieldDesc(String),

    #[error("operands belong to different field descriptions")]
    MismatchedField,

    #[error("division by zero in the field")]
    DivisionByZero,

    #[error("element does not lie in the base field: {0}")]
    NotInBaseField(String),

    #[error("precision exhausted: {0}")]
    Precision(String),

    #[error("invalid torus frame: {0}")]
    Frame(String),

    #[error("invalid twisted Levi: {0}")]
    Levi(String),

    #[error("dual element violates a precondition: {0}")]
    Dual(String),

    #[error("quasicharacter operation failed: {0}")]
    Character(String),

    #[error("character datum is malformed: {0}")]
    Datum(String),

    #[error("lifting step failed: {0}")]
    Lift(String),

    #[error("strategy override rejected at step {step}: {reason}")]
    Strategy { step: usize, reason: String },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors that indicate bad input or exhausted precision
    /// rather than a failed mathematical check.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}
