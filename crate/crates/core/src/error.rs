use thiserror::Error;

pub type Result<T> = std::result::Result<T, RcError>;

#[derive(Debug, Error)]
pub enum RcError {
    /// A parameter set violates one of its documented invariants.
    #[error("invalid {field}: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("non-finite input value at index {index}")]
    NonFiniteInput { index: usize },

    /// Ridge-free training met a rank-deficient Gram matrix.
    #[error("singular system: Gram matrix is rank-deficient (retry with ridge > 0)")]
    Singular,

    #[error("target has zero variance")]
    ZeroVariance,

    #[error("series too short: need at least {needed} samples, have {have}")]
    TooShort { needed: usize, have: usize },

    #[error("integration diverged: non-finite sample at step {step}")]
    Divergence { step: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("sweep stopped after {completed} of {total} evaluations; rerun with resume")]
    Interrupted { completed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RcError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        RcError::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn mismatch(what: impl Into<String>, expected: usize, got: usize) -> Self {
        RcError::DimensionMismatch {
            what: what.into(),
            expected,
            got,
        }
    }

    /// True for errors caused by bad user-supplied configuration rather than
    /// by a failure while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            RcError::InvalidSpec { .. } | RcError::Parse { .. } | RcError::UnknownAxis(_)
        )
    }
}
