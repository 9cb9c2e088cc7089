use thiserror::Error;

/// Errors raised across the library. CLI exit codes are derived from
/// [`TomoError::exit_code`].
#[derive(Debug, Error)]
pub enum TomoError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Input violates a named structural invariant (non-Hermitian matrix,
    /// POVM elements not summing to identity, ...).
    #[error("validation failed [{invariant}]: {detail}")]
    Validation {
        invariant: &'static str,
        detail: String,
    },

    #[error("boundary state: {0}")]
    BoundaryState(String),

    /// The loss penalizes a direction the tester cannot identify.
    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("zero gradient for scalar functional")]
    ZeroGradient,

    #[error("empty constraint set: {0}")]
    EmptyConstraintSet(String),

    #[error("optimizer did not converge after {iterations} iterations (objective {objective:e})")]
    NonConvergence { iterations: usize, objective: f64 },

    #[error("degenerate experiment: {0}")]
    Degenerate(String),

    #[error("unknown {what}: {name}")]
    Unknown { what: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl TomoError {
    pub(crate) fn validation(invariant: &'static str, detail: impl Into<String>) -> Self {
        TomoError::Validation {
            invariant,
            detail: detail.into(),
        }
    }

    /// 2 validation, 3 domain (boundary/support), 4 degenerate experiment.
    pub fn exit_code(&self) -> i32 {
        match self {
            TomoError::BoundaryState(_)
            | TomoError::SupportViolation(_)
            | TomoError::ZeroGradient
            | TomoError::NonConvergence { .. } => 3,
            TomoError::EmptyConstraintSet(_) | TomoError::Degenerate(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, TomoError>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(TomoError::DimensionMismatch { expected, got })
    }
}
