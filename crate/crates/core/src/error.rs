use thiserror::Error;

/// Errors raised by the estimation, selection and synthesis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MesaError {
    /// A constructor or operation argument violates a documented constraint.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// The recursion cannot continue, typically because the signal is
    /// perfectly predictable (zero prediction-error power).
    #[error("degenerate model: {0}")]
    Degenerate(String),

    /// An order-selection loss is not defined for the requested order.
    #[error("undefined loss: {0}")]
    UndefinedLoss(String),

    /// A numerical routine was asked for more accuracy than its inputs allow.
    #[error("insufficient accuracy: {0}")]
    Accuracy(String),

    #[error("unstable model: {0}")]
    Unstable(String),

    #[error("generation failed: {0}")]
    Generation(String),
}

impl MesaError {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        MesaError::Invalid {
            what,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, MesaError::Invalid { .. })
    }
}

pub type Result<T> = std::result::Result<T, MesaError>;
