use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("pump ratio {0} is at or above the oscillation threshold (must be < 1)")]
    AboveThreshold(f64),

    #[error("intracavity amplitude is zero; polar phase undefined")]
    DegeneratePhase,

    #[error("closed-form outputs require zero pump offset, got {0} rad/s")]
    NonzeroPumpOffset(f64),

    #[error("linear system is singular (determinant {0:e})")]
    Singular(f64),

    #[error("integration step underflow: {0}")]
    StepUnderflow(String),
}

impl ModelError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
