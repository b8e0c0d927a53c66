use thiserror::Error;

/// Errors raised by the auditing library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: {left} has {left_len} entries, {right} has {right_len}")]
    LengthMismatch {
        left: &'static str,
        left_len: usize,
        right: &'static str,
        right_len: usize,
    },

    #[error("training diverged at step {step}: {reason}")]
    Training { step: usize, reason: String },

    #[error("mechanism `{mechanism}` failed: {reason}")]
    Mechanism { mechanism: String, reason: String },

    #[error("trace format error: {0}")]
    TraceFormat(String),
}

impl AuditError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        AuditError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = AuditError> = std::result::Result<T, E>;
