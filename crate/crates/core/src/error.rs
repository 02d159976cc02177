use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("complete positivity violated (margin {margin})")]
    CompletePositivity { margin: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("relative phase undefined: amplitude {which} vanishes")]
    UndefinedPhase { which: &'static str },

    #[error("signal has too few oscillations ({sign_changes} sign changes, need at least 4)")]
    TooFewOscillations { sign_changes: usize },

    #[error("signal is constant")]
    ConstantSignal,

    #[error("vanishing denominator: {0}")]
    VanishingDenominator(&'static str),

    #[error("cross-check failed: {what} ({lhs} vs {rhs})")]
    CrossCheck { what: &'static str, lhs: f64, rhs: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
