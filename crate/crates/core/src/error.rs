use thiserror::Error;

/// Errors raised by the workbench operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative radius {0}")]
    NegativeRadius(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular jet-matching system (internal bug)")]
    SingularSystem,

    #[error("weight is not certified over [0, {required}] (certified range: {certified:?})")]
    UncertifiedWeight {
        required: f64,
        certified: Option<f64>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field is not supported away from the outer boundary (|f| = {value:e} at r = {radius})")]
    BoundarySupported { radius: f64, value: f64 },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("decay fit window [{r1}, {r2}] is unusable: {reason}")]
    BadWindow { r1: f64, r2: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
