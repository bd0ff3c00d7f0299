use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mode index {index} out of range for a system with {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("composite dimension {dim} exceeds the configured cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("operator dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("eigensolver did not converge after {iterations} iterations ({converged} of {requested} pairs converged)")]
    NoConvergence {
        iterations: usize,
        converged: usize,
        requested: usize,
    },

    #[error("label {0} is not a valid bare state of this system")]
    UnknownLabel(String),

    #[error("lost track of dressed state {label} (overlap {overlap:.3})")]
    TrackingLost { label: String, overlap: f64 },

    #[error("no sign change of J_zz inside the sweep range")]
    NoRoot,

    #[error("{0}")]
    Unreachable(String),

    #[error("vanishing gap between {0} and a leakage state")]
    ZeroGap(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("step size underflow at t = {t} ns (step {step:e} ns)")]
    StepUnderflow { t: f64, step: f64 },

    #[error("norm drift {drift:e} exceeds tolerance at t = {t} ns")]
    NormDrift { t: f64, drift: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("basis ordering mismatch between process matrices")]
    BasisMismatch,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input or configuration rather than
    /// by a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::ModeOutOfRange { .. }
                | Error::DimensionTooLarge { .. }
                | Error::UnknownLabel(_)
                | Error::Parse(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
