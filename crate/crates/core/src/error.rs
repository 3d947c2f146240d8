use thiserror::Error;

/// Errors produced anywhere in the cascade pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("center mismatch: {left} vs {right}")]
    CenterMismatch { left: f64, right: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Taylor recurrence diverged at order {order}")]
    Divergence { order: usize },

    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("solve_constant needs f == 1; use solve_timedep for a time-dependent coefficient")]
    WrongSolver,

    #[error("t = {t} is outside the domain of {example}: requires {condition}")]
    OutOfDomain {
        example: &'static str,
        condition: &'static str,
        t: f64,
    },

    #[error("step size collapsed near t = {t}; blow-up suspected")]
    BlowUpSuspected { t: f64 },

    #[error("radius of convergence is indeterminate")]
    IndeterminateRadius,
}

pub type Result<T> = std::result::Result<T, Error>;
