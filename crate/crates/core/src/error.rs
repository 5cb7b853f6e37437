use thiserror::Error;

/// Faults raised by integration, feedback and analysis routines.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("non-finite value in '{name}' (index {index}) at t = {t}")]
    NonFinite { index: usize, name: String, t: f64 },

    #[error("step size must be positive, got {0}")]
    BadStep(f64),

    #[error("indicator does not change sign over the step starting at t = {t}")]
    NoCrossing { t: f64 },

    #[error("sliding field undefined at t = {t}: equal normal components on both sides")]
    SlidingDegenerate { t: f64 },

    #[error("switching manifold normal vanishes at t = {t}")]
    DegenerateNormal { t: f64 },

    #[error("system defines no switching regions")]
    NoRegions,

    #[error("reference phase does not increase over the analysis span")]
    NonMonotonePhase,

    #[error("spectral slope undefined for a constant signal")]
    ConstantSignal,

    #[error("signal too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("all selection weights are zero")]
    ZeroWeights,

    #[error("histogram has no recorded values")]
    EmptyHistogram,

    #[error("{0}")]
    Invalid(String),
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::Invalid(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
