use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration value violates an invariant. Carries the key name.
    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("rejection sampling gave up after {attempts} attempts (area too small for the exclusion radius)")]
    SamplingExhausted { attempts: usize },

    #[error("fault pattern `{pattern}` is incompatible with B = {requested}: {reason}")]
    FaultPattern {
        pattern: &'static str,
        requested: usize,
        reason: String,
    },

    #[error("channel is identically zero")]
    ZeroChannel,

    #[error("matrix is not numerically Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("signal threshold gamma = {gamma:e} is not achievable (best relaxed signal {best:e})")]
    GammaInfeasible { gamma: f64, best: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
