use thiserror::Error;

/// Errors produced by the simulation, estimation and verification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("not-stable: dynamics matrix has an eigenvalue with real part {max_real_part} >= 0")]
    NotStable { max_real_part: f64 },

    #[error("not-contractive: sigma_max(I + eta A0) = {sigma_max} >= 1")]
    NotContractive { sigma_max: f64 },

    #[error("bad-subsampling: {0}")]
    BadSubsampling(String),

    #[error("no-inner-resolution: trajectory carries no inner-step samples")]
    NoInnerResolution,

    #[error("needs-ground-truth: {0}")]
    NeedsGroundTruth(&'static str),

    #[error("out-of-regime: {0}")]
    OutOfRegime(String),

    #[error("too-large: matrix dimension {dim} exceeds cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("lyapunov solver did not converge (residual {residual:e})")]
    SolverResidual { residual: f64 },

    #[error("empty result: {0}")]
    EmptyResult(&'static str),

    #[error("config: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
