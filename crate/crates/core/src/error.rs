use thiserror::Error;

use crate::linalg::BasisTag;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator contains non-finite entries")]
    NonFinite,

    #[error("basis mismatch: {left:?} vs {right:?}")]
    BasisMismatch { left: BasisTag, right: BasisTag },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid state vector: norm^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("ill-conditioned linear inversion (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("process is not trace preserving (trace deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("time step {dt:e} s exceeds the stability bound {max_dt:e} s")]
    StepTooCoarse { dt: f64, max_dt: f64 },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("missing pulse for gate `{0}`")]
    MissingPulse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
