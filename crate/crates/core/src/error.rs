use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency tuple {0:?} contains a zero entry")]
    ZeroFrequency(Vec<i64>),

    #[error("index {index} out of range 1..={bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("reality invariant violated at mode {mode}: defect {defect:e}")]
    RealityViolation { mode: i64, defect: f64 },

    #[error("aliasing budget exceeded: degree {degree} needs {needed} physical points, grid has {available}")]
    AliasingBudget {
        degree: usize,
        needed: usize,
        available: usize,
    },

    #[error("blow-up detected at t = {time}: max |u_hat| = {amplitude:e}")]
    BlowUp { time: f64, amplitude: f64 },

    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),

    #[error("insufficient snapshots: {0}")]
    InsufficientSnapshots(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
