use thiserror::Error;

use crate::constraints::FeasibilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is invalid: need an even number >= 8")]
    InvalidGrid(usize),

    #[error("dimension mismatch: expected {expected} samples, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: {left} vs {right} points per dimension")]
    GridMismatch { left: usize, right: usize },

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    #[error("field is not solenoidal (max |k.f| = {residual:e}, threshold {threshold:e})")]
    NotSolenoidal { residual: f64, threshold: f64 },

    #[error("field has a nonzero mean mode ({0:e})")]
    NonZeroMean(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter set is infeasible: {}", .0.summary())]
    Infeasible(Box<FeasibilityReport>),

    #[error("band limit violated: {0}")]
    BandLimit(String),

    #[error("time stepper became unstable at t = {time}: sup norm grew by {growth:e}")]
    Unstable { time: f64, growth: f64 },

    #[error("data norm {norm:e} exceeds the smallness threshold {epsilon:e}")]
    TooLarge { norm: f64, epsilon: f64 },

    #[error("Picard iteration did not converge: {0}")]
    NotConverged(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command line: 3 for numerical failure, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unstable { .. } | Error::NotConverged(_) => 3,
            _ => 2,
        }
    }
}
