use thiserror::Error;

/// Errors raised across the analysis, solver and ingestion layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyncError {
    #[error("graph is disconnected")]
    DisconnectedGraph,

    #[error("graph needs at least two nodes (got {0})")]
    DegenerateGraph(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("natural frequencies do not sum to zero (mean {mean:e})")]
    NonZeroMeanFrequencies { mean: f64 },

    #[error("cohesiveness level {0} outside [0, pi/2)")]
    GammaOutOfRange(f64),

    #[error("graph is not acyclic")]
    NotAcyclic,

    #[error("graph is not a single cycle")]
    NotACycle,

    #[error("edge flow {value} at edge {edge} outside [-1, 1]")]
    PsiOutOfRange { edge: usize, value: f64 },

    #[error("Newton iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence {
        residual: f64,
        iterations: usize,
        theta: Vec<f64>,
    },

    #[error("reduced Jacobian is singular (condition number {0:e})")]
    SingularJacobian(f64),

    #[error("angles are not an equilibrium (residual {0:e})")]
    NotAnEquilibrium(f64),

    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),

    #[error("no synchronizing coupling found below {0}")]
    NoSyncInBracket(f64),

    #[error("connected realization not found after {0} attempts")]
    ConnectivityRetryExceeded(usize),

    #[error("network with margin below one not found after {0} attempts")]
    MarginRetryExceeded(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("inconsistent case: {0}")]
    InconsistentCase(String),

    #[error("case is not lossless: {0}")]
    NonLosslessCase(String),

    #[error("singular linear system")]
    SingularSystem,

    #[error("scenario has no adjustable sources")]
    NoAdjustableSources,

    #[error("contingency islands the network")]
    IslandingDetected,

    #[error("invalid level: {0}")]
    InvalidLevel(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SyncError {
    fn from(e: std::io::Error) -> Self {
        SyncError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SyncError>;
