use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("msh parse error at line {line}: {msg}")]
    MshParse { line: usize, msg: String },

    #[error("unsupported element type {kind} in msh file (only 3-node triangles are supported)")]
    UnsupportedElement { kind: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported polynomial degree {0} (supported: 1, 3)")]
    UnsupportedDegree(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite state detected at step {step}")]
    Divergence { step: usize },

    #[error("filter misuse: {0}")]
    Filter(String),

    #[error("conjugate gradient breakdown at iteration {iteration}: (D, HD) = {curvature:e}")]
    CgBreakdown { iteration: usize, curvature: f64 },

    #[error("linear solver failed to converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("reference solution: {0}")]
    Reference(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
