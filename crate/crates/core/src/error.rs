use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource guard exceeded: {0}")]
    ResourceGuard(String),

    #[error("degenerate triangle at face {face} (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },

    #[error("graph is disconnected: vertex {vertex} unreachable from vertex {source_vertex}")]
    Disconnected { source_vertex: usize, vertex: usize },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge: {k_converged} pairs converged, worst residual {worst:e}")]
    NotConverged {
        k_converged: usize,
        worst: f64,
        best_residuals: Vec<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
