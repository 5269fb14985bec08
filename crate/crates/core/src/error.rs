use thiserror::Error;

/// Errors surfaced by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Parameters outside their admissible range.
    #[error("configuration error: {0}")]
    Config(String),
    /// Two objects that must live on the same grid do not.
    #[error("mesh mismatch: expected {expected} nodes, got {found}")]
    MeshMismatch { expected: usize, found: usize },
    /// A structural invariant failed, e.g. a graph representation that is not maximal.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    /// An iterative solver did not reach its tolerance.
    #[error("nonconvergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
