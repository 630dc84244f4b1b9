use std::io;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate level-set gradient at ({x}, {y})")]
    DegenerateGradient { x: f64, y: f64 },

    #[error("closest-point projection did not converge after {iterations} iterations")]
    ProjectionFailure { iterations: usize },

    #[error("degenerate geometry: {0}")]
    GeometryDegenerate(String),

    #[error("linear solver failed: {reason} (residual {residual:e})")]
    SolverFailure { reason: String, residual: f64 },

    #[error("rank deficient: requested {requested} modes but only {available} eigenvalues exceed the cutoff {cutoff:e}")]
    RankDeficient {
        requested: usize,
        available: usize,
        cutoff: f64,
    },

    #[error("singular reduced system (condition estimate {condition:e})")]
    SingularReduced { condition: f64 },

    #[error("transport map not defined for {0}")]
    UnsupportedTransport(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
