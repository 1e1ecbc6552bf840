use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate point: {0}")]
    DegeneratePoint(&'static str),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("validity mask exhausted (margin {margin} on an axis with {nodes} nodes)")]
    MaskExhausted { margin: usize, nodes: usize },

    #[error("pseudo-ball of radius {radius} leaves the valid region of the field")]
    BallOutsideMask { radius: f64 },

    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("monte carlo acceptance rate {rate:.3e} below 1e-3")]
    DegenerateSampling { rate: f64 },

    #[error("|u| = {value:.3e} below u_min = {u_min:.3e} at node {node}")]
    DivisionHazard { node: usize, value: f64, u_min: f64 },

    #[error("solver did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("solver stagnated at relative residual {residual:.3e} after {iterations} iterations")]
    Stagnation { iterations: usize, residual: f64 },

    #[error("degenerate frequency: H({radius}) = {height:.3e} below floor")]
    DegenerateFrequency { radius: f64, height: f64 },

    #[error("radius ordering violated: {0}")]
    RadiusOrdering(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("container format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
