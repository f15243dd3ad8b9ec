use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value {value} at node ({x}, {y}, {z})")]
    NonFiniteSample { value: f64, x: f64, y: f64, z: f64 },

    #[error("exponential overflow: 2*max(u) = {two_max_u:.3} at node ({x}, {y}, {z})")]
    ExpOverflow { two_max_u: f64, x: f64, y: f64, z: f64 },

    #[error("cap patches overlap: centers {i} and {j} at geodesic distance {dist:.6} <= {min_dist:.6}")]
    OverlappingCaps {
        i: usize,
        j: usize,
        dist: f64,
        min_dist: f64,
    },

    #[error("grid resolution L = {grid_l} insufficient for degree cutoff {l_max} (need L >= l_max + 1)")]
    GridResolution { grid_l: usize, l_max: usize },

    #[error("field has neither a gradient evaluator nor a spectral representation")]
    NoGradientRepresentation,

    #[error("retraction failed: adjusted density {value:.6e} <= 0 at node ({x}, {y}, {z})")]
    RetractionFailure { value: f64, x: f64, y: f64, z: f64 },

    #[error("Newton did not converge after {iters} iterations; residual trace: {trace:?}")]
    NewtonDivergence { iters: usize, trace: Vec<f64> },

    #[error("singular Jacobian near a = {a:.6}")]
    SingularJacobian { a: f64 },

    #[error("continuation stalled at a = {a:.6} with minimum step {min_step:.2e}")]
    ContinuationStall { a: f64, min_step: f64 },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("descent did not reduce the objective at iteration {iter}")]
    DescentStall { iter: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
