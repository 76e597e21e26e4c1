use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("axis label {0:?} is not allowed here")]
    InvalidAxis(crate::spinalg::AxisLabel),

    #[error("refusing dense construction for n = {n}: dimension {dim} exceeds the limit for this operation (n <= {max_n})")]
    TooLarge { n: usize, dim: usize, max_n: usize },

    #[error("integer overflow evaluating {0}")]
    Overflow(String),

    #[error("eigendecomposition failed for block {block}: {reason}")]
    Eigen { block: String, reason: String },

    #[error("singular Bethe configuration: {0}")]
    Singularity(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("continuation failed at g+ = {g_plus}: {reason}")]
    Tracking { g_plus: f64, reason: String },

    #[error("non-finite values: {0}")]
    NonFinite(String),

    #[error("density matrix lost positivity: lowest eigenvalue {min_eigenvalue:.3e} at t = {time}")]
    Positivity { min_eigenvalue: f64, time: f64 },

    #[error("Bethe vector vanishes for this root configuration")]
    ZeroVector,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("eigenvalue matching failed on interval [{lo}, {hi}] after {refinements} refinements")]
    Matching { lo: f64, hi: f64, refinements: usize },

    #[error("{excluded} of {total} trajectories were non-finite")]
    Trajectories { excluded: usize, total: usize },
}
