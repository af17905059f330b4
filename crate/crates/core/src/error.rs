use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("degenerate epsilon range: beta = {beta} must be strictly less than alpha = {alpha}")]
    DegenerateRange { beta: f64, alpha: f64 },

    #[error("no real zero-deviation phase exists for epsilon = {0} (requires epsilon <= 3/4)")]
    NoZeroDeviationPhase(f64),

    #[error("theta = {0} is outside the open interval (0, pi/2)")]
    ThresholdDomain(f64),

    #[error("subdivision count must be even and at least 2, got {0}")]
    Subdivisions(usize),

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("start and target indices must differ (both {0})")]
    SameIndices(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("matrix is not unitary (max entry residual {0:e})")]
    NotUnitary(f64),

    #[error("recursion depth {depth} at dimension {dim} exceeds cap (depth <= {max_depth}, dim <= {max_dim})")]
    RecursionCap {
        depth: usize,
        dim: usize,
        max_depth: usize,
        max_dim: usize,
    },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}
