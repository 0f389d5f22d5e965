use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("axis {axis}: point count {n} is odd")]
    OddPointCount { axis: usize, n: usize },

    #[error("axis {axis}: point count {n} is below the minimum of 4")]
    TooFewPoints { axis: usize, n: usize },

    #[error("axis {axis}: interval [{a}, {b}] is empty or not finite")]
    DegenerateInterval { axis: usize, a: f64, b: f64 },

    #[error("grids of dimension {0} are not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("array of length {found} does not match grid of {expected} points")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense oracle limited to N <= {max}, got N = {n}")]
    OracleScaleExceeded { n: usize, max: usize },

    #[error("Hermitian eigendecomposition did not converge")]
    EigendecompositionFailure,

    #[error("non-finite value at step {step}, node {node}")]
    NonFiniteField { step: usize, node: usize },

    #[error("zeta series diverges for nu3 = {nu3} (need nu3 > 0)")]
    NonconvergentSeries { nu3: f64 },

    #[error("no admissible step within {radius} of {target}")]
    NoAdmissibleStepInRadius { target: f64, radius: f64 },

    #[error("time {time} is not an integer multiple of the step {step}")]
    TimeAlignment { time: f64, step: f64 },

    #[error("grids are incompatible: {0}")]
    GridIncompatible(String),

    #[error("no reference snapshot at time {time}")]
    TimeMismatch { time: f64 },

    #[error("slope fit is degenerate: {0}")]
    DegenerateFit(String),
}
