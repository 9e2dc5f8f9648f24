use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Fock basis with {mode_count} modes and cutoff {n_max} has dimension {dimension}, above the limit {limit}")]
    DimensionOverflow {
        mode_count: usize,
        n_max: usize,
        dimension: usize,
        limit: usize,
    },

    #[error("invalid basis request: {0}")]
    InvalidBasis(String),

    #[error("occupation tuple {occupations:?} exceeds the cutoff n_max = {n_max}")]
    CutoffExceeded { occupations: Vec<usize>, n_max: usize },

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("operator and state live on different bases")]
    BasisMismatch,

    #[error("mode index {mode} out of range for {mode_count} modes")]
    InvalidMode { mode: usize, mode_count: usize },

    #[error("invalid mode pair ({0}, {1})")]
    InvalidModePair(usize, usize),

    #[error("expected a {expected}-mode basis, got {got} modes")]
    WrongModeCount { expected: usize, got: usize },

    #[error("2j = {0} is not a non-negative integer")]
    InvalidSpin(f64),

    #[error("direction vector has norm {norm}, expected a unit vector")]
    NonUnitDirection { norm: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative duration {0}")]
    NegativeDuration(f64),

    #[error("state truncation weight {weight:e} exceeds the threshold {threshold:e}")]
    TruncationThreshold { weight: f64, threshold: f64 },

    #[error("at least {needed} shots required, got {got}")]
    TooFewShots { needed: usize, got: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}
