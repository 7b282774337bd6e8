//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by operators, solvers, the synthetic data pipeline and file I/O.
#[derive(Error, Debug)]
pub enum ConestaError {
    #[error("empty mask")]
    EmptyMask,

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("label at row {row} is {value}, labels must be 0 or 1")]
    InvalidLabel { row: usize, value: f64 },

    #[error("power iteration did not converge in {max_iter} iterations (last estimate {last})")]
    PowerIterationDiverged { max_iter: usize, last: f64 },

    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("unregularized smooth part has unknown curvature")]
    ZeroCurvature,

    #[error("TV weight is positive but the gradient operator has zero spectral norm")]
    DegenerateOperator,

    #[error("precision must be strictly positive, got {0}")]
    NonPositivePrecision(f64),

    #[error("continuation run {run} failed: {source}")]
    SolverFailure {
        run: usize,
        #[source]
        source: Box<ConestaError>,
    },

    #[error("region {index} does not fit inside the grid")]
    RegionOutsideGrid { index: usize },

    #[error("class {class} has fewer than 2 samples, cannot split")]
    ClassTooSmall { class: u8 },

    #[error("degenerate test set: only one class present")]
    DegenerateTestSet,

    #[error("slice index {index} out of range along axis {axis}")]
    SliceIndexOutOfRange { index: usize, axis: char },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("truncated payload: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },

    #[error("unsupported version: {0}")]
    UnsupportedVersion(String),

    #[error("dimension mismatch in file: {0}")]
    DimensionMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ConestaError>;
