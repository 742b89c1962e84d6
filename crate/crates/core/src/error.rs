use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("observable index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate context {{{context}}}")]
    DuplicateContext { context: String },

    #[error("inequality has no observables")]
    EmptyInequality,

    #[error("assignment has length {got}, expected {expected}")]
    AssignmentLength { got: usize, expected: usize },

    #[error("enumeration of 2^{n} assignments exceeds the guard of 2^{guard}")]
    EnumerationGuard { n: usize, guard: usize },

    #[error("exact arithmetic overflow: {0}")]
    NumericOverflow(String),

    #[error("matrix is not Hermitian: max |M - M^dag| = {residual:.3e}")]
    NotHermitian { residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension {dim} outside supported range 1..={max}")]
    DimensionOutOfRange { dim: usize, max: usize },

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("observable tuple infeasible: {0}")]
    InfeasibleTuple(String),

    #[error("operators do not commute within tolerance (worst residual {residual:.3e})")]
    NonCommutingInput { residual: f64 },

    #[error("invalid rank {rank} for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("inequality is not normalized: classical maximum is {max}")]
    NotNormalized { max: String },

    #[error("assignment does not achieve classical value 1 (value {value})")]
    AssignmentNotOptimal { value: String },

    #[error("lift target dimension {target} is below source dimension {from}")]
    LiftDimension { target: usize, from: usize },

    #[error("no catalog entry for dimension {dim}")]
    EmptyCatalog { dim: usize },

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid Kraus set: {0}")]
    InvalidKrausSet(String),

    #[error("outcome {outcome} has probability below the cut ({p:.3e})")]
    ZeroProbabilityOutcome { outcome: usize, p: f64 },

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
