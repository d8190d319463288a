use thiserror::Error;

/// Errors raised by kernel construction and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("kernel must have at least one state")]
    Empty,
    #[error("matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 1")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state {state} out of range for {n} states")]
    InvalidState { state: usize, n: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid state function: {0}")]
    InvalidFunction(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("linear solve broke down at pivot {0}")]
    SingularSolve(usize),
    #[error("state set is not a closed class")]
    NotClosedClass,
    #[error("left null space on a closed class has dimension {0}, expected 1")]
    RankDeficiency(usize),
    #[error("measure is not invariant: residual {0:e}")]
    NotInvariant(f64),
    #[error("invariant measure puts mass {0:e} on transient states")]
    MassOnTransient(f64),
    #[error("measure is not ergodic")]
    NotErgodic,
    #[error("measures are equal")]
    EqualMeasures,
    #[error("density takes value {value} at state {state}, outside {{0, 2}}")]
    DensityLevelViolation { state: usize, value: f64 },
    #[error("kernel admits more than one invariant measure")]
    NotUnique,
    #[error("minorization violated at ({row}, {col})")]
    MinorizationViolated { row: usize, col: usize },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("certificate invariant violated: {0}")]
    CertificateViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
