use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("qubit count {0} is not divisible by 3")]
    NotDivisibleByThree(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not a valid density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("basis is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("Kraus set is not complete (max deviation {0:e})")]
    IncompleteKraus(f64),

    #[error("{n} qubits exceeds the limit of {max} for exact enumeration")]
    TooLarge { n: usize, max: usize },

    #[error("qubit {0} was already corrected")]
    DoubleCorrection(usize),

    #[error("unknown qubit {0}")]
    UnknownQubit(usize),

    #[error("missing logical representatives")]
    MissingLogicalReps,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
