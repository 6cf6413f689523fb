use thiserror::Error;

/// Errors raised by the sparse transform and its supporting primitives.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{q} is not coprime to {m}")]
    NotCoprime { q: u64, m: u64 },

    #[error("dense oracle refused: size {size} exceeds the limit of {limit}")]
    OracleTooLarge { size: u64, limit: u64 },

    #[error("index {index:?} out of range for axis size {axis_size}")]
    IndexOutOfRange { index: Vec<u64>, axis_size: u64 },

    #[error(
        "candidate support grew to {size} entries at modulus {modulus} (cap {cap}); \
         check mu and the sparsity bound"
    )]
    CandidateBlowup { size: usize, cap: usize, modulus: u64 },

    #[error("no measurement draw passed the contraction test after {attempts} attempts")]
    ContractionFailure { attempts: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
