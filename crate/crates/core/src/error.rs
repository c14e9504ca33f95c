use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("singular matrix in {0}")]
    Singular(String),
    #[error("factorization breakdown: pivot {pivot} = {value:e}")]
    Breakdown { pivot: usize, value: f64 },
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("eigensolver failure: {0}")]
    Eigensolve(String),
    #[error("problem size {unknowns} exceeds the unknown budget {budget}")]
    Budget { unknowns: usize, budget: usize },
    #[error("level {level} (n = {n}): {source}")]
    Level {
        level: usize,
        n: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("unknown problem case '{0}'")]
    UnknownCase(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
