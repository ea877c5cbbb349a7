use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("assignment has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index ({i}, {j}) out of range for {n} variables")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("{n} variables exceeds the enumeration cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conflict list is empty")]
    EmptyConflictList,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("trace does not match matrix: {0}")]
    TraceMismatch(String),

    #[error("arithmetic overflow while scaling rational entries")]
    Overflow,
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
