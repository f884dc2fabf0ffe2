use thiserror::Error;

/// Errors produced while building inputs, training maps, or reading files.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("negative dissimilarity at ({0}, {1})")]
    NegativeEntry(usize, usize),
    #[error("entries ({0}, {1}) and ({1}, {0}) differ beyond tolerance")]
    AsymmetryBeyondTolerance(usize, usize),
    #[error("diagonal entry ({0}, {0}) is not zero")]
    NonZeroDiagonal(usize),
    #[error("non-finite entry at ({0}, {1})")]
    NonFiniteEntry(usize, usize),
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid point cloud: {0}")]
    InvalidPointCloud(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid sequences: {0}")]
    InvalidSequences(String),

    #[error("k = {k} is too large for {n} points (need k < n)")]
    KTooLarge { k: usize, n: usize },
    #[error("neighbor graph is disconnected; component sizes {0:?} (try a larger k)")]
    DisconnectedNeighborGraph(Vec<usize>),
    #[error("graph is disconnected; component sizes {0:?}")]
    DisconnectedGraph(Vec<usize>),
    #[error("Kimura-2P distance undefined between sequences {0} and {1} (saturation)")]
    UndefinedDistance(usize, usize),
    #[error("sequences {0} and {1} share no comparable site")]
    NoComparableSites(usize, usize),

    #[error("iteration {t} outside 1..={total}")]
    IterationOutOfRange { t: usize, total: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("plot requires 2D data, got dimension {0}")]
    DimensionNot2D(usize),

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse { source_name: String, line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by invalid user input rather than a failure at run time.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { source_name: source_name.into(), line, message: message.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
