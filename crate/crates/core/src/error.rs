use thiserror::Error;

/// Errors produced anywhere in the clustering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("sample contains a non-finite value at position {0}")]
    NonFiniteValue(usize),

    #[error("bootstrap needs at least {min} repetitions, got {got}")]
    InvalidReps { min: usize, got: usize },

    #[error("invalid dip table grid: {0}")]
    InvalidGrid(String),

    #[error("dip table has no entries")]
    EmptyTable,

    #[error("malformed dip table: {0}")]
    TableFormat(String),

    #[error("requested {k} clusters but dataset has only {n} points")]
    KTooLarge { k: usize, n: usize },

    #[error("subcluster centers {0} and {1} coincide")]
    CoincidentCenters(usize, usize),

    #[error("subcluster {0} is empty")]
    EmptySubcluster(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("expected 2-dimensional data, got {0} dimensions")]
    NotTwoDimensional(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Csv(format!("{other:?}")),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
