use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("table shape mismatch: {0}")]
    Shape(String),
    #[error("refinedness violated at column {column}, row {row}: a^{{i+1}} != d - b^i")]
    RefinednessViolation { column: usize, row: usize },
    #[error("duplicate vanishing order in column {column}, subcolumn {subcolumn}")]
    DuplicateVanishing { column: usize, subcolumn: char },
    #[error("a + b exceeds d at column {column}, row {row}")]
    SumExceedsD { column: usize, row: usize },
    #[error("negative vanishing order at column {column}, row {row}")]
    NegativeOrder { column: usize, row: usize },
    #[error("column {column} has {count} rows summing to d, at most one allowed on a genus-1 component")]
    TooManyFullRows { column: usize, count: usize },
    #[error("genus-0 column {column}, row {row} sums below d")]
    DeficientGenusZero { column: usize, row: usize },
    #[error("rows are not in canonical order: a^1 must be strictly increasing")]
    RowOrder,
    #[error("invalid series: defect total {total} exceeds rho = {rho}")]
    InvalidSeries { total: i64, rho: i64 },
    #[error("invalid twist vector: {0}")]
    InvalidTwist(String),
    #[error("default multidegree undefined: {0}")]
    DefaultUndefined(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("search space too large: {0}")]
    TooLarge(String),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
