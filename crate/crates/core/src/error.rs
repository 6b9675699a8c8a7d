use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),

    #[error("degenerate dictionary: every column has zero empirical norm")]
    DegenerateDictionary,

    #[error("correlation undefined: column {0} has zero empirical norm")]
    UndefinedCorrelation(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration budget exceeded: {supports} supports > limit {limit}; use greedy search or a smaller max_support")]
    Budget { supports: u128, limit: u128 },

    #[error("no convergence after {iterations} iterations (worst violation {worst:e})")]
    NonConvergence { iterations: usize, worst: f64 },

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips any replicate wrapping and returns the originating error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Replicate { source, .. } => source.root(),
            other => other,
        }
    }
}
