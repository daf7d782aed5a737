use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("rank-deficient matrix: |R[{index},{index}]| = {value:e} below tolerance {tolerance:e}")]
    RankDeficient {
        index: usize,
        value: f64,
        tolerance: f64,
    },

    /// Mirrors R's "singular matrix 'a' in solve".
    #[error("singular matrix in solve: pivot {pivot} = {value:e} below tolerance {tolerance:e}")]
    Singular {
        pivot: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("block {block}: {source}")]
    Block {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("IRLS did not converge within {0} iterations")]
    IrlsNoConvergence(usize),

    #[error("separation detected: max |coefficient| {0:e} exceeds divergence cap")]
    Separation(f64),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::NoConvergence(_) => "no_convergence",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Singular { .. } => "singular",
            Error::Block { .. } => "block",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::IrlsNoConvergence(_) => "irls_no_convergence",
            Error::Separation(_) => "separation",
            Error::Schema(_) => "schema",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
