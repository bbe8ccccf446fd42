use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate sequence, supply sigma explicitly")]
    DegenerateSequence,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("sequence kernel rank below p (p = {p})")]
    RankDeficient { p: usize },

    #[error("singular kernel matrix after regularization")]
    SingularKernel,

    #[error("non-finite objective or gradient at iterate {iter}")]
    SolverNonFinite { iter: usize },

    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),

    #[error("at least two classes are required, found {0}")]
    SingleClass(usize),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("unsupported file extension: {0}")]
    UnsupportedExtension(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by numerical breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::RankDeficient { .. }
                | Error::SingularKernel
                | Error::SolverNonFinite { .. }
                | Error::DegenerateSequence
        )
    }
}
