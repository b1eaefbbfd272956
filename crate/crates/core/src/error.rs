use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is numerically rank deficient (pivot {index}: |r| = {pivot:e})")]
    RankDeficient { index: usize, pivot: f64 },
    #[error("triangular matrix is numerically singular at diagonal entry {index}")]
    SingularTriangular { index: usize },
    #[error("input contains non-finite entries")]
    NonFinite,
    #[error("null-space vectors are numerically linearly dependent")]
    DependentVectors,
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("regularization core is numerically singular")]
    SingularCore,
    #[error("normal-equations matrix is not positive definite")]
    SingularSystem,
    #[error("no regularization parameter attains the requested residual: {0}")]
    NoRoot(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used in CSV output for failed runs.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::ShapeMismatch(_) => "SHAPE_MISMATCH",
            Error::RankDeficient { .. } => "RANK_DEFICIENT",
            Error::SingularTriangular { .. } => "SINGULAR_TRIANGULAR",
            Error::NonFinite => "NON_FINITE",
            Error::DependentVectors => "DEPENDENT_VECTORS",
            Error::NotSymmetric(_) => "NOT_SYMMETRIC",
            Error::BadDimension(_) => "BAD_DIMENSION",
            Error::SingularCore => "SINGULAR_CORE",
            Error::SingularSystem => "SINGULAR_SYSTEM",
            Error::NoRoot(_) => "NO_ROOT",
            Error::Parse { .. } => "PARSE_ERROR",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::Io(_) => "IO_ERROR",
        }
    }

    /// True for errors caused by bad input or configuration rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::InvalidConfig(_) | Error::Io(_) | Error::BadDimension(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
