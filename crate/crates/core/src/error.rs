use std::path::PathBuf;

use crate::cube::Dims;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: Dims, actual: Dims },

    #[error("invalid dimensions {0}: every extent must be positive")]
    EmptyDims(Dims),

    #[error("data length {actual} does not match dimensions {dims} ({expected} values)")]
    DataLength {
        dims: Dims,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("non-positive denominator {value} at flat index {index} (voxel not covered by any patch)")]
    NonPositiveDenominator { index: usize, value: f64 },

    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid window configuration: {0}")]
    InvalidWindow(String),

    #[error("missing patch for origin ({0}, {1})")]
    MissingPatch(usize, usize),

    #[error("patch at origin ({0}, {1}) does not belong to the grid or is duplicated")]
    UnexpectedPatch(usize, usize),

    #[error("invalid rank {rank}: must be in 1..={max}")]
    InvalidRank { rank: usize, max: usize },

    #[error("invalid sparse budget {k}: must be below {entries} entries")]
    InvalidSparseBudget { k: usize, entries: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative variance {value} at flat index {index}")]
    NegativeVariance { index: usize, value: f64 },

    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    #[error("sample size {0} outside the supported range 3..=5000")]
    SampleSizeOutOfRange(usize),

    #[error("zero sample variance")]
    ZeroVariance,

    #[error("bad magic: expected \"HSIC1\", found {0:?}")]
    BadMagic(String),

    #[error("unknown dtype {0:?}")]
    UnknownDtype(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: usize, actual: usize },

    #[error("trailing bytes after payload: expected {expected} bytes, found {actual}")]
    TrailingBytes { expected: usize, actual: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier, used for one-line machine-readable reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::EmptyDims(_) => "empty-dims",
            Error::DataLength { .. } => "data-length",
            Error::NonFinite { .. } => "non-finite",
            Error::NonPositiveDenominator { .. } => "non-positive-denominator",
            Error::OutOfBounds(_) => "out-of-bounds",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::InvalidWindow(_) => "invalid-window",
            Error::MissingPatch(..) => "missing-patch",
            Error::UnexpectedPatch(..) => "unexpected-patch",
            Error::InvalidRank { .. } => "invalid-rank",
            Error::InvalidSparseBudget { .. } => "invalid-sparse-budget",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::NegativeVariance { .. } => "negative-variance",
            Error::TooFewSamples { .. } => "too-few-samples",
            Error::SampleSizeOutOfRange(_) => "sample-size",
            Error::ZeroVariance => "zero-variance",
            Error::BadMagic(_) => "bad-magic",
            Error::UnknownDtype(_) => "unknown-dtype",
            Error::MalformedHeader(_) => "malformed-header",
            Error::TruncatedPayload { .. } => "truncated-payload",
            Error::TrailingBytes { .. } => "trailing-bytes",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::ThreadPool(_) => "thread-pool",
        }
    }
}
