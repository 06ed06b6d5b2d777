use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // imaging
    #[error("malformed PPM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PPM maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),
    #[error("truncated PPM pixel data: expected {expected} bytes, got {got}")]
    TruncatedPixelData { expected: usize, got: usize },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    // clustering / features / models
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("empty point set")]
    EmptySet,
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("degenerate batch: train-mode batch norm needs at least 2 rows")]
    DegenerateBatch,
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("stale forward cache does not match model")]
    StaleCache,
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("model has not been trained")]
    UntrainedModel,
    #[error("too few rows: need at least {need}, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("target has zero variance")]
    ZeroVariance,

    // optimizers
    #[error("non-finite gradient encountered")]
    NonFiniteGradient,
    #[error("non-finite objective encountered")]
    NonFiniteObjective,
    #[error("line search failed to satisfy the Armijo condition")]
    LineSearchFailure,

    // synthsky
    #[error("requested cloud coverage {requested} unreachable for the scene geometry")]
    UnreachableCoverage { requested: f64 },

    // manifest / persistence
    #[error("manifest is missing the 'path,ghi,label' header")]
    MissingHeader,
    #[error("malformed manifest row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("bad model file magic")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u16),
    #[error("corrupt model file section: {0}")]
    CorruptSection(String),

    // cli
    #[error("usage error: {0}")]
    Usage(String),
}
