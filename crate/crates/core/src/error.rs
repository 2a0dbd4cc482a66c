use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("buffer length {actual} does not match shape element count {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("index {index:?} out of bounds for shape {shape:?}")]
    OutOfBounds { index: Vec<usize>, shape: Vec<usize> },
    #[error("slice range out of bounds: {0}")]
    RangeOutOfBounds(String),
    #[error("invalid tensor id {0:?}")]
    InvalidId(String),

    #[error("chunk dim {chunk_dim} must be in [1, {max}]")]
    BadChunkDim { chunk_dim: usize, max: usize },
    #[error("missing chunk {0}")]
    MissingChunk(usize),
    #[error("inconsistent metadata: {0}")]
    InconsistentMeta(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("slice restricts merged dimension {0}")]
    MergedDimSliced(usize),
    #[error("unknown id {0:?}")]
    UnknownId(String),

    #[error("inconsistent dense shape: {0}")]
    InconsistentShape(String),
    #[error("duplicate coordinate {0:?}")]
    DuplicateCoordinate(Vec<usize>),
    #[error("malformed pointer array: {0}")]
    MalformedPointers(String),
    #[error("rank {0} is too low for this layout")]
    RankTooLow(usize),
    #[error("bad block shape: {0}")]
    BadBlockShape(String),
    #[error("duplicate block at grid index {0:?}")]
    DuplicateBlock(Vec<usize>),

    #[error("table already exists at {0:?}")]
    AlreadyExists(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("corrupt column {0:?}")]
    CorruptColumn(String),
    #[error("truncated or malformed data: {0}")]
    Malformed(String),
    #[error("object {0:?} not found")]
    NotFound(String),

    #[error("density {0} is outside [0, 1]")]
    DensityTooHigh(f64),
    #[error("tensor with {0} elements exceeds the dense memory cap")]
    TooLargeForDense(usize),
    #[error("decoded tensor differs from source for layout {0}")]
    VerificationFailed(String),

    #[error("parse error at token {position} ({token:?}): {reason}")]
    Parse {
        token: String,
        position: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::Malformed(msg.into())
    }
}
