use std::path::PathBuf;

use thiserror::Error;

use crate::types::ClassId;

pub type Result<T, E = LvpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LvpError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("embedding dimension must be at least 1")]
    ZeroDimension,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("cosine similarity undefined for a zero vector")]
    ZeroVector,

    #[error("class {0} has no label vectors")]
    EmptyClassEntry(ClassId),

    #[error("pool has no classes")]
    EmptyPool,

    #[error("task {0} has no records")]
    EmptyTask(usize),

    #[error("no training tasks supplied")]
    EmptyStream,

    #[error("{0}")]
    InvalidLabelVector(String),

    #[error("class {0} is present in more than one pool")]
    ClassConflict(ClassId),

    #[error("pools disagree on dimension: {expected} vs {found}")]
    PoolDimensionMismatch { expected: usize, found: usize },

    #[error("text-free class {0}: no text vector available for mixing")]
    TextFreeClass(ClassId),

    #[error("mixed vector for class {0} has zero norm")]
    DegenerateMixing(ClassId),

    #[error("class sets differ; missing from image pool: {missing_image:?}, missing from text pool: {missing_text:?}")]
    ClassSetMismatch {
        missing_image: Vec<ClassId>,
        missing_text: Vec<ClassId>,
    },

    #[error("no mixing parameters for class {0}")]
    MissingParams(ClassId),

    #[error("need at least 2 classes to train a classifier, found {0}")]
    TooFewClasses(usize),

    #[error("training diverged at step {step}: loss is {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("gate side '{0}' selects no label vectors")]
    EmptyGateSide(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("protocol/data mismatch: {0}")]
    ProtocolMismatch(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("file truncated while reading {0}")]
    Truncated(&'static str),

    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error("report parse error: {0}")]
    Report(#[from] serde_json::Error),
}

impl LvpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LvpError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that come from numerical breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            LvpError::Diverged { .. } | LvpError::DegenerateMixing(_) | LvpError::ZeroVector
        )
    }
}
