use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no training data")]
    EmptyData,
    #[error("empty input")]
    EmptyInput,
    #[error("cannot fit encoding maps on an empty corpus")]
    EmptyCorpus,
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample weights must be non-negative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },
    #[error("normal equations are singular; use a positive ridge")]
    SingularSystem,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("file is empty: {}", .0.display())]
    EmptyFile(PathBuf),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("test count {test_count} must be smaller than dataset size {n}")]
    TestCountTooLarge { test_count: usize, n: usize },
    #[error("dataset has records without a label")]
    MissingLabels,

    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    VersionUnsupported(u32),
    #[error("model file checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("model file is corrupt: {0}")]
    CorruptModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures in reading or validating a persisted model.
    pub fn is_model_file_error(&self) -> bool {
        matches!(
            self,
            Error::BadMagic
                | Error::VersionUnsupported(_)
                | Error::ChecksumMismatch { .. }
                | Error::CorruptModel(_)
        )
    }
}
