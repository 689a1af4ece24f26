use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("need at least {needed} distinct points, found {found}")]
    TooFewDistinctPoints { needed: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("token sequence is already de-duplicated")]
    AlreadyDeduped,

    #[error("token sequence has no run lengths")]
    MissingRunLengths,

    #[error("invalid run lengths: {0}")]
    InvalidRunLengths(String),

    #[error("vocabulary mismatch: expected {expected}, got {got}")]
    VocabMismatch { expected: u32, got: u32 },

    #[error("token id {id} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: u32 },

    #[error("model fingerprint mismatch: expected {expected:016x}, got {got:016x}")]
    FingerprintMismatch { expected: u64, got: u64 },

    #[error("target vocabulary {target} is below base vocabulary {base}")]
    TargetBelowBaseVocab { target: usize, base: usize },

    #[error("corrupt payload: {0}")]
    CorruptPayload(String),

    #[error("length mismatch for {utterance_id}: {tokens} tokens vs {labels} labels")]
    LengthMismatch {
        utterance_id: String,
        tokens: usize,
        labels: usize,
    },

    #[error("contingency table is empty")]
    EmptyTable,

    #[error("phone distribution is degenerate (zero entropy)")]
    DegeneratePhoneDistribution,

    #[error("utterance id sets differ: {0}")]
    IdSetMismatch(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::InvalidConfig(_) | Error::TargetBelowBaseVocab { .. } => ErrorClass::Config,
            _ => ErrorClass::Data,
        }
    }
}
