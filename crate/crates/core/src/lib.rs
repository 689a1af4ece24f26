//! Discrete speech tokens.
//!
//! Continuous frame-level speech features are quantized with k-means into
//! token ids, shortened by de-duplication and unigram subword modeling,
//! stored as fixed-width bit-packed files, and scored against frame-level
//! phone labels with purity and phone-normalized mutual information.

pub mod error;
pub mod feature_io;
mod fsutil;
pub mod kmeans;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod storage;
pub mod tokenize;
pub mod tokens;

pub use error::{Error, ErrorClass, Result};
pub use feature_io::{CorpusManifest, FeatureSequence};
pub use kmeans::Codebook;
pub use matrix::FrameMatrix;
pub use tokens::TokenSequence;
