//! Length reduction for token streams: run de-duplication, unigram subword
//! modeling, and token-level time masking.

mod dedup;
mod mask;
pub mod unigram;

pub use dedup::{dedup, expand, expand_runs};
pub use mask::{time_mask, MaskConfig, MaskedSequence};
pub use unigram::{
    decode, encode, segmentation_score, unigram_em_step, unigram_prune, unigram_seed_vocab, unigram_train,
    PieceSequence, SubwordModel, SubwordTrainConfig,
};
