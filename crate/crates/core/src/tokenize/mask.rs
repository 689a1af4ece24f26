use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokens::TokenSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskConfig {
    pub num_masks: usize,
    pub max_span_frames: usize,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            num_masks: 2,
            max_span_frames: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSequence {
    /// Input with masked positions set to the mask id (the input's
    /// `vocab_size`); vocabulary grows by one.
    pub tokens: TokenSequence,
    /// Masked spans in draw order; they may overlap.
    pub spans: Vec<Range<usize>>,
}

/// Replaces up to `num_masks` random contiguous spans with a reserved mask id.
/// Span lengths are uniform in `[1, max_span_frames]`, starts uniform over the
/// sequence, and spans are clipped at the end. Run lengths are dropped, since
/// adjacent masked positions would break the de-duplicated form.
pub fn time_mask(seq: &TokenSequence, config: &MaskConfig, seed: u64) -> Result<MaskedSequence> {
    if config.max_span_frames == 0 {
        return Err(Error::InvalidConfig("masking.max_span_frames must be ≥ 1".into()));
    }
    let mask_id = seq.vocab_size();
    let vocab = mask_id
        .checked_add(1)
        .ok_or_else(|| Error::InvalidConfig("no room for a mask id".into()))?;
    let n = seq.len();
    let mut tokens = seq.tokens().to_vec();
    let mut spans = Vec::new();
    if n > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..config.num_masks {
            let len = rng.random_range(1..=config.max_span_frames);
            let start = rng.random_range(0..n);
            let span = start..(start + len).min(n);
            tokens[span.clone()].fill(mask_id);
            spans.push(span);
        }
    }
    Ok(MaskedSequence {
        tokens: TokenSequence::new(seq.utterance_id(), tokens, vocab, seq.frame_rate_hz())?,
        spans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(t: &[u32]) -> TokenSequence {
        TokenSequence::new("u", t.to_vec(), 10, 50.0).unwrap()
    }

    #[test]
    fn zero_masks_only_grows_vocab() {
        let s = seq(&[1, 2, 3]);
        let m = time_mask(
            &s,
            &MaskConfig {
                num_masks: 0,
                max_span_frames: 3,
            },
            0,
        )
        .unwrap();
        assert_eq!(m.tokens.tokens(), s.tokens());
        assert_eq!(m.tokens.vocab_size(), 11);
        assert!(m.spans.is_empty());
    }

    #[test]
    fn empty_input() {
        let m = time_mask(&seq(&[]), &MaskConfig::default(), 3).unwrap();
        assert!(m.tokens.is_empty());
    }

    #[test]
    fn zero_span_rejected() {
        let cfg = MaskConfig {
            num_masks: 1,
            max_span_frames: 0,
        };
        assert!(time_mask(&seq(&[1]), &cfg, 0).is_err());
    }

    proptest! {
        #[test]
        fn masks_only_inside_spans(
            v in prop::collection::vec(0u32..10, 0..60),
            num_masks in 0usize..5,
            max_span in 1usize..8,
            seed in any::<u64>(),
        ) {
            let s = seq(&v);
            let cfg = MaskConfig { num_masks, max_span_frames: max_span };
            let m = time_mask(&s, &cfg, seed).unwrap();
            prop_assert_eq!(m.tokens.len(), s.len());
            let masked = m.tokens.tokens().iter().filter(|&&t| t == 10).count();
            prop_assert!(masked <= num_masks * max_span);
            for (i, (&a, &b)) in s.tokens().iter().zip(m.tokens.tokens()).enumerate() {
                let inside = m.spans.iter().any(|r| r.contains(&i));
                if inside { prop_assert_eq!(b, 10) } else { prop_assert_eq!(a, b) }
            }
            for r in &m.spans {
                prop_assert!(r.end - r.start >= 1 && r.end - r.start <= max_span);
            }
            prop_assert_eq!(time_mask(&s, &cfg, seed).unwrap(), m);
        }
    }

    #[test]
    fn ten_tokens_two_masks_span_three() {
        let s = seq(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let cfg = MaskConfig {
            num_masks: 2,
            max_span_frames: 3,
        };
        for seed in 0..200 {
            let m = time_mask(&s, &cfg, seed).unwrap();
            assert!(m.tokens.tokens().iter().filter(|&&t| t == 10).count() <= 6);
        }
    }
}
