//! Unigram subword model over discrete token ids: seeding, EM training with
//! likelihood-based pruning, and Viterbi encoding.

mod lattice;
mod model;
mod train;

pub use model::{Piece, PieceSequence, SubwordModel, MODEL_HEADER_PREFIX, NORMALIZATION_TOL};
pub use train::{unigram_em_step, unigram_prune, unigram_seed_vocab, unigram_train, SubwordTrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::tokens::TokenSequence;

/// Viterbi segmentation into pieces. Run lengths of a de-duplicated input
/// travel with the result so [`decode`] can restore them.
pub fn encode(model: &SubwordModel, tokens: &TokenSequence) -> Result<PieceSequence> {
    model.check_vocab(tokens)?;
    let (_, piece_ids) =
        lattice::viterbi(model, tokens.tokens(), None).expect("single-token coverage makes every sequence segmentable");
    Ok(PieceSequence {
        utterance_id: tokens.utterance_id().to_string(),
        piece_ids,
        model_fingerprint: model.fingerprint(),
        frame_rate_hz: tokens.frame_rate_hz(),
        base_run_lengths: tokens.run_lengths().map(<[u32]>::to_vec),
    })
}

/// Total log-probability of a segmentation.
pub fn segmentation_score(model: &SubwordModel, pieces: &PieceSequence) -> f64 {
    pieces.piece_ids.iter().map(|&id| model.log_prob(id)).sum()
}

/// Concatenates the pieces back into base tokens.
pub fn decode(model: &SubwordModel, pieces: &PieceSequence) -> Result<TokenSequence> {
    if pieces.model_fingerprint != model.fingerprint() {
        return Err(Error::FingerprintMismatch {
            expected: model.fingerprint(),
            got: pieces.model_fingerprint,
        });
    }
    let mut tokens = Vec::new();
    for &id in &pieces.piece_ids {
        let piece = model.pieces().get(id as usize).ok_or(Error::TokenOutOfRange {
            id,
            vocab_size: model.len() as u32,
        })?;
        tokens.extend_from_slice(&piece.tokens);
    }
    TokenSequence::with_run_lengths(
        pieces.utterance_id.clone(),
        tokens,
        model.base_vocab_size(),
        pieces.frame_rate_hz,
        pieces.base_run_lengths.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(t: &[u32], pr: f64) -> Piece {
        Piece {
            tokens: t.to_vec(),
            log_prob: pr.ln(),
        }
    }

    fn toy() -> SubwordModel {
        SubwordModel::new(2, 3, vec![p(&[0], 0.25), p(&[1], 0.25), p(&[0, 1], 0.5)]).unwrap()
    }

    fn seq(t: &[u32], vocab: u32) -> TokenSequence {
        TokenSequence::new("u", t.to_vec(), vocab, 50.0).unwrap()
    }

    #[test]
    fn encodes_pair_as_one_piece() {
        let ps = encode(&toy(), &seq(&[0, 1], 2)).unwrap();
        assert_eq!(ps.piece_ids, vec![2]);
        assert!(encode(&toy(), &seq(&[], 2)).unwrap().is_empty());
        assert!(matches!(
            encode(&toy(), &seq(&[0], 3)),
            Err(Error::VocabMismatch { .. })
        ));
    }

    #[test]
    fn decode_concatenates() {
        let m = SubwordModel::new(
            10,
            11,
            (0..10)
                .map(|t| p(&[t], 0.05))
                .chain(std::iter::once(p(&[4, 4, 9], 0.5)))
                .collect(),
        )
        .unwrap();
        let ps = PieceSequence {
            utterance_id: "u".into(),
            piece_ids: vec![10],
            model_fingerprint: m.fingerprint(),
            frame_rate_hz: 50.0,
            base_run_lengths: None,
        };
        assert_eq!(decode(&m, &ps).unwrap().tokens(), &[4, 4, 9]);
        let empty = PieceSequence {
            piece_ids: vec![],
            ..ps.clone()
        };
        assert!(decode(&m, &empty).unwrap().is_empty());
        let stale = PieceSequence {
            model_fingerprint: 1,
            ..ps
        };
        assert!(matches!(decode(&m, &stale), Err(Error::FingerprintMismatch { .. })));
    }

    #[test]
    fn run_lengths_survive_round_trip() {
        let d = crate::tokenize::dedup(&seq(&[0, 0, 1, 0, 1, 1, 1], 2)).unwrap();
        let ps = encode(&toy(), &d).unwrap();
        assert_eq!(decode(&toy(), &ps).unwrap(), d);
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(v in prop::collection::vec(0u32..2, 0..100)) {
            let s = seq(&v, 2);
            let ps = encode(&toy(), &s).unwrap();
            prop_assert_eq!(decode(&toy(), &ps).unwrap(), s);
        }
    }
}
