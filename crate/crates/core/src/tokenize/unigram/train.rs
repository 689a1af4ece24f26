use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{forward_backward, viterbi};
use super::model::{Piece, SubwordModel};
use crate::error::{Error, Result};
use crate::tokens::TokenSequence;

/// Utterances per parallel E-step work item; the reduction runs in chunk
/// order so results do not depend on the worker count.
const E_STEP_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubwordTrainConfig {
    pub max_piece_len: usize,
    /// Size of the initial vocabulary, single-token pieces included.
    pub seed_vocab_size: usize,
    pub em_steps_per_round: usize,
    pub keep_fraction: f64,
    pub final_em_steps: usize,
}

impl Default for SubwordTrainConfig {
    fn default() -> Self {
        Self {
            max_piece_len: 8,
            seed_vocab_size: 50_000,
            em_steps_per_round: 2,
            keep_fraction: 0.8,
            final_em_steps: 2,
        }
    }
}

impl SubwordTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_piece_len == 0 {
            return Err(Error::InvalidConfig("subword.max_piece_len must be ≥ 1".into()));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction < 1.0) {
            return Err(Error::InvalidConfig("subword.keep_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-phase corpus log-likelihoods recorded by [`unigram_train`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// One entry per EM phase: the pre-update log-likelihood of each step.
    pub em_phases: Vec<Vec<f64>>,
    /// Piece count after each prune.
    pub sizes_after_prune: Vec<usize>,
}

pub(crate) fn corpus_vocab(corpus: &[TokenSequence]) -> Result<u32> {
    let first = corpus.first().ok_or(Error::EmptyCorpus)?;
    let base = first.vocab_size();
    for s in corpus {
        if s.vocab_size() != base {
            return Err(Error::VocabMismatch {
                expected: base,
                got: s.vocab_size(),
            });
        }
    }
    Ok(base)
}

fn slices(corpus: &[TokenSequence]) -> Vec<&[u32]> {
    corpus.iter().map(TokenSequence::tokens).collect()
}

/// Initial vocabulary: every single token plus the most frequent substrings
/// of length 2..=max_piece_len (within utterances), truncated to
/// `seed_vocab_size` pieces. Probabilities are proportional to counts; a
/// single token absent from the corpus gets a pseudo-count of one.
pub fn unigram_seed_vocab(corpus: &[TokenSequence], config: &SubwordTrainConfig) -> Result<SubwordModel> {
    config.validate()?;
    let base = corpus_vocab(corpus)?;
    seed_vocab(&slices(corpus), base, config, config.seed_vocab_size)
}

fn seed_vocab(corpus: &[&[u32]], base: u32, config: &SubwordTrainConfig, target: usize) -> Result<SubwordModel> {
    let mut single = vec![0u64; base as usize];
    for s in corpus {
        for &t in *s {
            single[t as usize] += 1;
        }
    }
    let max_len = config.max_piece_len;
    let counts: HashMap<Vec<u32>, u64> = corpus
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<Vec<u32>, u64>, s| {
            for i in 0..s.len() {
                for len in 2..=max_len.min(s.len() - i) {
                    *acc.entry(s[i..i + len].to_vec()).or_insert(0) += 1;
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let mut multi: Vec<(Vec<u32>, u64)> = counts.into_iter().collect();
    multi.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let room = config.seed_vocab_size.saturating_sub(base as usize);
    multi.truncate(room);

    let weights: Vec<f64> = single
        .iter()
        .map(|&c| c.max(1) as f64)
        .chain(multi.iter().map(|(_, c)| *c as f64))
        .collect();
    let total: f64 = weights.iter().sum();
    let ln_total = total.ln();
    let pieces = (0..base)
        .map(|t| vec![t])
        .chain(multi.into_iter().map(|(p, _)| p))
        .zip(&weights)
        .map(|(tokens, &w)| Piece {
            tokens,
            log_prob: w.ln() - ln_total,
        })
        .collect();
    SubwordModel::from_ordered(base, target, pieces)
}

fn expected_counts(model: &SubwordModel, corpus: &[&[u32]]) -> (f64, Vec<f64>) {
    let partial: Vec<(f64, Vec<f64>)> = corpus
        .par_chunks(E_STEP_CHUNK)
        .map(|chunk| {
            let mut counts = vec![0.0; model.len()];
            let mut ll = 0.0;
            for s in chunk {
                ll += forward_backward(model, s, &mut counts);
            }
            (ll, counts)
        })
        .collect();
    let mut ll = 0.0;
    let mut counts = vec![0.0; model.len()];
    for (l, c) in partial {
        ll += l;
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
    }
    (ll, counts)
}

fn em_step_slices(model: &SubwordModel, corpus: &[&[u32]]) -> Result<(SubwordModel, f64)> {
    let (ll, counts) = expected_counts(model, corpus);
    let seen_total: f64 = counts.iter().filter(|&&c| c > 0.0).sum();
    if seen_total <= 0.0 {
        return Ok((model.clone(), ll));
    }
    // Pieces with no expected count keep their probability; the remaining
    // mass is shared in proportion to expected counts. This is the exact
    // maximizer over the pieces the corpus can touch, so EM stays monotone
    // and unseen single tokens never drop to zero.
    let unseen_mass: f64 = model
        .pieces()
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c <= 0.0)
        .map(|(p, _)| p.log_prob.exp())
        .sum();
    let ln_seen = (1.0 - unseen_mass).ln() - seen_total.ln();
    let log_probs = model
        .pieces()
        .iter()
        .zip(&counts)
        .map(|(p, &c)| {
            if c > 0.0 {
                (c.ln() + ln_seen).min(0.0)
            } else {
                p.log_prob
            }
        })
        .collect();
    Ok((model.with_log_probs(log_probs)?, ll))
}

/// One EM iteration. Returns the updated model and the corpus
/// log-likelihood under the *input* model.
pub fn unigram_em_step(model: &SubwordModel, corpus: &[TokenSequence]) -> Result<(SubwordModel, f64)> {
    for s in corpus {
        model.check_vocab(s)?;
    }
    em_step_slices(model, &slices(corpus))
}

fn prune_slices(model: &SubwordModel, corpus: &[&[u32]], keep_multi: usize) -> Result<SubwordModel> {
    let base = model.base_vocab_size() as usize;
    let num_multi = model.num_multi_pieces();
    if num_multi <= keep_multi {
        return Ok(model.clone());
    }

    let freq: Vec<u64> = corpus
        .par_iter()
        .fold(
            || vec![0u64; model.len()],
            |mut acc, s| {
                if let Some((_, ids)) = viterbi(model, s, None) {
                    for id in ids {
                        acc[id as usize] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; model.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    // Loss of dropping a piece: each Viterbi use is replaced by the best
    // segmentation of the piece's own tokens without it.
    let losses: Vec<f64> = (base..model.len())
        .into_par_iter()
        .map(|id| {
            let f = freq[id];
            if f == 0 {
                return 0.0;
            }
            let piece = &model.pieces()[id];
            let (alt, _) = viterbi(model, &piece.tokens, Some(id as u32)).expect("single-token pieces always segment");
            (f as f64 * (piece.log_prob - alt)).max(0.0)
        })
        .collect();

    let mut order: Vec<usize> = (base..model.len()).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (losses[a - base], losses[b - base]);
        la.total_cmp(&lb)
            .then(freq[a].cmp(&freq[b]))
            .then(model.log_prob(a as u32).total_cmp(&model.log_prob(b as u32)))
            .then(b.cmp(&a))
    });
    let mut removed = vec![false; model.len()];
    for &id in &order[..num_multi - keep_multi] {
        removed[id] = true;
    }

    let kept: Vec<&Piece> = model
        .pieces()
        .iter()
        .enumerate()
        .filter(|&(i, _)| !removed[i])
        .map(|(_, p)| p)
        .collect();
    let mass: f64 = kept.iter().map(|p| p.log_prob.exp()).sum();
    let ln_mass = mass.ln();
    let pieces = kept
        .into_iter()
        .map(|p| Piece {
            tokens: p.tokens.clone(),
            log_prob: (p.log_prob - ln_mass).min(0.0),
        })
        .collect();
    SubwordModel::from_ordered(model.base_vocab_size(), model.target_vocab_size(), pieces)
}

/// Keeps `⌈keep_fraction × M⌉` of the `M` multi-token pieces, dropping those
/// whose removal costs the least corpus likelihood. Single-token pieces are
/// never dropped; probabilities are renormalized.
pub fn unigram_prune(model: &SubwordModel, corpus: &[TokenSequence], keep_fraction: f64) -> Result<SubwordModel> {
    if !(keep_fraction > 0.0 && keep_fraction < 1.0) {
        return Err(Error::InvalidConfig("keep_fraction must lie in (0, 1)".into()));
    }
    for s in corpus {
        model.check_vocab(s)?;
    }
    let keep = (keep_fraction * model.num_multi_pieces() as f64).ceil() as usize;
    prune_slices(model, &slices(corpus), keep)
}

/// Seeds a vocabulary, then alternates EM rounds and pruning until at most
/// `target_vocab_size` pieces remain, and finishes with a few EM steps.
pub fn unigram_train(
    corpus: &[TokenSequence],
    target_vocab_size: usize,
    config: &SubwordTrainConfig,
) -> Result<(SubwordModel, TrainReport)> {
    config.validate()?;
    let base = corpus_vocab(corpus)?;
    if target_vocab_size < base as usize {
        return Err(Error::TargetBelowBaseVocab {
            target: target_vocab_size,
            base: base as usize,
        });
    }
    let corpus = slices(corpus);
    let mut model = seed_vocab(&corpus, base, config, target_vocab_size)?;
    let mut report = TrainReport::default();
    let target_multi = target_vocab_size - base as usize;

    let run_em = |mut m: SubwordModel, steps: usize, report: &mut TrainReport| -> Result<SubwordModel> {
        let mut lls = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (next, ll) = em_step_slices(&m, &corpus)?;
            lls.push(ll);
            m = next;
        }
        report.em_phases.push(lls);
        Ok(m)
    };

    while model.len() > target_vocab_size {
        model = run_em(model, config.em_steps_per_round, &mut report)?;
        let shrink = (config.keep_fraction * model.num_multi_pieces() as f64).ceil() as usize;
        let keep = shrink.max(target_multi);
        let keep = if keep >= model.num_multi_pieces() {
            model.num_multi_pieces() - 1
        } else {
            keep
        };
        model = prune_slices(&model, &corpus, keep)?;
        report.sizes_after_prune.push(model.len());
    }
    model = run_em(model, config.final_em_steps, &mut report)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(v: &[&[u32]], vocab: u32) -> Vec<TokenSequence> {
        v.iter()
            .enumerate()
            .map(|(i, t)| TokenSequence::new(format!("u{i}"), t.to_vec(), vocab, 50.0).unwrap())
            .collect()
    }

    fn p(t: &[u32], pr: f64) -> Piece {
        Piece {
            tokens: t.to_vec(),
            log_prob: pr.ln(),
        }
    }

    #[test]
    fn seed_counts_substrings() {
        let corpus = seqs(&[&[1, 2, 1, 2]], 3);
        let cfg = SubwordTrainConfig {
            max_piece_len: 2,
            seed_vocab_size: 100,
            ..Default::default()
        };
        let m = unigram_seed_vocab(&corpus, &cfg).unwrap();
        let ids: Vec<_> = m.pieces().iter().map(|p| p.tokens.clone()).collect();
        assert_eq!(ids, vec![vec![0], vec![1], vec![2], vec![1, 2], vec![2, 1]]);
        // [1,2] twice, [2,1] once
        assert!(m.log_prob(3) > m.log_prob(4));
        assert!((m.log_prob(3) - m.log_prob(4) - 2f64.ln()).abs() < 1e-12);
        assert!((m.total_mass() - 1.0).abs() < 1e-12);

        let singles = unigram_seed_vocab(
            &corpus,
            &SubwordTrainConfig {
                max_piece_len: 1,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(singles.len(), 3);
    }

    #[test]
    fn seed_truncates_and_rejects_empty() {
        let corpus = seqs(&[&[0, 1, 0, 1, 1]], 2);
        let cfg = SubwordTrainConfig {
            max_piece_len: 3,
            seed_vocab_size: 4,
            ..Default::default()
        };
        assert_eq!(unigram_seed_vocab(&corpus, &cfg).unwrap().len(), 4);
        assert!(matches!(unigram_seed_vocab(&[], &cfg), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn em_step_single_piece_fixed_point() {
        let m = SubwordModel::new(1, 1, vec![p(&[0], 1.0)]).unwrap();
        let (next, ll) = unigram_em_step(&m, &seqs(&[&[0]], 1)).unwrap();
        assert_eq!(ll, 0.0);
        assert_eq!(next, m);
    }

    #[test]
    fn em_step_reports_pre_update_likelihood() {
        let m = SubwordModel::new(2, 3, vec![p(&[0], 0.25), p(&[1], 0.25), p(&[0, 1], 0.5)]).unwrap();
        let (next, ll) = unigram_em_step(&m, &seqs(&[&[0, 1]], 2)).unwrap();
        assert!((ll - 0.5625f64.ln()).abs() < 1e-12);
        let (_, ll2) = unigram_em_step(&next, &seqs(&[&[0, 1]], 2)).unwrap();
        assert!(ll2 >= ll);
    }

    #[test]
    fn em_vocab_mismatch() {
        let m = SubwordModel::new(1, 1, vec![p(&[0], 1.0)]).unwrap();
        assert!(matches!(
            unigram_em_step(&m, &seqs(&[&[0]], 2)),
            Err(Error::VocabMismatch { .. })
        ));
    }

    #[test]
    fn prune_keeps_single_only_models() {
        let m = SubwordModel::new(2, 2, vec![p(&[0], 0.5), p(&[1], 0.5)]).unwrap();
        let out = unigram_prune(&m, &seqs(&[&[0, 1]], 2), 0.5).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn prune_ceiling() {
        let m = SubwordModel::new(
            2,
            4,
            vec![p(&[0], 0.25), p(&[1], 0.25), p(&[0, 1], 0.25), p(&[1, 0], 0.25)],
        )
        .unwrap();
        let out = unigram_prune(&m, &seqs(&[&[0, 1, 0]], 2), 0.999).unwrap();
        assert_eq!(out.len(), 4);
        let out = unigram_prune(&m, &seqs(&[&[0, 1, 0]], 2), 0.5).unwrap();
        assert_eq!(out.len(), 3);
        assert!((out.total_mass() - 1.0).abs() < 1e-9);
        assert!(unigram_prune(&m, &[], 1.0).is_err());
    }

    #[test]
    fn train_to_base_vocab_leaves_singles() {
        let corpus = seqs(&[&[0, 1, 2, 0, 1, 2], &[2, 2, 1]], 3);
        let (m, _) = unigram_train(&corpus, 3, &SubwordTrainConfig::default()).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.pieces().iter().all(|p| p.tokens.len() == 1));
        assert!(matches!(
            unigram_train(&corpus, 2, &SubwordTrainConfig::default()),
            Err(Error::TargetBelowBaseVocab { target: 2, base: 3 })
        ));
    }
}
