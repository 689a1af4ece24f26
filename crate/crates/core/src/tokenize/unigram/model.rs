use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::tokens::TokenSequence;

pub const MODEL_HEADER_PREFIX: &str = "#disctok-unigram v1 base_vocab=";

/// Probabilities must sum to one within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub tokens: Vec<u32>,
    pub log_prob: f64,
}

/// Unigram subword model over base token ids. Piece `t` is the single-token
/// piece `[t]` for every `t < base_vocab_size`; multi-token pieces follow.
#[derive(Debug, Clone)]
pub struct SubwordModel {
    pieces: Vec<Piece>,
    base_vocab_size: u32,
    target_vocab_size: usize,
    index: HashMap<Vec<u32>, u32>,
    max_piece_len: usize,
    fingerprint: u64,
}

impl PartialEq for SubwordModel {
    fn eq(&self, other: &Self) -> bool {
        self.base_vocab_size == other.base_vocab_size
            && self.target_vocab_size == other.target_vocab_size
            && self.pieces == other.pieces
    }
}

impl SubwordModel {
    /// Builds a model from pieces in any order. Single-token pieces are moved
    /// to the front in token order; multi-token pieces keep their order.
    pub fn new(base_vocab_size: u32, target_vocab_size: usize, pieces: Vec<Piece>) -> Result<Self> {
        if base_vocab_size == 0 {
            return Err(Error::InvalidConfig("base vocabulary must be non-empty".into()));
        }
        let base = base_vocab_size as usize;
        let mut singles: Vec<Option<Piece>> = vec![None; base];
        let mut multi = Vec::new();
        for p in pieces {
            if p.tokens.is_empty() {
                return Err(Error::InvalidConfig("empty piece".into()));
            }
            if let Some(&id) = p.tokens.iter().find(|&&t| t >= base_vocab_size) {
                return Err(Error::TokenOutOfRange {
                    id,
                    vocab_size: base_vocab_size,
                });
            }
            if !(p.log_prob.is_finite() && p.log_prob <= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "piece {:?} has log_prob {}",
                    p.tokens, p.log_prob
                )));
            }
            if p.tokens.len() == 1 {
                let slot = &mut singles[p.tokens[0] as usize];
                if slot.is_some() {
                    return Err(Error::InvalidConfig(format!("duplicate piece {:?}", p.tokens)));
                }
                *slot = Some(p);
            } else {
                multi.push(p);
            }
        }
        let mut all = Vec::with_capacity(base + multi.len());
        for (t, s) in singles.into_iter().enumerate() {
            all.push(s.ok_or_else(|| Error::InvalidConfig(format!("single-token piece [{t}] is missing")))?);
        }
        all.extend(multi);
        Self::from_ordered(base_vocab_size, target_vocab_size, all)
    }

    pub(crate) fn from_ordered(base_vocab_size: u32, target_vocab_size: usize, pieces: Vec<Piece>) -> Result<Self> {
        if u32::try_from(pieces.len()).is_err() {
            return Err(Error::InvalidConfig("too many pieces".into()));
        }
        let mut index = HashMap::with_capacity(pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            if index.insert(p.tokens.clone(), i as u32).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate piece {:?}", p.tokens)));
            }
        }
        let mass: f64 = pieces.iter().map(|p| p.log_prob.exp()).sum();
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidConfig(format!(
                "piece probabilities sum to {mass}, not 1"
            )));
        }
        let max_piece_len = pieces.iter().map(|p| p.tokens.len()).max().unwrap_or(1);
        let fingerprint = fingerprint(base_vocab_size, &pieces);
        Ok(Self {
            pieces,
            base_vocab_size,
            target_vocab_size,
            index,
            max_piece_len,
            fingerprint,
        })
    }

    /// Rebuilds the model with new log-probabilities (same pieces, same order).
    pub(crate) fn with_log_probs(&self, log_probs: Vec<f64>) -> Result<Self> {
        let pieces = self
            .pieces
            .iter()
            .zip(log_probs)
            .map(|(p, lp)| Piece {
                tokens: p.tokens.clone(),
                log_prob: lp,
            })
            .collect();
        Self::from_ordered(self.base_vocab_size, self.target_vocab_size, pieces)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn num_multi_pieces(&self) -> usize {
        self.pieces.len() - self.base_vocab_size as usize
    }

    pub fn base_vocab_size(&self) -> u32 {
        self.base_vocab_size
    }

    pub fn target_vocab_size(&self) -> usize {
        self.target_vocab_size
    }

    pub fn max_piece_len(&self) -> usize {
        self.max_piece_len
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn piece_id(&self, tokens: &[u32]) -> Option<u32> {
        self.index.get(tokens).copied()
    }

    pub fn log_prob(&self, id: u32) -> f64 {
        self.pieces[id as usize].log_prob
    }

    pub fn total_mass(&self) -> f64 {
        self.pieces.iter().map(|p| p.log_prob.exp()).sum()
    }

    /// `(length, piece id)` for every piece starting at `start`.
    pub(crate) fn edges_from(&self, seq: &[u32], start: usize, out: &mut Vec<(usize, u32)>) {
        out.clear();
        let max = self.max_piece_len.min(seq.len() - start);
        for len in 1..=max {
            if let Some(id) = self.piece_id(&seq[start..start + len]) {
                out.push((len, id));
            }
        }
    }

    pub(crate) fn check_vocab(&self, seq: &TokenSequence) -> Result<()> {
        if seq.vocab_size() != self.base_vocab_size {
            return Err(Error::VocabMismatch {
                expected: self.base_vocab_size,
                got: seq.vocab_size(),
            });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MODEL_HEADER_PREFIX}{}\n", self.base_vocab_size);
        for p in &self.pieces {
            let toks: Vec<String> = p.tokens.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{}\t{}", toks.join(" "), p.log_prob);
        }
        out
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(source, "empty model file"))?;
        let base: u32 = header
            .strip_prefix(MODEL_HEADER_PREFIX)
            .ok_or_else(|| Error::parse(format!("{source}:1"), "missing model header"))?
            .trim()
            .parse()
            .map_err(|e| Error::parse(format!("{source}:1"), format!("base_vocab: {e}")))?;
        let mut pieces = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let loc = || format!("{source}:{}", i + 1);
            let (toks, lp) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(loc(), "expected piece<TAB>log_prob"))?;
            let tokens = toks
                .split(' ')
                .map(|t| t.parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(loc(), format!("piece: {e}")))?;
            let log_prob = lp
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(loc(), format!("log_prob: {e}")))?;
            pieces.push(Piece { tokens, log_prob });
        }
        let n = pieces.len();
        Self::new(base, n, pieces)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsutil::atomic_write(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

fn fingerprint(base: u32, pieces: &[Piece]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for p in pieces {
        h.update((p.tokens.len() as u32).to_le_bytes());
        for t in &p.tokens {
            h.update(t.to_le_bytes());
        }
        h.update(p.log_prob.to_bits().to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Subword segmentation of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceSequence {
    pub utterance_id: String,
    pub piece_ids: Vec<u32>,
    pub model_fingerprint: u64,
    pub frame_rate_hz: f32,
    /// Run lengths of the underlying de-duplicated base tokens, if any.
    pub base_run_lengths: Option<Vec<u32>>,
}

impl PieceSequence {
    pub fn len(&self) -> usize {
        self.piece_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.piece_ids.is_empty()
    }

    /// The piece ids as a token stream over the model's piece inventory.
    pub fn to_symbols(&self, model: &SubwordModel) -> Result<TokenSequence> {
        TokenSequence::new(
            self.utterance_id.clone(),
            self.piece_ids.clone(),
            model.len() as u32,
            self.frame_rate_hz,
        )
    }
}
