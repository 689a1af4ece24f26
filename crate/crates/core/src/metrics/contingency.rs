use rayon::prelude::*;

use super::labels::PhoneLabels;
use crate::error::{Error, Result};
use crate::tokens::TokenSequence;

/// Joint frame counts of (token, phone), `num_tokens × num_phones`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<u64>,
    num_tokens: usize,
    num_phones: usize,
    total: u64,
}

impl ContingencyTable {
    pub fn zeros(num_tokens: usize, num_phones: usize) -> Self {
        Self {
            counts: vec![0; num_tokens * num_phones],
            num_tokens,
            num_phones,
            total: 0,
        }
    }

    /// Panics on ragged rows.
    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut t = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.as_ref().len(), cols, "ragged contingency rows");
            for (j, &c) in r.as_ref().iter().enumerate() {
                t.add(i, j, c);
            }
        }
        t
    }

    pub fn num_tokens(&self) -> usize {
        self.num_tokens
    }

    pub fn num_phones(&self) -> usize {
        self.num_phones
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn get(&self, token: usize, phone: usize) -> u64 {
        self.counts[token * self.num_phones + phone]
    }

    #[inline]
    pub fn add(&mut self, token: usize, phone: usize, n: u64) {
        self.counts[token * self.num_phones + phone] += n;
        self.total += n;
    }

    pub fn row(&self, token: usize) -> &[u64] {
        &self.counts[token * self.num_phones..(token + 1) * self.num_phones]
    }

    pub fn token_marginals(&self) -> Vec<u64> {
        (0..self.num_tokens).map(|t| self.row(t).iter().sum()).collect()
    }

    pub fn phone_marginals(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.num_phones];
        for t in 0..self.num_tokens {
            for (o, &c) in out.iter_mut().zip(self.row(t)) {
                *o += c;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.num_phones, self.num_tokens);
        for i in 0..self.num_tokens {
            for j in 0..self.num_phones {
                t.add(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Table with token `b` folded into token `a`; `b`'s row becomes zero.
    pub fn merge_tokens(&self, a: usize, b: usize) -> Self {
        let mut t = self.clone();
        for j in 0..self.num_phones {
            let moved = t.counts[b * self.num_phones + j];
            t.counts[b * self.num_phones + j] = 0;
            t.counts[a * self.num_phones + j] += moved;
        }
        t
    }

    /// Element-wise sum; shapes are padded to the larger of the two.
    pub fn merge(mut self, other: &Self) -> Self {
        if other.num_tokens > self.num_tokens || other.num_phones > self.num_phones {
            let mut grown = Self::zeros(
                self.num_tokens.max(other.num_tokens),
                self.num_phones.max(other.num_phones),
            );
            for i in 0..self.num_tokens {
                for j in 0..self.num_phones {
                    grown.add(i, j, self.get(i, j));
                }
            }
            self = grown;
        }
        for i in 0..other.num_tokens {
            for j in 0..other.num_phones {
                let c = other.get(i, j);
                if c > 0 {
                    self.add(i, j, c);
                }
            }
        }
        self
    }
}

/// Counts co-occurring (token, phone) pairs frame by frame. Each pair of
/// slices must have equal length.
pub fn joint_counts_from_pairs<'a, I>(pairs: I, num_tokens: usize, num_phones: usize) -> Result<ContingencyTable>
where
    I: IntoIterator<Item = (&'a str, &'a [u32], &'a [u32])>,
{
    let pairs: Vec<_> = pairs.into_iter().collect();
    pairs
        .par_iter()
        .try_fold(
            || ContingencyTable::zeros(num_tokens, num_phones),
            |mut t, &(id, tokens, phones)| {
                if tokens.len() != phones.len() {
                    return Err(Error::LengthMismatch {
                        utterance_id: id.to_string(),
                        tokens: tokens.len(),
                        labels: phones.len(),
                    });
                }
                for (&tok, &ph) in tokens.iter().zip(phones) {
                    if tok as usize >= num_tokens || ph as usize >= num_phones {
                        return Err(Error::InvalidConfig(format!(
                            "{id}: (token {tok}, phone {ph}) outside {num_tokens}×{num_phones} table"
                        )));
                    }
                    t.add(tok as usize, ph as usize, 1);
                }
                Ok(t)
            },
        )
        .try_reduce(
            || ContingencyTable::zeros(num_tokens, num_phones),
            |a, b| Ok(a.merge(&b)),
        )
}

/// Joint counts over a corpus of raw per-frame token streams. Labels are
/// matched by utterance id and must cover every frame.
pub fn joint_counts(corpus: &[TokenSequence], labels: &PhoneLabels) -> Result<ContingencyTable> {
    let num_tokens = corpus.iter().map(|s| s.vocab_size() as usize).max().unwrap_or(0);
    let mut pairs = Vec::with_capacity(corpus.len());
    for s in corpus {
        if s.run_lengths().is_some() {
            return Err(Error::InvalidConfig(format!(
                "{}: metrics need raw per-frame tokens, not de-duplicated ones",
                s.utterance_id()
            )));
        }
        let phones = labels
            .get(s.utterance_id())
            .ok_or_else(|| Error::IdSetMismatch(format!("no phone labels for {}", s.utterance_id())))?;
        pairs.push((s.utterance_id(), s.tokens(), phones));
    }
    let num_phones = pairs
        .iter()
        .flat_map(|p| p.2.iter())
        .max()
        .map_or(0, |&m| m as usize + 1);
    joint_counts_from_pairs(pairs, num_tokens, num_phones)
}
