use crate::error::{Error, Result};

/// Discrete token ids of one utterance, optionally with the run lengths left
/// behind by de-duplication.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    utterance_id: String,
    tokens: Vec<u32>,
    vocab_size: u32,
    frame_rate_hz: f32,
    run_lengths: Option<Vec<u32>>,
}

impl TokenSequence {
    pub fn new(utterance_id: impl Into<String>, tokens: Vec<u32>, vocab_size: u32, frame_rate_hz: f32) -> Result<Self> {
        Self::with_run_lengths(utterance_id, tokens, vocab_size, frame_rate_hz, None)
    }

    pub fn with_run_lengths(
        utterance_id: impl Into<String>,
        tokens: Vec<u32>,
        vocab_size: u32,
        frame_rate_hz: f32,
        run_lengths: Option<Vec<u32>>,
    ) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::InvalidConfig("vocab_size must be positive".into()));
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "frame rate must be positive, got {frame_rate_hz}"
            )));
        }
        if let Some(&id) = tokens.iter().find(|&&t| t >= vocab_size) {
            return Err(Error::TokenOutOfRange { id, vocab_size });
        }
        if let Some(runs) = &run_lengths {
            if runs.len() != tokens.len() {
                return Err(Error::InvalidRunLengths(format!(
                    "{} run lengths for {} tokens",
                    runs.len(),
                    tokens.len()
                )));
            }
            if runs.contains(&0) {
                return Err(Error::InvalidRunLengths("zero-length run".into()));
            }
            if tokens.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidRunLengths(
                    "adjacent equal tokens in a de-duplicated sequence".into(),
                ));
            }
        }
        Ok(Self {
            utterance_id: utterance_id.into(),
            tokens,
            vocab_size,
            frame_rate_hz,
            run_lengths,
        })
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn frame_rate_hz(&self) -> f32 {
        self.frame_rate_hz
    }

    pub fn run_lengths(&self) -> Option<&[u32]> {
        self.run_lengths.as_deref()
    }

    /// Number of underlying frames: the run-length sum when present.
    pub fn num_frames(&self) -> u64 {
        match &self.run_lengths {
            Some(r) => r.iter().map(|&x| x as u64).sum(),
            None => self.tokens.len() as u64,
        }
    }

    pub fn into_parts(self) -> (String, Vec<u32>, u32, f32, Option<Vec<u32>>) {
        (
            self.utterance_id,
            self.tokens,
            self.vocab_size,
            self.frame_rate_hz,
            self.run_lengths,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_ids() {
        assert!(matches!(
            TokenSequence::new("u", vec![0, 3], 3, 50.0),
            Err(Error::TokenOutOfRange { id: 3, vocab_size: 3 })
        ));
    }

    #[test]
    fn run_length_invariants() {
        assert!(TokenSequence::with_run_lengths("u", vec![1, 2], 3, 50.0, Some(vec![2, 1])).is_ok());
        for (toks, runs) in [
            (vec![1, 1], vec![1, 1]),
            (vec![1, 2], vec![1]),
            (vec![1, 2], vec![0, 1]),
        ] {
            assert!(matches!(
                TokenSequence::with_run_lengths("u", toks, 3, 50.0, Some(runs)),
                Err(Error::InvalidRunLengths(_))
            ));
        }
    }
}
