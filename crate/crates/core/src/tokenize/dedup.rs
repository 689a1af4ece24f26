use crate::error::{Error, Result};
use crate::tokens::TokenSequence;

/// Collapses maximal runs of equal tokens, recording each run's length.
pub fn dedup(seq: &TokenSequence) -> Result<TokenSequence> {
    if seq.run_lengths().is_some() {
        return Err(Error::AlreadyDeduped);
    }
    let mut tokens = Vec::new();
    let mut runs: Vec<u32> = Vec::new();
    for &t in seq.tokens() {
        match (tokens.last(), runs.last_mut()) {
            (Some(&prev), Some(run)) if prev == t && *run < u32::MAX => *run += 1,
            _ => {
                tokens.push(t);
                runs.push(1);
            }
        }
    }
    TokenSequence::with_run_lengths(
        seq.utterance_id(),
        tokens,
        seq.vocab_size(),
        seq.frame_rate_hz(),
        Some(runs),
    )
}

/// Inverse of [`dedup`]: repeats every token by its run length.
pub fn expand(seq: &TokenSequence) -> Result<TokenSequence> {
    let runs = seq.run_lengths().ok_or(Error::MissingRunLengths)?;
    let total: u64 = runs.iter().map(|&r| r as u64).sum();
    let mut out = Vec::with_capacity(total as usize);
    for (&t, &r) in seq.tokens().iter().zip(runs) {
        out.extend(std::iter::repeat_n(t, r as usize));
    }
    TokenSequence::new(seq.utterance_id(), out, seq.vocab_size(), seq.frame_rate_hz())
}

/// Low-level form of [`expand`] for raw slices.
pub fn expand_runs(tokens: &[u32], runs: &[u32]) -> Result<Vec<u32>> {
    if tokens.len() != runs.len() {
        return Err(Error::InvalidRunLengths(format!(
            "{} run lengths for {} tokens",
            runs.len(),
            tokens.len()
        )));
    }
    if runs.contains(&0) {
        return Err(Error::InvalidRunLengths("zero-length run".into()));
    }
    Ok(tokens
        .iter()
        .zip(runs)
        .flat_map(|(&t, &r)| std::iter::repeat_n(t, r as usize))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(t: &[u32]) -> TokenSequence {
        TokenSequence::new("u", t.to_vec(), 10, 50.0).unwrap()
    }

    #[test]
    fn collapses_runs() {
        let d = dedup(&seq(&[7, 7, 3, 3, 3, 7])).unwrap();
        assert_eq!(d.tokens(), &[7, 3, 7]);
        assert_eq!(d.run_lengths(), Some(&[2, 3, 1][..]));
        assert_eq!(d.num_frames(), 6);
    }

    #[test]
    fn empty_and_no_op() {
        let d = dedup(&seq(&[])).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.run_lengths(), Some(&[][..]));
        let d = dedup(&seq(&[1, 2, 3])).unwrap();
        assert_eq!(d.tokens(), &[1, 2, 3]);
        assert_eq!(d.run_lengths(), Some(&[1, 1, 1][..]));
    }

    #[test]
    fn double_dedup_rejected() {
        let d = dedup(&seq(&[1, 1])).unwrap();
        assert!(matches!(dedup(&d), Err(Error::AlreadyDeduped)));
    }

    #[test]
    fn expand_inverts_example() {
        let d = TokenSequence::with_run_lengths("u", vec![7, 3, 7], 10, 50.0, Some(vec![2, 3, 1])).unwrap();
        assert_eq!(expand(&d).unwrap().tokens(), &[7, 7, 3, 3, 3, 7]);
        assert!(expand(&dedup(&seq(&[])).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn expand_requires_valid_runs() {
        assert!(matches!(expand(&seq(&[1, 2])), Err(Error::MissingRunLengths)));
        assert!(matches!(
            expand_runs(&[1, 2], &[1, 0]),
            Err(Error::InvalidRunLengths(_))
        ));
    }

    proptest! {
        #[test]
        fn expand_dedup_identity(v in prop::collection::vec(0u32..4, 0..200)) {
            let s = seq(&v);
            let d = dedup(&s).unwrap();
            prop_assert!(d.len() <= s.len());
            prop_assert!(d.tokens().windows(2).all(|w| w[0] != w[1]));
            prop_assert_eq!(expand(&d).unwrap(), s);
        }
    }
}
