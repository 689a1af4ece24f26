//! Segmentation lattice: forward–backward expected counts and Viterbi.

use super::model::SubwordModel;

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Adds the posterior expected count of every piece occurrence in `seq` to
/// `counts` and returns `log Σ_segmentations Π p(piece)`.
pub(crate) fn forward_backward(model: &SubwordModel, seq: &[u32], counts: &mut [f64]) -> f64 {
    let n = seq.len();
    if n == 0 {
        return 0.0;
    }
    let mut edges: Vec<Vec<(usize, u32)>> = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for i in 0..n {
        model.edges_from(seq, i, &mut buf);
        edges.push(buf.clone());
    }

    let mut alpha = vec![f64::NEG_INFINITY; n + 1];
    alpha[0] = 0.0;
    for i in 0..n {
        if alpha[i] == f64::NEG_INFINITY {
            continue;
        }
        for &(len, id) in &edges[i] {
            alpha[i + len] = log_add(alpha[i + len], alpha[i] + model.log_prob(id));
        }
    }
    let mut beta = vec![f64::NEG_INFINITY; n + 1];
    beta[n] = 0.0;
    for i in (0..n).rev() {
        for &(len, id) in &edges[i] {
            beta[i] = log_add(beta[i], model.log_prob(id) + beta[i + len]);
        }
    }

    let z = alpha[n];
    for i in 0..n {
        for &(len, id) in &edges[i] {
            let lp = alpha[i] + model.log_prob(id) + beta[i + len] - z;
            counts[id as usize] += lp.exp();
        }
    }
    z
}

/// Best segmentation under the model, optionally without piece `exclude`.
/// Maximizes the summed log-probability; ties prefer fewer pieces, then the
/// lexicographically smallest piece-id sequence. Returns `None` only when
/// the excluded piece leaves no segmentation.
pub(crate) fn viterbi(model: &SubwordModel, seq: &[u32], exclude: Option<u32>) -> Option<(f64, Vec<u32>)> {
    let n = seq.len();
    // Suffix DP: best[i] covers seq[i..]. Two candidates at the same start
    // differ in their first piece, so the lexicographic tie-break only needs
    // the first piece id.
    let mut score = vec![f64::NEG_INFINITY; n + 1];
    let mut count = vec![usize::MAX; n + 1];
    let mut next: Vec<(usize, u32)> = vec![(0, 0); n];
    score[n] = 0.0;
    count[n] = 0;
    let mut buf = Vec::new();
    for i in (0..n).rev() {
        model.edges_from(seq, i, &mut buf);
        for &(len, id) in &buf {
            if Some(id) == exclude || count[i + len] == usize::MAX {
                continue;
            }
            let s = model.log_prob(id) + score[i + len];
            let c = count[i + len] + 1;
            let better = count[i] == usize::MAX
                || s > score[i]
                || (s == score[i] && (c < count[i] || (c == count[i] && id < next[i].1)));
            if better {
                score[i] = s;
                count[i] = c;
                next[i] = (len, id);
            }
        }
    }
    if count[0] == usize::MAX {
        return None;
    }
    let mut ids = Vec::with_capacity(count[0]);
    let mut i = 0;
    while i < n {
        let (len, id) = next[i];
        ids.push(id);
        i += len;
    }
    Some((score[0], ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::unigram::model::Piece;

    fn toy() -> SubwordModel {
        SubwordModel::new(
            2,
            3,
            vec![
                Piece {
                    tokens: vec![0],
                    log_prob: 0.25f64.ln(),
                },
                Piece {
                    tokens: vec![1],
                    log_prob: 0.25f64.ln(),
                },
                Piece {
                    tokens: vec![0, 1],
                    log_prob: 0.5f64.ln(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn likelihood_sums_both_segmentations() {
        let mut counts = vec![0.0; 3];
        let ll = forward_backward(&toy(), &[0, 1], &mut counts);
        // 0.25·0.25 + 0.5
        assert!((ll - 0.5625f64.ln()).abs() < 1e-12);
        assert!((ll - (-0.575_364_144_903_562)).abs() < 1e-12);
        let p_split = 0.0625 / 0.5625;
        assert!((counts[0] - p_split).abs() < 1e-12);
        assert!((counts[1] - p_split).abs() < 1e-12);
        assert!((counts[2] - (1.0 - p_split)).abs() < 1e-12);
    }

    #[test]
    fn viterbi_prefers_the_pair() {
        let (s, ids) = viterbi(&toy(), &[0, 1], None).unwrap();
        assert_eq!(ids, vec![2]);
        assert!((s - 0.5f64.ln()).abs() < 1e-15);
        let (_, ids) = viterbi(&toy(), &[0, 1], Some(2)).unwrap();
        assert_eq!(ids, vec![0, 1]);
        assert!(viterbi(&toy(), &[0], Some(0)).is_none());
    }

    #[test]
    fn viterbi_tie_prefers_fewer_pieces() {
        // p([0,0]) = p([0])² makes both segmentations of [0,0] score equal.
        let m = SubwordModel::new(
            1,
            2,
            vec![
                Piece {
                    tokens: vec![0],
                    log_prob: ((5f64.sqrt() - 1.0) / 2.0).ln(),
                },
                Piece {
                    tokens: vec![0, 0],
                    log_prob: 2.0 * ((5f64.sqrt() - 1.0) / 2.0).ln(),
                },
            ],
        )
        .unwrap();
        let (_, ids) = viterbi(&m, &[0, 0], None).unwrap();
        assert_eq!(ids, vec![1]);
    }
}
