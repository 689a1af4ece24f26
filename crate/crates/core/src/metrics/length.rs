use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitLengthStats {
    pub split_name: String,
    pub num_utts: usize,
    pub mean_length: f64,
    pub before_mean: f64,
    /// `1 − mean_length / before_mean`, or 0 when `before_mean` is 0.
    pub reduction_fraction: f64,
}

/// Average input lengths per split.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LengthStats {
    pub splits: Vec<SplitLengthStats>,
}

impl LengthStats {
    pub fn push(&mut self, s: SplitLengthStats) {
        self.splits.push(s);
    }

    /// One row per split: `avg before → avg after (−x%)`, plus a combined
    /// `train / dev` style column.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>12} {:>12} {:>10}",
            "split", "utts", "avg before", "avg after", "reduction"
        );
        for s in &self.splits {
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>12.1} {:>12.1} {:>9.1}%",
                s.split_name,
                s.num_utts,
                s.before_mean,
                s.mean_length,
                100.0 * s.reduction_fraction
            );
        }
        if self.splits.len() > 1 {
            let joined: Vec<String> = self.splits.iter().map(|s| format!("{:.1}", s.mean_length)).collect();
            let names: Vec<&str> = self.splits.iter().map(|s| s.split_name.as_str()).collect();
            let _ = writeln!(out, "avg input length ({}): {}", names.join(" / "), joined.join(" / "));
        }
        out
    }
}

/// Mean lengths before and after a transform over the same utterances.
/// Inputs are `(utterance_id, length)` pairs.
pub fn length_stats(
    split_name: &str,
    before: &[(String, usize)],
    after: &[(String, usize)],
) -> Result<SplitLengthStats> {
    let before_map: HashMap<&str, usize> = before.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let after_map: HashMap<&str, usize> = after.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    if before_map.len() != before.len() || after_map.len() != after.len() {
        return Err(Error::IdSetMismatch("duplicate utterance ids".into()));
    }
    if let Some(k) = before_map.keys().find(|k| !after_map.contains_key(*k)) {
        return Err(Error::IdSetMismatch(format!("{k} missing after transform")));
    }
    if let Some(k) = after_map.keys().find(|k| !before_map.contains_key(*k)) {
        return Err(Error::IdSetMismatch(format!("{k} missing before transform")));
    }
    let n = before.len();
    let mean = |v: &[(String, usize)]| {
        if n == 0 {
            0.0
        } else {
            v.iter().map(|(_, l)| *l as f64).sum::<f64>() / n as f64
        }
    };
    let before_mean = mean(before);
    let mean_length = mean(after);
    let reduction_fraction = if before_mean > 0.0 {
        1.0 - mean_length / before_mean
    } else {
        0.0
    };
    Ok(SplitLengthStats {
        split_name: split_name.to_string(),
        num_utts: n,
        mean_length,
        before_mean,
        reduction_fraction,
    })
}
