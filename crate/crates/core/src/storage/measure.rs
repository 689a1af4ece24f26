use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::bitpack::payload_bytes;
use super::size::{size_bits, SizeModel};
use super::token_file::{read_token_file, TOKEN_HEADER_BYTES};
use crate::error::{Error, Result};

/// On-disk totals over a directory of `.dstk` files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenDirSummary {
    pub num_files: u64,
    /// Ids stored in payloads (tokens or subword pieces).
    pub num_ids: u64,
    pub header_bytes: u64,
    pub run_length_bytes: u64,
    pub payload_bytes: u64,
    /// Underlying frames, when every file allows recovering them.
    pub num_frames: Option<u64>,
    /// Seconds of speech implied by `num_frames`.
    pub duration_s: Option<f64>,
}

impl TokenDirSummary {
    pub fn total_bytes(&self) -> u64 {
        self.header_bytes + self.run_length_bytes + self.payload_bytes
    }

    /// What the same ids would take as plain 32-bit integers.
    pub fn int32_bytes(&self) -> u64 {
        self.num_ids * 4
    }
}

pub fn token_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "dstk") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn measure_token_dir(dir: &Path) -> Result<TokenDirSummary> {
    let files = token_files(dir)?;
    struct One {
        ids: u64,
        rl: u64,
        payload: u64,
        frames: Option<u64>,
        secs: Option<f64>,
    }
    let per_file: Vec<One> = files
        .par_iter()
        .map(|p| {
            let f = read_token_file(p)?;
            let h = f.header;
            debug_assert_eq!(f.payload.len() as u64, payload_bytes(h.num_tokens, h.bit_width));
            let frames = match (&f.run_lengths, h.flags.subworded) {
                (Some(r), _) => Some(r.iter().map(|&x| x as u64).sum()),
                (None, false) => Some(h.num_tokens),
                (None, true) => None,
            };
            Ok(One {
                ids: h.num_tokens,
                rl: h.run_length_section_bytes,
                payload: f.payload.len() as u64,
                frames,
                secs: frames.map(|n| n as f64 / h.frame_rate_hz as f64),
            })
        })
        .collect::<Result<_>>()?;

    let mut s = TokenDirSummary {
        num_files: per_file.len() as u64,
        header_bytes: per_file.len() as u64 * TOKEN_HEADER_BYTES as u64,
        num_frames: Some(0),
        duration_s: Some(0.0),
        ..Default::default()
    };
    for f in per_file {
        s.num_ids += f.ids;
        s.run_length_bytes += f.rl;
        s.payload_bytes += f.payload;
        s.num_frames = s.num_frames.zip(f.frames).map(|(a, b)| a + b);
        s.duration_s = s.duration_s.zip(f.secs).map(|(a, b)| a + b);
    }
    Ok(s)
}

/// Actual token-directory size next to the modeled baselines for the same
/// amount of speech.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSizeReport {
    pub summary: TokenDirSummary,
    pub duration_s: f64,
    pub raw_waveform_bits: f64,
    pub ssl_feature_bits: f64,
    pub actual_bits: f64,
    pub int32_bits: f64,
}

impl CorpusSizeReport {
    /// `None` when the token files are empty.
    pub fn ratio_vs_raw(&self) -> Option<f64> {
        (self.actual_bits > 0.0).then(|| self.raw_waveform_bits / self.actual_bits)
    }

    pub fn ratio_vs_ssl(&self) -> Option<f64> {
        (self.actual_bits > 0.0).then(|| self.ssl_feature_bits / self.actual_bits)
    }
}

/// Measures a token directory. `duration_s` overrides the duration recovered
/// from the files (needed when subword files carry no run lengths).
pub fn measure_corpus(dir: &Path, duration_s: Option<f64>) -> Result<CorpusSizeReport> {
    let summary = measure_token_dir(dir)?;
    let duration_s = duration_s.or(summary.duration_s).unwrap_or(0.0);
    Ok(CorpusSizeReport {
        duration_s,
        raw_waveform_bits: size_bits(&SizeModel::raw_waveform(), duration_s)?,
        ssl_feature_bits: size_bits(&SizeModel::ssl_features(), duration_s)?,
        actual_bits: summary.total_bytes() as f64 * 8.0,
        int32_bits: summary.int32_bytes() as f64 * 8.0,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::{pack, write_token_file, TokenFlags};
    use crate::tokens::TokenSequence;

    #[test]
    fn empty_directory_is_all_zero() {
        let dir = tempfile::tempdir().unwrap();
        let r = measure_corpus(dir.path(), None).unwrap();
        assert_eq!(r.summary.total_bytes(), 0);
        assert_eq!(r.duration_s, 0.0);
        assert_eq!(r.ratio_vs_raw(), None);
    }

    #[test]
    fn missing_directory_is_io_error() {
        assert!(matches!(
            measure_corpus(Path::new("/definitely/not/here"), None),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn sizes_follow_format_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let n = 1234usize;
        let toks: Vec<u32> = (0..n as u32).map(|i| i % 2000).collect();
        let s = TokenSequence::new("a", toks, 2000, 50.0).unwrap();
        let f = pack(&s, TokenFlags::default());
        write_token_file(&f, &dir.path().join("a.dstk")).unwrap();
        std::fs::write(dir.path().join("ignored.txt"), b"x").unwrap();
        let r = measure_corpus(dir.path(), None).unwrap();
        let expected = TOKEN_HEADER_BYTES as u64 + (n as u64 * 11).div_ceil(8);
        assert_eq!(r.summary.total_bytes(), expected);
        assert_eq!(r.summary.num_files, 1);
        assert_eq!(r.summary.num_frames, Some(n as u64));
        assert!((r.duration_s - n as f64 / 50.0).abs() < 1e-12);
        assert_eq!(r.raw_waveform_bits, 256_000.0 * n as f64 / 50.0);
    }
}
