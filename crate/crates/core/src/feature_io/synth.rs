//! Synthetic Gaussian-cluster corpora with known token and phone labels.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{write_features, CorpusManifest, FeatureSequence, ManifestEntry};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::matrix::FrameMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_utts: usize,
    pub frames_per_utt: usize,
    pub dim: usize,
    pub num_clusters: usize,
    /// Size of the phone inventory; phone = cluster mod num_phones.
    pub num_phones: Option<usize>,
    /// Minimum distance between cluster means, in units of `within_std`.
    pub separation: f64,
    pub within_std: f64,
    /// Probability that a frame repeats the previous frame's cluster.
    pub persistence: f64,
    pub frame_rate_hz: f32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_utts: 100,
            frames_per_utt: 200,
            dim: 16,
            num_clusters: 16,
            num_phones: None,
            separation: 20.0,
            within_std: 1.0,
            persistence: 0.3,
            frame_rate_hz: 50.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn num_phones(&self) -> usize {
        self.num_phones.unwrap_or(self.num_clusters)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("synth: {m}")));
        if self.num_utts == 0 || self.frames_per_utt == 0 || self.dim == 0 || self.num_clusters == 0 {
            return bad("num_utts, frames_per_utt, dim and num_clusters must be positive");
        }
        if u32::try_from(self.num_clusters).is_err() {
            return bad("num_clusters too large");
        }
        let phones = self.num_phones();
        if phones == 0 || phones > self.num_clusters {
            return bad("num_phones must lie in [1, num_clusters]");
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return bad("separation must be positive");
        }
        if !(self.within_std.is_finite() && self.within_std > 0.0) {
            return bad("within_std must be positive");
        }
        if !(0.0..1.0).contains(&self.persistence) {
            return bad("persistence must lie in [0, 1)");
        }
        if !(self.frame_rate_hz.is_finite() && self.frame_rate_hz > 0.0) {
            return bad("frame_rate_hz must be positive");
        }
        Ok(())
    }
}

/// A generated corpus together with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub sequences: Vec<FeatureSequence>,
    /// True cluster index of every frame.
    pub cluster_labels: Vec<Vec<u32>>,
    /// Phone id of every frame.
    pub phone_labels: Vec<Vec<u32>>,
    pub means: FrameMatrix,
}

impl SynthCorpus {
    pub fn total_frames(&self) -> usize {
        self.sequences.iter().map(FeatureSequence::num_frames).sum()
    }

    /// Writes `feats/<id>.dsft` under `dir` and returns the manifest (not yet
    /// written) with paths relative to `dir`.
    pub fn write_features(&self, dir: &Path) -> Result<CorpusManifest> {
        let feats = dir.join("feats");
        fsutil::create_dir_all(&feats)?;
        let entries = self
            .sequences
            .par_iter()
            .map(|s| {
                let rel = Path::new("feats").join(format!("{}.dsft", s.utterance_id()));
                write_features(s, &dir.join(&rel))?;
                Ok(ManifestEntry {
                    utterance_id: s.utterance_id().to_string(),
                    path: rel,
                    num_frames: s.num_frames() as u64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        CorpusManifest::new(entries, dir)
    }
}

pub fn utterance_name(index: usize) -> String {
    format!("utt{index:06}")
}

/// Cluster means on an integer lattice scaled by `separation × within_std`;
/// distinct lattice points are at least one spacing apart. Which lattice
/// point each cluster gets is shuffled by the seed.
fn cluster_means(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> FrameMatrix {
    let k = cfg.num_clusters;
    let mut side = 2usize;
    while (side as f64).powi(cfg.dim.min(64) as i32) < k as f64 {
        side += 1;
    }
    let mut slots: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        let j = rng.random_range(0..=i);
        slots.swap(i, j);
    }
    let spacing = (cfg.separation * cfg.within_std) as f32;
    let mut data = vec![0.0f32; k * cfg.dim];
    for (c, &slot) in slots.iter().enumerate() {
        let mut rest = slot;
        for d in 0..cfg.dim {
            if rest == 0 {
                break;
            }
            data[c * cfg.dim + d] = (rest % side) as f32 * spacing;
            rest /= side;
        }
    }
    FrameMatrix::from_vec(data, cfg.dim)
}

/// Generates `num_utts × frames_per_utt` frames. Each utterance is a
/// first-order Markov chain over clusters: a frame repeats its predecessor's
/// cluster with probability `persistence`, otherwise it moves to one of the
/// other clusters uniformly. Frames are the cluster mean plus isotropic
/// Gaussian noise.
pub fn synth_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let means = cluster_means(cfg, &mut rng);
    let k = cfg.num_clusters;
    let phones = cfg.num_phones() as u32;

    let generated: Vec<(FeatureSequence, Vec<u32>)> = (0..cfg.num_utts)
        .into_par_iter()
        .map(|u| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u as u64 + 1);
            let mut labels = Vec::with_capacity(cfg.frames_per_utt);
            let mut current = rng.random_range(0..k);
            for t in 0..cfg.frames_per_utt {
                if t > 0 && k > 1 && !rng.random_bool(cfg.persistence) {
                    let step = rng.random_range(1..k);
                    current = (current + step) % k;
                }
                labels.push(current as u32);
            }
            let mut data = Vec::with_capacity(cfg.frames_per_utt * cfg.dim);
            for &c in &labels {
                for &m in means.row(c as usize) {
                    let z: f64 = rng.sample(StandardNormal);
                    data.push(m + (z * cfg.within_std) as f32);
                }
            }
            let seq = FeatureSequence::new(
                utterance_name(u),
                FrameMatrix::from_vec(data, cfg.dim),
                cfg.frame_rate_hz,
            )
            .expect("generated frames are finite");
            (seq, labels)
        })
        .collect();

    let mut sequences = Vec::with_capacity(cfg.num_utts);
    let mut cluster_labels = Vec::with_capacity(cfg.num_utts);
    let mut phone_labels = Vec::with_capacity(cfg.num_utts);
    for (seq, labels) in generated {
        phone_labels.push(labels.iter().map(|&c| c % phones).collect());
        cluster_labels.push(labels);
        sequences.push(seq);
    }
    Ok(SynthCorpus {
        sequences,
        cluster_labels,
        phone_labels,
        means,
    })
}
