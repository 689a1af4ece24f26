//! k-means quantizer: k-means++ seeding, Lloyd iterations, nearest-centroid
//! assignment and the `DSCB` codebook file.

mod init;
mod lloyd;
mod subsample;

pub use init::{count_distinct_rows, kmeans_pp_init};
pub use lloyd::lloyd_fit;
pub use subsample::{sample_frame_indices, subsample_frames};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_io::FeatureSequence;
use crate::fsutil::{self, check_magic, LeReader};
use crate::matrix::{squared_distance, FrameMatrix};
use crate::tokens::TokenSequence;

pub const CODEBOOK_MAGIC: &[u8; 4] = b"DSCB";
pub const CODEBOOK_VERSION: u32 = 1;
pub const CODEBOOK_HEADER_BYTES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    /// Frames per parallel work item. Results do not depend on it or on the
    /// number of worker threads.
    pub chunk_size: usize,
    /// Independent k-means++ starts; the lowest final inertia is kept.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rel_tol: 1e-6,
            seed: 0,
            chunk_size: 4096,
            restarts: 1,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("kmeans.max_iters must be ≥ 1".into()));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol >= 0.0) {
            return Err(Error::InvalidConfig("kmeans.rel_tol must be ≥ 0".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("kmeans.restarts must be ≥ 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("kmeans.chunk_size must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingMeta {
    pub seed: u64,
    /// Accepted Lloyd updates. Not persisted in the codebook file.
    pub iterations_run: usize,
    pub final_inertia: f64,
    /// Inertia after seeding, then after every accepted update. Not persisted.
    pub inertia_history: Vec<f64>,
}

/// `k` centroids of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centroids: FrameMatrix,
    meta: TrainingMeta,
}

impl Codebook {
    pub fn new(centroids: FrameMatrix, meta: TrainingMeta) -> Result<Self> {
        if centroids.num_rows() == 0 {
            return Err(Error::InvalidConfig("codebook needs at least one centroid".into()));
        }
        if u32::try_from(centroids.num_rows()).is_err() || u32::try_from(centroids.dim()).is_err() {
            return Err(Error::InvalidConfig("codebook too large".into()));
        }
        if let Some(index) = centroids.first_non_finite() {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { centroids, meta })
    }

    pub fn k(&self) -> usize {
        self.centroids.num_rows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.dim()
    }

    pub fn centroids(&self) -> &FrameMatrix {
        &self.centroids
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    /// Nearest centroid and its squared distance; ties go to the smaller index.
    #[inline]
    pub fn nearest(&self, frame: &[f32]) -> (u32, f64) {
        nearest_centroid(&self.centroids, frame)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CODEBOOK_HEADER_BYTES + self.centroids.as_slice().len() * 4);
        out.extend_from_slice(CODEBOOK_MAGIC);
        out.extend_from_slice(&CODEBOOK_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.k() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&self.meta.seed.to_le_bytes());
        out.extend_from_slice(&self.meta.final_inertia.to_le_bytes());
        for v in self.centroids.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        check_magic(bytes, CODEBOOK_MAGIC)?;
        let mut r = LeReader::new(bytes);
        r.take(4)?;
        let version = r.u32()?;
        if version != CODEBOOK_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let k = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let seed = r.u64()?;
        let final_inertia = r.f64()?;
        if k == 0 || dim == 0 {
            return Err(Error::HeaderMismatch(format!("k={k}, dim={dim}")));
        }
        let payload = r.rest();
        let expected = (k as u64) * (dim as u64) * 4;
        if payload.len() as u64 != expected {
            return Err(Error::HeaderMismatch(format!(
                "centroid payload is {} bytes, header implies {expected}",
                payload.len()
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(
            FrameMatrix::from_vec(data, dim),
            TrainingMeta {
                seed,
                iterations_run: 0,
                final_inertia,
                inertia_history: Vec::new(),
            },
        )
    }
}

pub fn save_codebook(codebook: &Codebook, path: &Path) -> Result<()> {
    fsutil::atomic_write(path, &codebook.to_bytes())
}

pub fn load_codebook(path: &Path) -> Result<Codebook> {
    Codebook::from_bytes(&fsutil::read_all(path)?)
}

#[inline]
pub(crate) fn nearest_centroid(centroids: &FrameMatrix, frame: &[f32]) -> (u32, f64) {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.rows().enumerate() {
        let d = squared_distance(frame, c);
        if d < best_d {
            best_d = d;
            best = i as u32;
        }
    }
    (best, best_d)
}

/// Nearest-centroid labels for every row, computed in parallel chunks.
pub fn assign_rows(codebook: &Codebook, data: &FrameMatrix, chunk_size: usize) -> Result<Vec<u32>> {
    if data.dim() != codebook.dim() {
        return Err(Error::DimMismatch {
            expected: codebook.dim(),
            got: data.dim(),
        });
    }
    let chunk = chunk_size.max(1) * data.dim();
    Ok(data
        .as_slice()
        .par_chunks(chunk)
        .flat_map_iter(|block| {
            block
                .chunks_exact(codebook.dim())
                .map(|row| codebook.nearest(row).0)
                .collect::<Vec<_>>()
        })
        .collect())
}

/// Maps every frame to its nearest centroid. The output has one token per
/// frame, `vocab_size = k`, and keeps the feature frame rate.
pub fn assign(codebook: &Codebook, features: &FeatureSequence) -> Result<TokenSequence> {
    let tokens = assign_rows(codebook, features.frames(), KMeansConfig::default().chunk_size)?;
    TokenSequence::new(
        features.utterance_id(),
        tokens,
        codebook.k() as u32,
        features.frame_rate_hz(),
    )
}
