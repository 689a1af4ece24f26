//! Binary feature-matrix files (`DSFT`), corpus manifests and the synthetic
//! corpus generator used in place of real self-supervised embeddings.
//!
//! Feature file layout, all little-endian:
//!
//! | field         | type  |
//! |---------------|-------|
//! | magic `DSFT`  | 4 B   |
//! | version = 1   | u32   |
//! | num_frames    | u64   |
//! | dim           | u32   |
//! | frame_rate_hz | f32   |
//! | payload       | num_frames × dim × f32, row-major |

mod manifest;
mod synth;

pub use manifest::{CorpusManifest, ManifestEntry};
pub use synth::{synth_corpus, SynthConfig, SynthCorpus};

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::{self, check_magic, LeReader};
use crate::matrix::FrameMatrix;

pub const FEATURE_MAGIC: &[u8; 4] = b"DSFT";
pub const FEATURE_VERSION: u32 = 1;
pub const FEATURE_HEADER_BYTES: usize = 24;

/// Frame-level feature vectors of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    utterance_id: String,
    frames: FrameMatrix,
    frame_rate_hz: f32,
}

impl FeatureSequence {
    pub fn new(utterance_id: impl Into<String>, frames: FrameMatrix, frame_rate_hz: f32) -> Result<Self> {
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "frame rate must be positive, got {frame_rate_hz}"
            )));
        }
        if let Some(index) = frames.first_non_finite() {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self {
            utterance_id: utterance_id.into(),
            frames,
            frame_rate_hz,
        })
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub fn frames(&self) -> &FrameMatrix {
        &self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.num_rows()
    }

    pub fn dim(&self) -> usize {
        self.frames.dim()
    }

    pub fn frame_rate_hz(&self) -> f32 {
        self.frame_rate_hz
    }

    /// Utterance length in seconds.
    pub fn duration_secs(&self) -> f64 {
        self.num_frames() as f64 / self.frame_rate_hz as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FEATURE_HEADER_BYTES + self.frames.as_slice().len() * 4);
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.num_frames() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&self.frame_rate_hz.to_le_bytes());
        for v in self.frames.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(utterance_id: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        let header = FeatureHeader::parse(bytes)?;
        let payload = &bytes[FEATURE_HEADER_BYTES..];
        let expected = header.payload_bytes()?;
        if payload.len() as u64 != expected {
            return Err(Error::HeaderMismatch(format!(
                "payload is {} bytes, header implies {}",
                payload.len(),
                expected
            )));
        }
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let frames = FrameMatrix::from_vec(data, header.dim as usize);
        Self::new(utterance_id, frames, header.frame_rate_hz)
    }
}

/// The fixed-size prefix of a feature file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureHeader {
    pub num_frames: u64,
    pub dim: u32,
    pub frame_rate_hz: f32,
}

impl FeatureHeader {
    fn parse(bytes: &[u8]) -> Result<Self> {
        check_magic(bytes, FEATURE_MAGIC)?;
        let mut r = LeReader::new(bytes);
        r.take(4)?;
        let version = r.u32()?;
        if version != FEATURE_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let num_frames = r.u64()?;
        let dim = r.u32()?;
        let frame_rate_hz = r.f32()?;
        if dim == 0 {
            return Err(Error::HeaderMismatch("dim is zero".into()));
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(Error::HeaderMismatch(format!(
                "frame rate {frame_rate_hz} is not positive"
            )));
        }
        Ok(Self {
            num_frames,
            dim,
            frame_rate_hz,
        })
    }

    fn payload_bytes(&self) -> Result<u64> {
        self.num_frames
            .checked_mul(self.dim as u64)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::HeaderMismatch("payload size overflows".into()))
    }
}

/// Reads a feature file. The utterance id is the file stem.
pub fn read_features(path: &Path) -> Result<FeatureSequence> {
    let bytes = fsutil::read_all(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    FeatureSequence::from_bytes(id, &bytes)
}

/// Reads only the header, without touching the payload.
pub fn read_feature_header(path: &Path) -> Result<FeatureHeader> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::with_capacity(FEATURE_HEADER_BYTES);
    f.by_ref()
        .take(FEATURE_HEADER_BYTES as u64)
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    FeatureHeader::parse(&buf)
}

pub fn write_features(seq: &FeatureSequence, path: &Path) -> Result<()> {
    fsutil::atomic_write(path, &seq.to_bytes())
}
