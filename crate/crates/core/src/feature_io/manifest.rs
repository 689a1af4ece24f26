use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{read_feature_header, read_features, FeatureSequence};
use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub utterance_id: String,
    /// As written in the manifest; relative paths resolve against the
    /// manifest's directory.
    pub path: PathBuf,
    pub num_frames: u64,
}

/// Index of a feature corpus: one line `utterance_id<TAB>path<TAB>num_frames`
/// per utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    entries: Vec<ManifestEntry>,
    total_frames: u64,
    base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.utterance_id.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate utterance id {:?} in manifest",
                    e.utterance_id
                )));
            }
        }
        let total_frames = entries.iter().map(|e| e.num_frames).sum();
        Ok(Self {
            entries,
            total_frames,
            base_dir: base_dir.into(),
        })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn total_frames(&self) -> u64 {
        self.total_frames
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>, source: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let loc = || format!("{source}:{}", lineno + 1);
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(loc(), "expected 3 tab-separated fields"));
            }
            let num_frames = fields[2]
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::parse(loc(), format!("num_frames: {e}")))?;
            entries.push(ManifestEntry {
                utterance_id: fields[0].to_string(),
                path: PathBuf::from(fields[1]),
                num_frames,
            });
        }
        Self::new(entries, base_dir)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{}\t{}\t{}", e.utterance_id, e.path.display(), e.num_frames);
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fsutil::atomic_write(path, self.to_text().as_bytes())
    }

    /// Checks every entry's frame count against its file header.
    pub fn verify(&self) -> Result<()> {
        self.entries.par_iter().try_for_each(|e| {
            let path = self.resolve(e);
            let header = read_feature_header(&path)?;
            if header.num_frames != e.num_frames {
                return Err(Error::HeaderMismatch(format!(
                    "{}: manifest says {} frames, file header says {}",
                    path.display(),
                    e.num_frames,
                    header.num_frames
                )));
            }
            Ok(())
        })
    }

    /// Loads one utterance, keeping the manifest's utterance id.
    pub fn load(&self, entry: &ManifestEntry) -> Result<FeatureSequence> {
        let path = self.resolve(entry);
        let seq = read_features(&path)?;
        if seq.num_frames() as u64 != entry.num_frames {
            return Err(Error::HeaderMismatch(format!(
                "{}: manifest says {} frames, file has {}",
                path.display(),
                entry.num_frames,
                seq.num_frames()
            )));
        }
        FeatureSequence::new(entry.utterance_id.clone(), seq.frames().clone(), seq.frame_rate_hz())
    }

    /// Loads every utterance in manifest order; files are read in parallel.
    pub fn load_all(&self) -> Result<Vec<FeatureSequence>> {
        self.entries.par_iter().map(|e| self.load(e)).collect()
    }
}
