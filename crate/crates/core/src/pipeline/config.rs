use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_io::SynthConfig;
use crate::kmeans::KMeansConfig;
use crate::tokenize::{MaskConfig, SubwordTrainConfig};

/// Settings for a whole run, stored as TOML.
///
/// ```toml
/// [paths]
/// output_dir = "out"
///
/// [kmeans]
/// k = 100
///
/// [reduction]
/// dedup = true
/// subword = { target_vocab = 600 }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub kmeans: KMeansSection,
    pub reduction: ReductionConfig,
    pub masking: MaskingConfig,
    pub report: ReportConfig,
    pub run: RunConfig,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Defaults to `<output_dir>/manifest.tsv`.
    pub manifest: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/phones.tsv`.
    pub phone_labels: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            output_dir: PathBuf::from("out"),
            phone_labels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansSection {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Frames drawn uniformly from the corpus for fitting; all frames if unset.
    pub subsample_frames: Option<usize>,
    pub chunk_size: usize,
    pub restarts: usize,
}

impl Default for KMeansSection {
    fn default() -> Self {
        let base = KMeansConfig::default();
        Self {
            k: 2000,
            seed: base.seed,
            max_iters: base.max_iters,
            rel_tol: base.rel_tol,
            subsample_frames: None,
            chunk_size: base.chunk_size,
            restarts: base.restarts,
        }
    }
}

impl KMeansSection {
    pub fn fit_config(&self) -> KMeansConfig {
        KMeansConfig {
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            seed: self.seed,
            chunk_size: self.chunk_size,
            restarts: self.restarts,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub dedup: bool,
    pub subword: Option<SubwordSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubwordSection {
    pub target_vocab: usize,
    pub max_piece_len: usize,
    pub seed_vocab_size: usize,
    pub em_steps_per_round: usize,
    pub keep_fraction: f64,
    pub final_em_steps: usize,
}

impl Default for SubwordSection {
    fn default() -> Self {
        let base = SubwordTrainConfig::default();
        Self {
            target_vocab: 6000,
            max_piece_len: base.max_piece_len,
            seed_vocab_size: base.seed_vocab_size,
            em_steps_per_round: base.em_steps_per_round,
            keep_fraction: base.keep_fraction,
            final_em_steps: base.final_em_steps,
        }
    }
}

impl SubwordSection {
    pub fn train_config(&self) -> SubwordTrainConfig {
        SubwordTrainConfig {
            max_piece_len: self.max_piece_len,
            seed_vocab_size: self.seed_vocab_size,
            em_steps_per_round: self.em_steps_per_round,
            keep_fraction: self.keep_fraction,
            final_em_steps: self.final_em_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskingConfig {
    pub enabled: bool,
    pub num_masks: usize,
    pub max_span_frames: usize,
    pub seed: u64,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        let base = MaskConfig::default();
        Self {
            enabled: false,
            num_masks: base.num_masks,
            max_span_frames: base.max_span_frames,
            seed: 0,
        }
    }
}

impl MaskingConfig {
    pub fn mask_config(&self) -> MaskConfig {
        MaskConfig {
            num_masks: self.num_masks,
            max_span_frames: self.max_span_frames,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Corpus duration used for the hypothetical storage estimate.
    pub hypothetical_hours: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            hypothetical_hours: 960.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
}

impl PipelineConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("{source}: {e}")))?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::fsutil::atomic_write(path, self.to_text().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        if self.kmeans.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "kmeans.k must be ≥ 2, got {}",
                self.kmeans.k
            )));
        }
        if self.kmeans.subsample_frames == Some(0) {
            return Err(Error::InvalidConfig("kmeans.subsample_frames must be ≥ 1".into()));
        }
        self.kmeans.fit_config().validate()?;
        if let Some(sw) = &self.reduction.subword {
            if sw.target_vocab < self.kmeans.k {
                return Err(Error::InvalidConfig(format!(
                    "reduction.subword.target_vocab ({}) must be ≥ kmeans.k ({})",
                    sw.target_vocab, self.kmeans.k
                )));
            }
            sw.train_config().validate()?;
        }
        if self.masking.enabled && self.masking.max_span_frames == 0 {
            return Err(Error::InvalidConfig("masking.max_span_frames must be ≥ 1".into()));
        }
        if !(self.report.hypothetical_hours.is_finite() && self.report.hypothetical_hours >= 0.0) {
            return Err(Error::InvalidConfig("report.hypothetical_hours must be ≥ 0".into()));
        }
        self.synth.validate()
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.paths
            .manifest
            .clone()
            .unwrap_or_else(|| self.paths.output_dir.join("manifest.tsv"))
    }

    pub fn phone_labels_path(&self) -> PathBuf {
        self.paths
            .phone_labels
            .clone()
            .unwrap_or_else(|| self.paths.output_dir.join("phones.tsv"))
    }

    pub fn codebook_path(&self) -> PathBuf {
        self.paths.output_dir.join("codebook.dscb")
    }

    pub fn subword_model_path(&self) -> PathBuf {
        self.paths.output_dir.join("subword.model")
    }

    pub fn tokens_dir(&self) -> PathBuf {
        self.paths.output_dir.join("tokens")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut cfg = PipelineConfig::default();
        cfg.paths.manifest = Some("feats/manifest.tsv".into());
        cfg.kmeans.k = 500;
        cfg.kmeans.rel_tol = 3.3e-7;
        cfg.kmeans.subsample_frames = Some(123_456);
        cfg.reduction.dedup = true;
        cfg.reduction.subword = Some(SubwordSection {
            target_vocab: 6000,
            keep_fraction: 0.75,
            ..Default::default()
        });
        cfg.masking.enabled = true;
        cfg.synth.persistence = 0.1 + 0.2;
        cfg.synth.num_phones = Some(7);
        let text = cfg.to_text();
        assert_eq!(PipelineConfig::parse(&text, "t").unwrap(), cfg);
        let default_text = PipelineConfig::default().to_text();
        assert_eq!(
            PipelineConfig::parse(&default_text, "t").unwrap(),
            PipelineConfig::default()
        );
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg =
            PipelineConfig::parse("[kmeans]\nk = 16\n[reduction]\nsubword = { target_vocab = 40 }\n", "t").unwrap();
        assert_eq!(cfg.kmeans.k, 16);
        assert_eq!(cfg.kmeans.max_iters, 100);
        assert_eq!(cfg.reduction.subword.unwrap().max_piece_len, 8);
    }

    #[test]
    fn invalid_settings() {
        let bad = |text: &str| PipelineConfig::parse(text, "t").and_then(|c| c.validate()).unwrap_err();
        assert!(matches!(bad("[kmeans]\nk = 1\n"), Error::InvalidConfig(_)));
        assert!(matches!(
            bad("[kmeans]\nk = 100\n[reduction.subword]\ntarget_vocab = 50\n"),
            Error::InvalidConfig(_)
        ));
        assert!(matches!(bad("[kmeans]\nkk = 3\n"), Error::InvalidConfig(_)));
        assert!(matches!(bad("[kmeans]\nk = \"many\"\n"), Error::InvalidConfig(_)));
    }
}
