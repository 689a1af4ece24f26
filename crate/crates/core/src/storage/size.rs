//! Storage cost of a T-second utterance in each representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeModel {
    RawWaveform {
        sample_rate_hz: f64,
        sample_bits: u32,
    },
    AcousticFeatures {
        dim: u32,
        frame_rate_hz: f64,
        float_bits: u32,
    },
    SslFeatures {
        dim: u32,
        frame_rate_hz: f64,
        float_bits: u32,
    },
    DiscreteTokens {
        token_bits: u32,
        token_rate_hz: f64,
    },
}

impl SizeModel {
    /// 16 kHz, 16-bit PCM.
    pub const fn raw_waveform() -> Self {
        Self::RawWaveform {
            sample_rate_hz: 16000.0,
            sample_bits: 16,
        }
    }

    /// `dim`-dimensional 32-bit float vectors at 100 frames/s.
    pub const fn acoustic_features(dim: u32) -> Self {
        Self::AcousticFeatures {
            dim,
            frame_rate_hz: 100.0,
            float_bits: 32,
        }
    }

    /// 1024-dimensional 32-bit float embeddings at 50 frames/s.
    pub const fn ssl_features() -> Self {
        Self::SslFeatures {
            dim: 1024,
            frame_rate_hz: 50.0,
            float_bits: 32,
        }
    }

    /// 12-bit tokens (up to 4096 clusters) at 50 tokens/s.
    pub const fn discrete_tokens() -> Self {
        Self::DiscreteTokens {
            token_bits: 12,
            token_rate_hz: 50.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::RawWaveform { .. } => "raw waveform",
            Self::AcousticFeatures { .. } => "acoustic features",
            Self::SslFeatures { .. } => "SSL features",
            Self::DiscreteTokens { .. } => "discrete tokens",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |rate: f64, ints: &[u32]| rate.is_finite() && rate > 0.0 && ints.iter().all(|&v| v > 0);
        let valid = match *self {
            Self::RawWaveform {
                sample_rate_hz,
                sample_bits,
            } => ok(sample_rate_hz, &[sample_bits]),
            Self::AcousticFeatures {
                dim,
                frame_rate_hz,
                float_bits,
            }
            | Self::SslFeatures {
                dim,
                frame_rate_hz,
                float_bits,
            } => ok(frame_rate_hz, &[dim, float_bits]),
            Self::DiscreteTokens {
                token_bits,
                token_rate_hz,
            } => ok(token_rate_hz, &[token_bits]),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "size model parameters must be positive: {self:?}"
            )))
        }
    }

    pub fn bits_per_second(&self) -> f64 {
        match *self {
            Self::RawWaveform {
                sample_rate_hz,
                sample_bits,
            } => sample_bits as f64 * sample_rate_hz,
            Self::AcousticFeatures {
                dim,
                frame_rate_hz,
                float_bits,
            }
            | Self::SslFeatures {
                dim,
                frame_rate_hz,
                float_bits,
            } => float_bits as f64 * dim as f64 * frame_rate_hz,
            Self::DiscreteTokens {
                token_bits,
                token_rate_hz,
            } => token_bits as f64 * token_rate_hz,
        }
    }
}

/// Size in bits of `duration_s` seconds of speech.
pub fn size_bits(model: &SizeModel, duration_s: f64) -> Result<f64> {
    model.validate()?;
    if !(duration_s.is_finite() && duration_s >= 0.0) {
        return Err(Error::InvalidConfig(format!("duration must be ≥ 0, got {duration_s}")));
    }
    Ok(model.bits_per_second() * duration_s)
}

/// Decimal gigabytes.
pub fn bits_to_gb(bits: f64) -> f64 {
    bits / 8.0 / 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(size_bits(&SizeModel::raw_waveform(), 1.0).unwrap(), 256_000.0);
        assert_eq!(size_bits(&SizeModel::ssl_features(), 1.0).unwrap(), 1_638_400.0);
        assert_eq!(size_bits(&SizeModel::acoustic_features(80), 1.0).unwrap(), 256_000.0);
        assert_eq!(size_bits(&SizeModel::discrete_tokens(), 1.0).unwrap(), 600.0);
        assert_eq!(size_bits(&SizeModel::discrete_tokens(), 0.0).unwrap(), 0.0);
        let t = 960.0 * 3600.0;
        let bits = size_bits(&SizeModel::discrete_tokens(), t).unwrap();
        assert_eq!(bits, 2_073_600_000.0);
        assert!((bits_to_gb(bits) - 0.2592).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(size_bits(&SizeModel::raw_waveform(), -1.0).is_err());
        assert!(size_bits(&SizeModel::raw_waveform(), f64::NAN).is_err());
        let bad = SizeModel::DiscreteTokens {
            token_bits: 0,
            token_rate_hz: 50.0,
        };
        assert!(size_bits(&bad, 1.0).is_err());
    }
}
