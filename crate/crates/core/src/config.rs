//! Pipeline parameters shared by every stage.
//!
//! Values can come from a TOML file (pointed to by `AUDIOSUM_CONFIG` or
//! `--config`); command-line flags win over the file, the file wins over the
//! defaults. The effective configuration is echoed into model files and
//! summary manifests.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Environment variable naming an optional config file.
pub const CONFIG_ENV: &str = "AUDIOSUM_CONFIG";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mfcc: usize,
    pub n_mels: usize,
    /// Training window length in seconds.
    pub segment_length_train: f64,
    /// Summary budget as a fraction of the source duration.
    pub ratio: f64,
    /// Maximum number of repeating frames aggregated per frame.
    pub n_similar: usize,
    /// Minimum distance in seconds between two repeating frames.
    pub separation_gap: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            n_fft: 2048,
            hop: 512,
            n_mfcc: 25,
            n_mels: 128,
            segment_length_train: 10.0,
            ratio: 0.35,
            n_similar: 100,
            separation_gap: 2.0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Defaults, overlaid by the file named in `AUDIOSUM_CONFIG` when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sample_rate", self.sample_rate as f64),
            ("n_fft", self.n_fft as f64),
            ("hop", self.hop as f64),
            ("n_mfcc", self.n_mfcc as f64),
            ("n_mels", self.n_mels as f64),
            ("segment_length_train", self.segment_length_train),
            ("ratio", self.ratio),
            ("n_similar", self.n_similar as f64),
            ("separation_gap", self.separation_gap),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.ratio >= 1.0 {
            return Err(Error::Config(format!("ratio must be < 1, got {}", self.ratio)));
        }
        if self.hop > self.n_fft {
            return Err(Error::Config("hop must not exceed n_fft".into()));
        }
        if self.n_mfcc > self.n_mels {
            return Err(Error::Config("n_mfcc must not exceed n_mels".into()));
        }
        Ok(())
    }

    /// Number of values in a segment descriptor: 11 statistics per
    /// coefficient plus frame count and start time.
    pub fn feature_len(&self) -> usize {
        crate::features::STATS_PER_COEFF * self.n_mfcc + 2
    }

    /// Minimum frame distance between repeating frames.
    pub fn separation_gap_frames(&self) -> usize {
        (self.separation_gap * self.sample_rate as f64 / self.hop as f64).ceil() as usize
    }
}

impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sample_rate={} n_fft={} hop={} n_mfcc={} n_mels={} segment_length_train={} ratio={} n_similar={} separation_gap={}",
            self.sample_rate,
            self.n_fft,
            self.hop,
            self.n_mfcc,
            self.n_mels,
            self.segment_length_train,
            self.ratio,
            self.n_similar,
            self.separation_gap
        )
    }
}
