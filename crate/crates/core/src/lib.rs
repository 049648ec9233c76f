//! Extractive audio summarization.
//!
//! A linear model learns to predict, from MFCC statistics alone, how far a
//! segment's word distribution diverges from that of the whole recording.
//! At summarization time no transcript is needed: the recording is split
//! into a repeating background and a foreground, the background is
//! clustered into contiguous candidate segments, every candidate is scored
//! from its predicted divergence, position and length, and the best ones
//! are concatenated until the time budget is spent.
//!
//! ```no_run
//! use audiosum::prelude::*;
//!
//! # fn main() -> audiosum::Result<()> {
//! let cfg = PipelineConfig::default();
//! let model = RegressionModel::load("model.txt")?;
//! let audio = read_wav("talk.wav")?;
//! let summary = summarize_buffer(&model, &audio, 0.35, &cfg, "talk.wav", "model.txt")?;
//! write_wav(&summary.audio, "summary.wav")?;
//! print!("{}", summary.report.to_manifest());
//! # Ok(())
//! # }
//! ```

pub mod audio_io;
pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod linalg;
pub mod model;
pub mod segmentation;
pub mod separation;
pub mod spectral;
pub mod summarizer;
pub mod synth;
pub mod textinfo;

pub use error::{Error, Result};

/// The types and functions most programs need.
pub mod prelude {
    pub use crate::audio_io::{read_wav, read_wav_at, resample, write_wav, AudioBuffer};
    pub use crate::cli::{score_candidates, summarize_buffer, train_from_manifest};
    pub use crate::config::PipelineConfig;
    pub use crate::features::{segment_features, FeatureVector};
    pub use crate::model::{ConfigEcho, RegressionModel};
    pub use crate::segmentation::{cluster_segments, target_k, Segment};
    pub use crate::separation::split_channels;
    pub use crate::spectral::{MfccExtractor, Stft};
    pub use crate::summarizer::{score_segment, select_segments, ScoredSegment, SummarySpec};
    pub use crate::textinfo::{jsd, JsdParams, TimedTranscript, TokenDistribution};
    pub use crate::{Error, Result};
}
