//! Smoothed word distributions, Jensen–Shannon divergence, and training
//! targets from time-stamped transcripts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::audio_io::AudioBuffer;
use crate::error::{Error, Result};
use crate::features::{segment_features, FeatureVector};
use crate::segmentation::Segment;
use crate::spectral::MfccExtractor;

/// Remainder windows shorter than this are merged into the previous window.
pub const MIN_REMAINDER_SECONDS: f64 = 3.0;

/// Lowercases, splits on whitespace and trims non-alphanumeric characters
/// from both ends of every token. Internal punctuation is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Word counts of a document or segment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenDistribution {
    counts: BTreeMap<String, usize>,
    total: usize,
}

impl TokenDistribution {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut d = TokenDistribution::default();
        for t in tokens {
            *d.counts.entry(t.into()).or_insert(0) += 1;
            d.total += 1;
        }
        d
    }

    pub fn from_text(text: &str) -> Self {
        Self::from_tokens(tokenize(text))
    }

    pub fn count(&self, word: &str) -> usize {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total_tokens(&self) -> usize {
        self.total
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// Additive smoothing: `delta` is added to every count and
/// `beta = beta_factor * |V|` scales the mass added to the denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsdParams {
    pub delta: f64,
    pub beta_factor: f64,
}

impl Default for JsdParams {
    fn default() -> Self {
        Self {
            delta: 0.0005,
            beta_factor: 1.5,
        }
    }
}

/// `(C_w + delta) / (|D| + delta * beta_factor * vocab_size)`.
pub fn smoothed_prob(dist: &TokenDistribution, word: &str, params: JsdParams, vocab_size: usize) -> f64 {
    let beta = params.beta_factor * vocab_size as f64;
    (dist.count(word) as f64 + params.delta) / (dist.total as f64 + params.delta * beta)
}

/// Jensen–Shannon divergence (base 2) between smoothed distributions,
/// summed over the union of both vocabularies. `|V|` is the size of that
/// union, which equals the source vocabulary whenever the segment is drawn
/// from the source.
pub fn jsd(source: &TokenDistribution, segment: &TokenDistribution, params: JsdParams) -> Result<f64> {
    if source.is_empty() {
        return Err(Error::EmptySource);
    }
    let union: BTreeSet<&str> = source.vocabulary().chain(segment.vocabulary()).collect();
    let v = union.len();
    let sum: f64 = union
        .iter()
        .map(|w| {
            let p = smoothed_prob(source, w, params, v);
            let q = smoothed_prob(segment, w, params, v);
            let m = p + q;
            p * (2.0 * p / m).log2() + q * (2.0 * q / m).log2()
        })
        .sum();
    Ok((sum / 2.0).max(0.0))
}

/// Words with start times, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimedTranscript {
    pub words: Vec<(f64, String)>,
}

impl TimedTranscript {
    /// Parses `start_seconds<TAB>token` lines; `#` lines and blank lines are
    /// skipped. Tokens are normalized with [`tokenize`]; a line whose token
    /// normalizes to nothing is dropped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut words = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (time, token) = trimmed.split_once('\t').ok_or_else(|| Error::Transcript {
                line: line_no,
                message: "expected `start_seconds<TAB>token`".into(),
            })?;
            let start: f64 = time.trim().parse().map_err(|_| Error::Transcript {
                line: line_no,
                message: format!("bad start time {time:?}"),
            })?;
            if !start.is_finite() || start < 0.0 {
                return Err(Error::Transcript {
                    line: line_no,
                    message: format!("start time {start} out of range"),
                });
            }
            if start < last {
                return Err(Error::Transcript {
                    line: line_no,
                    message: "start times must be non-decreasing".into(),
                });
            }
            last = start;
            words.extend(tokenize(token).into_iter().map(|t| (start, t)));
        }
        Ok(Self { words })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn distribution(&self) -> TokenDistribution {
        TokenDistribution::from_tokens(self.words.iter().map(|(_, w)| w.clone()))
    }

    /// Words whose start time lies in `[start, end)`.
    pub fn window(&self, start: f64, end: f64) -> TokenDistribution {
        TokenDistribution::from_tokens(
            self.words
                .iter()
                .filter(|(t, _)| *t >= start && *t < end)
                .map(|(_, w)| w.clone()),
        )
    }
}

/// Consecutive `[start, end)` windows of `length` seconds covering
/// `[0, duration)`. A final remainder of at least 3 s is its own window;
/// a shorter one is merged into the window before it.
pub fn training_windows(duration: f64, length: f64) -> Vec<(f64, f64)> {
    if !(duration > 0.0) || !(length > 0.0) {
        return Vec::new();
    }
    let full = (duration / length).floor() as usize;
    let mut out: Vec<(f64, f64)> = (0..full)
        .map(|i| (i as f64 * length, (i + 1) as f64 * length))
        .collect();
    let covered = full as f64 * length;
    let remainder = duration - covered;
    if remainder >= MIN_REMAINDER_SECONDS || out.is_empty() {
        if remainder > 0.0 {
            out.push((covered, duration));
        }
    } else if remainder > 0.0 {
        out.last_mut().unwrap().1 = duration;
    }
    if let Some(last) = out.last_mut() {
        last.1 = duration;
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub features: FeatureVector,
    pub divergence: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainingPairs {
    pub pairs: Vec<TrainingPair>,
    /// Windows dropped because no word starts inside them.
    pub skipped_windows: usize,
}

/// One (features, divergence) pair per window that contains speech.
pub fn build_training_pairs(
    extractor: &MfccExtractor,
    audio: &AudioBuffer,
    transcript: &TimedTranscript,
    segment_length: f64,
    params: JsdParams,
) -> Result<TrainingPairs> {
    if transcript.words.is_empty() {
        return Err(Error::EmptyTranscript);
    }
    let n_fft = extractor.stft().n_fft();
    if audio.len() < n_fft {
        return Err(Error::TooShort {
            needed: n_fft,
            got: audio.len(),
        });
    }
    let source = transcript.distribution();
    let mut out = TrainingPairs::default();
    for (i, (start, end)) in training_windows(audio.duration(), segment_length).into_iter().enumerate() {
        let segment_dist = transcript.window(start, end);
        if segment_dist.is_empty() {
            out.skipped_windows += 1;
            continue;
        }
        let seg = Segment::new(i, start, end)?;
        let features = segment_features(extractor, audio, &seg)?;
        out.pairs.push(TrainingPair {
            features,
            divergence: jsd(&source, &segment_dist, params)?,
        });
    }
    Ok(out)
}
