//! Fixed-layout segment descriptor built from MFCC statistics.
//!
//! Layout (coefficient-major): for each coefficient `c`, eleven values at
//! `c * 11 + s` where `s` follows [`Statistic::ALL`]; then the frame count
//! and the segment start time in seconds. With 25 coefficients that is
//! 277 values.

use std::fmt;

use crate::audio_io::AudioBuffer;
use crate::error::{Error, Result};
use crate::segmentation::Segment;
use crate::spectral::{deltas, frame_count, MfccExtractor, MfccMatrix};

pub const STATS_PER_COEFF: usize = 11;
pub const FEATURE_LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Min,
    Max,
    Median,
    Mean,
    Variance,
    Skewness,
    Kurtosis,
    DeltaMean,
    DeltaVariance,
    DeltaDeltaMean,
    DeltaDeltaVariance,
}

impl Statistic {
    pub const ALL: [Statistic; STATS_PER_COEFF] = [
        Statistic::Min,
        Statistic::Max,
        Statistic::Median,
        Statistic::Mean,
        Statistic::Variance,
        Statistic::Skewness,
        Statistic::Kurtosis,
        Statistic::DeltaMean,
        Statistic::DeltaVariance,
        Statistic::DeltaDeltaMean,
        Statistic::DeltaDeltaVariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Min => "min",
            Statistic::Max => "max",
            Statistic::Median => "median",
            Statistic::Mean => "mean",
            Statistic::Variance => "var",
            Statistic::Skewness => "skew",
            Statistic::Kurtosis => "kurt",
            Statistic::DeltaMean => "d_mean",
            Statistic::DeltaVariance => "d_var",
            Statistic::DeltaDeltaMean => "dd_mean",
            Statistic::DeltaDeltaVariance => "dd_var",
        }
    }
}

/// What a position in the feature vector holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSlot {
    Coefficient { coeff: usize, stat: Statistic },
    FrameCount,
    StartTime,
}

impl fmt::Display for FeatureSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSlot::Coefficient { coeff, stat } => write!(f, "mfcc{coeff}.{}", stat.name()),
            FeatureSlot::FrameCount => f.write_str("n_frames"),
            FeatureSlot::StartTime => f.write_str("start_time"),
        }
    }
}

pub fn slot_of(index: usize, n_mfcc: usize) -> Option<FeatureSlot> {
    let n_stats = n_mfcc * STATS_PER_COEFF;
    match index {
        i if i < n_stats => Some(FeatureSlot::Coefficient {
            coeff: i / STATS_PER_COEFF,
            stat: Statistic::ALL[i % STATS_PER_COEFF],
        }),
        i if i == n_stats => Some(FeatureSlot::FrameCount),
        i if i == n_stats + 1 => Some(FeatureSlot::StartTime),
        _ => None,
    }
}

pub fn index_of(slot: FeatureSlot, n_mfcc: usize) -> usize {
    match slot {
        FeatureSlot::Coefficient { coeff, stat } => {
            coeff * STATS_PER_COEFF + Statistic::ALL.iter().position(|&s| s == stat).unwrap()
        }
        FeatureSlot::FrameCount => n_mfcc * STATS_PER_COEFF,
        FeatureSlot::StartTime => n_mfcc * STATS_PER_COEFF + 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_frames(&self) -> f64 {
        self.values[self.values.len() - 2]
    }

    pub fn start_time(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population central moments 2..=4 about `mu`.
fn central_moments(xs: &[f64], mu: f64) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mu;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// The eleven per-coefficient statistics, in [`Statistic::ALL`] order.
///
/// Variance is the population variance; skewness and kurtosis are moment
/// ratios (kurtosis not excess), both 0 for a constant series.
pub fn stats_11(series: &[f64], dseries: &[f64], ddseries: &[f64]) -> Result<[f64; STATS_PER_COEFF]> {
    if series.is_empty() || dseries.is_empty() || ddseries.is_empty() {
        return Err(Error::InvalidArgument("statistics of an empty series".into()));
    }
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mu = if min == max { min } else { mean(series) };
    let (var, m3, m4) = central_moments(series, mu);
    let (skew, kurt) = if var > 0.0 {
        (m3 / var.powf(1.5), m4 / (var * var))
    } else {
        (0.0, 0.0)
    };
    let d_mu = mean(dseries);
    let dd_mu = mean(ddseries);
    Ok([
        min,
        max,
        median(series),
        mu.clamp(min, max),
        var,
        skew,
        kurt,
        d_mu,
        central_moments(dseries, d_mu).0,
        dd_mu,
        central_moments(ddseries, dd_mu).0,
    ])
}

/// Descriptor of an already computed MFCC matrix.
pub fn features_from_mfcc(m: &MfccMatrix, start_time: f64) -> Result<FeatureVector> {
    let (d1, d2) = deltas(m)?;
    features_from_tracks(m, &d1, &d2, start_time)
}

/// Descriptor from coefficient tracks and their first and second
/// derivatives. Every statistic is invariant to a joint reordering of frames.
pub fn features_from_tracks(
    m: &MfccMatrix,
    d1: &MfccMatrix,
    d2: &MfccMatrix,
    start_time: f64,
) -> Result<FeatureVector> {
    let n_mfcc = m.n_mfcc();
    if d1.coefficients.shape() != m.coefficients.shape() || d2.coefficients.shape() != m.coefficients.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", m.coefficients.shape()),
            got: format!("{:?} / {:?}", d1.coefficients.shape(), d2.coefficients.shape()),
        });
    }
    let mut values = Vec::with_capacity(n_mfcc * STATS_PER_COEFF + 2);
    for c in 0..n_mfcc {
        let stats = stats_11(
            &m.coefficients.row(c),
            &d1.coefficients.row(c),
            &d2.coefficients.row(c),
        )?;
        values.extend_from_slice(&stats);
    }
    values.push(m.n_frames() as f64);
    values.push(start_time);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature vector"));
    }
    Ok(FeatureVector { values })
}

/// Descriptor of `seg` computed on the samples of `buffer` it covers.
pub fn segment_features(extractor: &MfccExtractor, buffer: &AudioBuffer, seg: &Segment) -> Result<FeatureVector> {
    let slice = buffer.slice_seconds(seg.start_time, seg.end_time);
    let hop = extractor.stft().hop();
    let needed = extractor.stft().n_fft().max(2 * hop);
    if slice.len() < needed || frame_count(slice.len(), hop) < 3 {
        return Err(Error::TooShort {
            needed,
            got: slice.len(),
        });
    }
    let m = extractor.compute(&slice)?;
    features_from_mfcc(&m, seg.start_time)
}

/// Like [`segment_features`], but a segment too short for analysis is
/// measured on a window widened symmetrically around it (clamped to the
/// buffer). The frame count and start time still describe the segment.
pub fn segment_features_padded(
    extractor: &MfccExtractor,
    buffer: &AudioBuffer,
    seg: &Segment,
) -> Result<FeatureVector> {
    let needed = extractor.stft().n_fft().max(2 * extractor.stft().hop());
    let a = buffer.sample_at(seg.start_time);
    let b = buffer.sample_at(seg.end_time).max(a);
    if b - a >= needed {
        return segment_features(extractor, buffer, seg);
    }
    if buffer.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: buffer.len(),
        });
    }
    let missing = needed - (b - a);
    let mut lo = a.saturating_sub(missing / 2);
    let hi = (lo + needed).min(buffer.len());
    lo = hi - needed;
    let window = AudioBuffer {
        samples: buffer.samples[lo..hi].to_vec(),
        sample_rate: buffer.sample_rate,
    };
    let m = extractor.compute(&window)?;
    let mut fv = features_from_mfcc(&m, seg.start_time)?;
    let n = fv.len();
    fv.values[n - 2] = frame_count(b - a, extractor.stft().hop()) as f64;
    Ok(fv)
}
