//! STFT/ISTFT, mel filterbank, MFCCs and their temporal derivatives.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::audio_io::AudioBuffer;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};

/// Floor applied to mel power before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// Dense real matrix stored frame-major: column `t` (one frame) is
/// contiguous, row `r` is a frequency bin or a cepstral coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    n_rows: usize,
    n_frames: usize,
    data: Vec<f64>,
}

impl FrameMatrix {
    pub fn zeros(n_rows: usize, n_frames: usize) -> Self {
        Self {
            n_rows,
            n_frames,
            data: vec![0.0; n_rows * n_frames],
        }
    }

    /// Builds a matrix from per-frame columns; all columns must share a length.
    pub fn from_frames(frames: &[Vec<f64>]) -> Result<Self> {
        let n_rows = frames.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * frames.len());
        for (t, f) in frames.iter().enumerate() {
            if f.len() != n_rows {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n_rows} rows"),
                    got: format!("{} rows in frame {t}", f.len()),
                });
            }
            data.extend_from_slice(f);
        }
        Ok(Self {
            n_rows,
            n_frames: frames.len(),
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_frames)
    }

    pub fn get(&self, row: usize, frame: usize) -> f64 {
        self.data[frame * self.n_rows + row]
    }

    pub fn set(&mut self, row: usize, frame: usize, v: f64) {
        self.data[frame * self.n_rows + row] = v;
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_rows..(t + 1) * self.n_rows]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.n_rows..(t + 1) * self.n_rows]
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        (0..self.n_frames).map(|t| self.get(r, t)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Columns `[start, end)` as a new matrix.
    pub fn frames_range(&self, start: usize, end: usize) -> FrameMatrix {
        FrameMatrix {
            n_rows: self.n_rows,
            n_frames: end - start,
            data: self.data[start * self.n_rows..end * self.n_rows].to_vec(),
        }
    }
}

/// Complex STFT with its framing metadata.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    n_bins: usize,
    n_frames: usize,
    data: Vec<Complex64>,
    pub n_fft: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn from_parts(
        frames: Vec<Vec<Complex64>>,
        n_fft: usize,
        hop: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        let n_bins = n_fft / 2 + 1;
        if hop == 0 || hop > n_fft {
            return Err(Error::InvalidArgument(format!("hop {hop} with n_fft {n_fft}")));
        }
        let n_frames = frames.len();
        let mut data = Vec::with_capacity(n_bins * n_frames);
        for f in frames {
            if f.len() != n_bins {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n_bins} bins"),
                    got: format!("{} bins", f.len()),
                });
            }
            data.extend(f);
        }
        Ok(Self {
            n_bins,
            n_frames,
            data,
            n_fft,
            hop,
            sample_rate,
        })
    }

    /// Spectrogram whose frames are the given magnitude columns with zero phase.
    pub fn from_magnitudes(mag: &FrameMatrix, n_fft: usize, hop: usize, sample_rate: u32) -> Result<Self> {
        let frames = (0..mag.n_frames())
            .map(|t| mag.frame(t).iter().map(|&m| Complex64::new(m, 0.0)).collect())
            .collect();
        Self::from_parts(frames, n_fft, hop, sample_rate)
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn magnitude(&self) -> FrameMatrix {
        FrameMatrix {
            n_rows: self.n_bins,
            n_frames: self.n_frames,
            data: self.data.iter().map(|c| c.norm()).collect(),
        }
    }

    /// Pointwise product with a real mask of the same shape.
    pub fn apply_mask(&self, mask: &FrameMatrix) -> Result<Spectrogram> {
        if mask.shape() != (self.n_bins, self.n_frames) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.n_bins, self.n_frames),
                got: format!("{}x{}", mask.n_rows(), mask.n_frames()),
            });
        }
        let data = self.data.iter().zip(&mask.data).map(|(c, m)| c * m).collect();
        Ok(Spectrogram {
            data,
            ..self.clone_meta()
        })
    }

    fn clone_meta(&self) -> Spectrogram {
        Spectrogram {
            n_bins: self.n_bins,
            n_frames: self.n_frames,
            data: Vec::new(),
            n_fft: self.n_fft,
            hop: self.hop,
            sample_rate: self.sample_rate,
        }
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Number of centered frames for a signal of `len` samples.
pub fn frame_count(len: usize, hop: usize) -> usize {
    1 + len / hop
}

/// Centered, Hann-windowed short-time Fourier transform and its inverse.
pub struct Stft {
    n_fft: usize,
    hop: usize,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Stft {
    pub fn new(n_fft: usize, hop: usize) -> Result<Self> {
        if n_fft < 2 || hop == 0 || hop > n_fft {
            return Err(Error::InvalidArgument(format!(
                "stft needs n_fft >= 2 and 0 < hop <= n_fft (n_fft={n_fft}, hop={hop})"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n_fft,
            hop,
            window: hann(n_fft),
            forward: planner.plan_fft_forward(n_fft),
            inverse: planner.plan_fft_inverse(n_fft),
        })
    }

    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        Self::new(cfg.n_fft, cfg.hop)
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Frame `t` covers padded samples `[t*hop, t*hop + n_fft)`, where the
    /// signal is reflect-padded by `n_fft/2` on both sides.
    pub fn forward(&self, buffer: &AudioBuffer) -> Result<Spectrogram> {
        let len = buffer.len();
        if len < self.n_fft {
            return Err(Error::TooShort {
                needed: self.n_fft,
                got: len,
            });
        }
        let padded = reflect_pad(&buffer.samples, self.n_fft / 2);
        let n_frames = frame_count(len, self.hop);
        let n_bins = self.n_fft / 2 + 1;
        let mut data = Vec::with_capacity(n_bins * n_frames);
        let mut scratch = vec![Complex64::default(); self.forward.get_inplace_scratch_len()];
        let mut buf = vec![Complex64::default(); self.n_fft];
        for t in 0..n_frames {
            let start = t * self.hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(padded[start + i] * self.window[i], 0.0);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            data.extend_from_slice(&buf[..n_bins]);
        }
        Ok(Spectrogram {
            n_bins,
            n_frames,
            data,
            n_fft: self.n_fft,
            hop: self.hop,
            sample_rate: buffer.sample_rate,
        })
    }

    /// Weighted overlap-add inverse, normalized by the summed squared window.
    pub fn inverse(&self, spec: &Spectrogram, length: usize) -> Result<AudioBuffer> {
        if spec.n_fft != self.n_fft || spec.hop != self.hop || spec.n_bins != self.n_fft / 2 + 1 {
            return Err(Error::InvalidArgument(format!(
                "spectrogram (n_fft={}, hop={}) does not match transform (n_fft={}, hop={})",
                spec.n_fft, spec.hop, self.n_fft, self.hop
            )));
        }
        let pad = self.n_fft / 2;
        let padded_len = (spec.n_frames.saturating_sub(1)) * self.hop + self.n_fft;
        let mut acc = vec![0.0; padded_len];
        let mut norm = vec![0.0; padded_len];
        let mut scratch = vec![Complex64::default(); self.inverse.get_inplace_scratch_len()];
        let mut buf = vec![Complex64::default(); self.n_fft];
        let scale = 1.0 / self.n_fft as f64;
        for t in 0..spec.n_frames {
            let half = spec.frame(t);
            buf[..half.len()].copy_from_slice(half);
            // hermitian completion; DC and Nyquist imaginary parts are dropped
            buf[0].im = 0.0;
            if self.n_fft.is_multiple_of(2) {
                buf[self.n_fft / 2].im = 0.0;
            }
            for k in half.len()..self.n_fft {
                buf[k] = half[self.n_fft - k].conj();
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = t * self.hop;
            for i in 0..self.n_fft {
                let w = self.window[i];
                acc[start + i] += buf[i].re * scale * w;
                norm[start + i] += w * w;
            }
        }
        let samples = (0..length)
            .map(|i| {
                let j = i + pad;
                if j < padded_len && norm[j] > 1e-12 {
                    acc[j] / norm[j]
                } else {
                    0.0
                }
            })
            .collect();
        Ok(AudioBuffer {
            samples,
            sample_rate: spec.sample_rate,
        })
    }
}

fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((0..pad).map(|i| x[n - 2 - i]));
    out
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filter, stored as its first nonzero bin plus weights.
#[derive(Debug, Clone)]
struct MelBand {
    first_bin: usize,
    weights: Vec<f64>,
}

/// Triangular mel filterbank spanning 0 Hz to Nyquist, peak weight 1.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    bands: Vec<MelBand>,
    n_bins: usize,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: u32) -> Self {
        let n_bins = n_fft / 2 + 1;
        let nyquist = sample_rate as f64 / 2.0;
        let top = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = sample_rate as f64 / n_fft as f64;
        let bands = (0..n_mels)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                let mut first_bin = None;
                let mut weights = Vec::new();
                for k in 0..n_bins {
                    let f = k as f64 * bin_hz;
                    let w = ((f - lo) / (mid - lo)).min((hi - f) / (hi - mid)).max(0.0);
                    if w > 0.0 {
                        first_bin.get_or_insert(k);
                        weights.push(w);
                    } else if first_bin.is_some() {
                        break;
                    }
                }
                MelBand {
                    first_bin: first_bin.unwrap_or(0),
                    weights,
                }
            })
            .collect();
        Self { bands, n_bins }
    }

    pub fn n_mels(&self) -> usize {
        self.bands.len()
    }

    /// Dense weight matrix row for band `m`.
    pub fn band_weights(&self, m: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_bins];
        let b = &self.bands[m];
        row[b.first_bin..b.first_bin + b.weights.len()].copy_from_slice(&b.weights);
        row
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.bands
            .iter()
            .map(|b| {
                b.weights
                    .iter()
                    .zip(&power[b.first_bin..])
                    .map(|(w, p)| w * p)
                    .sum()
            })
            .collect()
    }
}

/// Orthonormal DCT-II basis truncated to `n_out` coefficients.
fn dct2_basis(n_in: usize, n_out: usize) -> Vec<Vec<f64>> {
    let n = n_in as f64;
    (0..n_out)
        .map(|k| {
            let s = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            (0..n_in)
                .map(|i| s * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                .collect()
        })
        .collect()
}

/// Cepstral coefficients `[n_mfcc x n_frames]` with frame-center times.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    pub coefficients: FrameMatrix,
    pub frame_times: Vec<f64>,
    /// Duration in seconds of the analysed signal.
    pub duration: f64,
}

impl MfccMatrix {
    pub fn n_mfcc(&self) -> usize {
        self.coefficients.n_rows()
    }

    pub fn n_frames(&self) -> usize {
        self.coefficients.n_frames()
    }

    /// Same timeline, different coefficient values.
    pub fn with_coefficients(&self, coefficients: FrameMatrix) -> MfccMatrix {
        MfccMatrix {
            coefficients,
            frame_times: self.frame_times.clone(),
            duration: self.duration,
        }
    }
}

/// Power spectrum, mel bands, log, DCT-II.
pub struct MfccExtractor {
    stft: Stft,
    filterbank: MelFilterbank,
    dct: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl MfccExtractor {
    pub fn new(cfg: &PipelineConfig) -> Result<Self> {
        if cfg.n_mfcc == 0 || cfg.n_mfcc > cfg.n_mels {
            return Err(Error::InvalidArgument(format!(
                "n_mfcc={} must be in 1..={}",
                cfg.n_mfcc, cfg.n_mels
            )));
        }
        Ok(Self {
            stft: Stft::from_config(cfg)?,
            filterbank: MelFilterbank::new(cfg.n_mels, cfg.n_fft, cfg.sample_rate),
            dct: dct2_basis(cfg.n_mels, cfg.n_mfcc),
            sample_rate: cfg.sample_rate,
        })
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn stft(&self) -> &Stft {
        &self.stft
    }

    pub fn compute(&self, buffer: &AudioBuffer) -> Result<MfccMatrix> {
        if buffer.sample_rate != self.sample_rate {
            return Err(Error::InvalidArgument(format!(
                "buffer at {} Hz, extractor configured for {} Hz",
                buffer.sample_rate, self.sample_rate
            )));
        }
        let spec = self.stft.forward(buffer)?;
        Ok(self.from_spectrogram(&spec, buffer.duration()))
    }

    pub fn from_spectrogram(&self, spec: &Spectrogram, duration: f64) -> MfccMatrix {
        let n_mfcc = self.dct.len();
        let mut coefficients = FrameMatrix::zeros(n_mfcc, spec.n_frames());
        let mut power = vec![0.0; spec.n_bins()];
        for t in 0..spec.n_frames() {
            for (p, c) in power.iter_mut().zip(spec.frame(t)) {
                *p = c.norm_sqr();
            }
            let log_mel: Vec<f64> = self
                .filterbank
                .apply(&power)
                .into_iter()
                .map(|e| e.max(LOG_FLOOR).ln())
                .collect();
            let out = coefficients.frame_mut(t);
            for (o, basis) in out.iter_mut().zip(&self.dct) {
                *o = basis.iter().zip(&log_mel).map(|(b, v)| b * v).sum();
            }
        }
        let frame_times = (0..spec.n_frames())
            .map(|t| (t * spec.hop) as f64 / spec.sample_rate as f64)
            .collect();
        MfccMatrix {
            coefficients,
            frame_times,
            duration,
        }
    }
}

/// Centered first difference with edge replication.
fn centered_difference(m: &FrameMatrix) -> FrameMatrix {
    let (rows, n) = m.shape();
    let mut out = FrameMatrix::zeros(rows, n);
    for t in 0..n {
        let prev = t.saturating_sub(1);
        let next = (t + 1).min(n - 1);
        for r in 0..rows {
            out.set(r, t, (m.get(r, next) - m.get(r, prev)) / 2.0);
        }
    }
    out
}

/// First and second temporal derivatives of the coefficient tracks.
pub fn deltas(m: &MfccMatrix) -> Result<(MfccMatrix, MfccMatrix)> {
    if m.n_frames() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: m.n_frames(),
        });
    }
    let d1 = centered_difference(&m.coefficients);
    let d2 = centered_difference(&d1);
    Ok((m.with_coefficients(d1), m.with_coefficients(d2)))
}
