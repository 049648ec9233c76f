//! WAV input/output and the canonical mono buffer.
//!
//! Everything downstream works on [`AudioBuffer`]: mono, `f64` samples in
//! `[-1, 1]`, at the canonical rate (22050 Hz unless configured otherwise).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

pub const CANONICAL_RATE: u32 = 22050;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audio samples"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(n: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; n],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sample index nearest to `t` seconds, clamped to `[0, len]`.
    pub fn sample_at(&self, t: f64) -> usize {
        let i = (t * self.sample_rate as f64).round();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.samples.len())
        }
    }

    /// Copy of the samples covering `[start, end)` seconds.
    pub fn slice_seconds(&self, start: f64, end: f64) -> AudioBuffer {
        let a = self.sample_at(start);
        let b = self.sample_at(end).max(a);
        AudioBuffer {
            samples: self.samples[a..b].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }
}

/// Reads a PCM or float WAV file and returns it mono at `CANONICAL_RATE`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    read_wav_at(path, CANONICAL_RATE)
}

/// Reads a WAV file, mixes it down to mono and resamples to `target_rate`.
pub fn read_wav_at(path: impl AsRef<Path>, target_rate: u32) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let raw = read_wav_native(path)?;
    resample(&raw, target_rate)
}

/// Reads a WAV file as mono at its native sample rate.
pub fn read_wav_native(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| Error::wav(path, e))?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.sample_rate == 0 {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels at {} Hz",
            spec.channels, spec.sample_rate
        )));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| (v as f64).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::wav(path, e))?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::wav(path, e))?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!("{fmt:?} at {bits} bits")));
        }
    };
    if interleaved.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let samples = mixdown(&interleaved, spec.channels as usize);
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Averages interleaved channels into a single channel.
pub fn mixdown(interleaved: &[f64], channels: usize) -> Vec<f64> {
    if channels <= 1 {
        return interleaved.to_vec();
    }
    interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect()
}

/// Linear-interpolation resampler.
///
/// Output length is `round(len * target / source)`; sample `i` is read at
/// source position `i * source / target`.
pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::InvalidArgument("target rate must be positive".into()));
    }
    if buffer.is_empty() {
        return Err(Error::EmptyAudio);
    }
    if target_rate == buffer.sample_rate {
        return Ok(buffer.clone());
    }
    let src = &buffer.samples;
    let ratio = buffer.sample_rate as f64 / target_rate as f64;
    let out_len = ((src.len() as f64 / ratio).round() as usize).max(1);
    let last = src.len() - 1;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let i0 = (pos.floor() as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = pos - i0 as f64;
            src[i0] + (src[i1] - src[i0]) * frac
        })
        .collect();
    Ok(AudioBuffer {
        samples,
        sample_rate: target_rate,
    })
}

/// Writes a 16-bit PCM mono WAV.
pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| Error::wav(path, e))?;
    for &s in &buffer.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(|e| Error::wav(path, e))?;
    }
    writer.finalize().map_err(|e| Error::wav(path, e))
}
