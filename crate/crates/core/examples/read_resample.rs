//! Reading arbitrary WAV files into the canonical mono buffer.
//!
//! A stereo 44.1 kHz file is written with `hound`, read back as mono at
//! 22050 Hz, and resampled once more to show the duration bookkeeping.

use audiosum::audio_io::{read_wav, read_wav_native, resample, CANONICAL_RATE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::temp_dir().join("audiosum-example-stereo.wav");
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: 44100,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&path, spec)?;
    for i in 0..44100 {
        let t = i as f64 / 44100.0;
        let left = (2.0 * std::f64::consts::PI * 440.0 * t).sin() * 0.5;
        w.write_sample((left * 32767.0) as i16)?;
        w.write_sample(0i16)?;
    }
    w.finalize()?;

    let native = read_wav_native(&path)?;
    println!("native: {} samples at {} Hz ({:.3} s)", native.len(), native.sample_rate, native.duration());

    let mono = read_wav(&path)?;
    println!("canonical: {} samples at {} Hz ({:.3} s)", mono.len(), CANONICAL_RATE, mono.duration());
    let peak = mono.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    println!("peak after mixdown: {peak:.3} (left channel peak 0.5, right silent)");

    let phone = resample(&mono, 8000)?;
    println!("8 kHz copy: {} samples ({:.4} s)", phone.len(), phone.duration());
    Ok(())
}
