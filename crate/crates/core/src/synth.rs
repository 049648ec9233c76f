//! Deterministic synthetic recordings with aligned transcripts.
//!
//! A recording is a short background loop tiled over its whole length plus
//! a foreground of "words": harmonic bursts whose pitch depends on the word.
//! The talk moves through topics, each drawing from its own slice of the
//! vocabulary, so different stretches have different word distributions and
//! audibly different content. Pauses leave stretches with no words at all.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::audio_io::AudioBuffer;
use crate::textinfo::TimedTranscript;

pub const VOCABULARY: [&str; 32] = [
    "news", "market", "weather", "rain", "storm", "coast", "match", "goal", "team", "coach", "vote", "council",
    "budget", "school", "music", "festival", "city", "river", "bridge", "traffic", "health", "doctor", "virus",
    "science", "space", "rocket", "energy", "price", "bank", "trade", "farm", "harvest",
];

const TOPIC_SIZE: usize = 8;
const LOOP_SECONDS: f64 = 0.75;

pub fn sine(freq: f64, amplitude: f64, seconds: f64, sample_rate: u32) -> AudioBuffer {
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    AudioBuffer {
        samples: (0..n).map(|i| amplitude * (2.0 * PI * freq * i as f64 / sr).sin()).collect(),
        sample_rate,
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTalk {
    pub audio: AudioBuffer,
    pub transcript: TimedTranscript,
}

impl SyntheticTalk {
    /// Transcript in the `start<TAB>token` line format.
    pub fn transcript_text(&self) -> String {
        let mut out = String::new();
        for (t, w) in &self.transcript.words {
            let _ = writeln!(out, "{t:.3}\t{w}");
        }
        out
    }
}

fn pitch(word: usize) -> f64 {
    140.0 + 23.0 * word as f64
}

fn background_loop(rng: &mut StdRng, sample_rate: u32) -> Vec<f64> {
    let sr = sample_rate as f64;
    let n = (LOOP_SECONDS * sr).round() as usize;
    let hits = [0.0, 0.25, 0.5, 0.625];
    let mut out: Vec<f64> = (0..n).map(|i| 0.04 * (2.0 * PI * 55.0 * i as f64 / sr).sin()).collect();
    for &h in &hits {
        let start = (h * sr) as usize;
        let len = (0.06 * sr) as usize;
        for j in 0..len.min(n - start) {
            let env = (-(j as f64) / (0.012 * sr)).exp();
            out[start + j] += 0.08 * env * rng.gen_range(-1.0..1.0);
        }
    }
    out
}

/// A `seconds` long talk; equal seeds give identical output.
pub fn talk(seconds: f64, seed: u64, sample_rate: u32) -> SyntheticTalk {
    let mut rng = StdRng::seed_from_u64(seed);
    let sr = sample_rate as f64;
    let n = (seconds * sr).round() as usize;
    let pattern = background_loop(&mut rng, sample_rate);
    let mut samples: Vec<f64> = (0..n).map(|i| pattern[i % pattern.len()]).collect();

    let n_topics = VOCABULARY.len() / TOPIC_SIZE;
    let mut words = Vec::new();
    let mut t = rng.gen_range(0.1..0.6);
    let mut topic = rng.gen_range(0..n_topics);
    let mut topic_end = t + rng.gen_range(8.0..20.0);
    while t < seconds - 0.5 {
        if t >= topic_end {
            topic = (topic + rng.gen_range(1..n_topics)) % n_topics;
            topic_end = t + rng.gen_range(8.0..20.0);
            t += rng.gen_range(0.8..2.5);
            continue;
        }
        let word = topic * TOPIC_SIZE + rng.gen_range(0..TOPIC_SIZE);
        let len = rng.gen_range(0.2..0.45_f64).min(seconds - t);
        let f0 = pitch(word);
        let a = (t * sr) as usize;
        let m = ((len * sr) as usize).min(n - a);
        for j in 0..m {
            let x = j as f64 / sr;
            let env = (PI * j as f64 / m as f64).sin();
            let voiced: f64 = (1..=4).map(|h| (2.0 * PI * f0 * h as f64 * x).sin() / h as f64).sum();
            samples[a + j] += 0.3 * env * voiced;
        }
        words.push((((t * 1000.0).round()) / 1000.0, VOCABULARY[word].to_string()));
        t += len + rng.gen_range(0.05..0.3);
    }
    let peak = samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    if peak > 0.99 {
        samples.iter_mut().for_each(|s| *s *= 0.99 / peak);
    }
    SyntheticTalk {
        audio: AudioBuffer { samples, sample_rate },
        transcript: TimedTranscript { words },
    }
}
