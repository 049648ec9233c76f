//! Train on a small synthetic corpus, then summarize a fresh recording.
//!
//! Writes the model, the summary WAV, its manifest and a score plot into a
//! scratch directory and prints the manifest.

use std::fs;

use audiosum::cli::{cmd_summarize, cmd_train, SummarizeOutputs};
use audiosum::prelude::*;
use audiosum::synth;

fn main() -> audiosum::Result<()> {
    let cfg = PipelineConfig::default();
    let dir = std::env::temp_dir().join("audiosum-example-summarize");
    fs::create_dir_all(&dir).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut manifest = String::new();
    for seed in 0..3 {
        let talk = synth::talk(60.0, seed, cfg.sample_rate);
        let wav = format!("talk{seed}.wav");
        let txt = format!("talk{seed}.txt");
        write_wav(&talk.audio, dir.join(&wav))?;
        fs::write(dir.join(&txt), talk.transcript_text()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        manifest.push_str(&format!("{wav}\t{txt}\n"));
    }
    fs::write(dir.join("corpus.tsv"), manifest).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let model_path = dir.join("model.txt");
    let report = cmd_train(&dir.join("corpus.tsv"), &model_path, &cfg)?;
    println!("{report}\n");

    let input = dir.join("input.wav");
    write_wav(&synth::talk(60.0, 42, cfg.sample_rate).audio, &input)?;
    let outputs = SummarizeOutputs {
        audio: &dir.join("summary.wav"),
        manifest: &dir.join("summary.txt"),
        plot: Some(&dir.join("scores.svg")),
    };
    let summary = cmd_summarize(&model_path, &input, cfg.ratio, &outputs, &cfg)?;
    print!("{}", summary.to_manifest());
    println!("\noutputs in {}", dir.display());
    Ok(())
}
