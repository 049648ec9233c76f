//! Contiguous candidate segments from background MFCCs.
//!
//! The number of candidates follows the recording length: twenty per
//! minute, at least two.

use audiosum::prelude::*;
use audiosum::synth;

fn main() -> audiosum::Result<()> {
    let cfg = PipelineConfig::default();
    for secs in [3.0, 60.0, 300.0] {
        println!("target_k({secs} s) = {}", target_k(secs)?);
    }

    let talk = synth::talk(60.0, 11, cfg.sample_rate);
    let background = split_channels(&talk.audio, &cfg)?.background;
    let mfcc = MfccExtractor::new(&cfg)?.compute(&background)?;
    let k = target_k(talk.audio.duration())?.min(mfcc.n_frames());
    let plan = cluster_segments(&mfcc, k)?;
    println!("{} frames clustered into {} segments (mean {:.2} s):", mfcc.n_frames(), plan.k, plan.mean_segment_length());
    for s in &plan.segments {
        println!("  #{:<2} {:7.3} .. {:7.3}  ({:.3} s)", s.index, s.start_time, s.end_time, s.duration());
    }
    Ok(())
}
