//! MFCCs, their derivatives, and the 277-value segment descriptor.

use audiosum::features::{features_from_mfcc, slot_of};
use audiosum::prelude::*;
use audiosum::spectral::deltas;
use audiosum::synth;

fn main() -> audiosum::Result<()> {
    let cfg = PipelineConfig::default();
    let talk = synth::talk(20.0, 3, cfg.sample_rate);
    let extractor = MfccExtractor::new(&cfg)?;

    let mfcc = extractor.compute(&talk.audio)?;
    let (d1, d2) = deltas(&mfcc)?;
    println!(
        "MFCC matrix: {} coefficients x {} frames (first derivative {:?}, second {:?})",
        mfcc.n_mfcc(),
        mfcc.n_frames(),
        d1.coefficients.shape(),
        d2.coefficients.shape()
    );

    let whole = features_from_mfcc(&mfcc, 0.0)?;
    println!("descriptor of the whole recording has {} values", whole.len());

    let seg = Segment::new(0, 5.0, 15.0)?;
    let fv = segment_features(&extractor, &talk.audio, &seg)?;
    for i in [0, 3, 4, 6, 11 + 3, 24 * 11 + 10, 275, 276] {
        println!("  [{i:3}] {:<16} {:>12.4}", slot_of(i, cfg.n_mfcc).unwrap().to_string(), fv.values[i]);
    }
    Ok(())
}
