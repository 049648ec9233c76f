//! Fitting the informativeness model directly from in-memory data.
//!
//! Builds (features, divergence) pairs from synthetic talks, fits the
//! regression, saves and reloads it, and checks the round trip.

use audiosum::prelude::*;
use audiosum::synth;
use audiosum::textinfo::build_training_pairs;

fn main() -> audiosum::Result<()> {
    let cfg = PipelineConfig::default();
    let extractor = MfccExtractor::new(&cfg)?;

    let (mut rows, mut targets) = (Vec::new(), Vec::new());
    for seed in 0..4 {
        let talk = synth::talk(45.0, 100 + seed, cfg.sample_rate);
        let pairs = build_training_pairs(&extractor, &talk.audio, &talk.transcript, cfg.segment_length_train, JsdParams::default())?;
        println!("talk {seed}: {} windows, {} without speech", pairs.pairs.len(), pairs.skipped_windows);
        for p in pairs.pairs {
            rows.push(p.features);
            targets.push(p.divergence);
        }
    }

    let model = RegressionModel::fit(&rows, &targets, ConfigEcho::from(&cfg))?;
    println!(
        "fitted {} rows x {} features: rmse {:.3e}, ridge {:.3e}",
        model.train_rows,
        model.n_features(),
        model.train_rmse,
        model.ridge_lambda
    );

    let path = std::env::temp_dir().join("audiosum-example-model.txt");
    model.save(&path)?;
    let back = RegressionModel::load(&path)?;
    let same = rows.iter().all(|r| model.predict(r).unwrap() == back.predict(r).unwrap());
    println!("reloaded from {}: predictions identical = {same}", path.display());
    Ok(())
}
