//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances and time limits are fixed
//! below and are not configurable.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use audiosum::cli::{cmd_summarize, cmd_train, SummarizeOutputs};
use audiosum::features::{features_from_mfcc, features_from_tracks, segment_features};
use audiosum::model::{ConfigEcho, RegressionModel};
use audiosum::prelude::*;
use audiosum::segmentation::cluster_bounds;
use audiosum::separation::{repeating_model, similar_frames, soft_masks, SimilarityParams};
use audiosum::spectral::{deltas, FrameMatrix, MfccMatrix};
use audiosum::summarizer::{score_terms, select_indices};
use audiosum::synth;
use audiosum::textinfo::smoothed_prob;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const JSD_RUNTIME: Duration = Duration::from_secs(5);
const REGRESSION_RUNTIME: Duration = Duration::from_secs(10);
const SEPARATION_RUNTIME: Duration = Duration::from_secs(30);
const END_TO_END_RUNTIME: Duration = Duration::from_secs(120);

const GOLDEN_RELATIVE: f64 = 1e-12;
const REGRESSION_MAX_ERROR: f64 = 1e-6;
const MASK_SUM_TOLERANCE: f64 = 1e-12;
const ADDITIVITY_RELATIVE_RMS: f64 = 1e-6;
const TONE_BACKGROUND_SHARE: f64 = 0.99;

// frozen before implementation from a 40-digit evaluation of the formulas
const GOLDEN_P_A: f64 = 0.666_500_083_291_687_489_588_5;
const GOLDEN_P_UNSEEN: f64 = 0.000_166_583_374_979_177_078_1;
const GOLDEN_JSD: f64 = 0.020_702_260_172_181_090_53;
const GOLDEN_SCORE_LR0: f64 = 0.067_957_045_711_476_130_88;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn dist(pairs: &[(&str, usize)]) -> TokenDistribution {
    TokenDistribution::from_tokens(pairs.iter().flat_map(|(w, n)| std::iter::repeat_n(w.to_string(), *n)))
}

fn random_dist(rng: &mut StdRng) -> TokenDistribution {
    let vocab = rng.gen_range(1..40);
    let n = rng.gen_range(1..300);
    TokenDistribution::from_tokens((0..n).map(|_| format!("w{}", rng.gen_range(0..vocab))))
}

fn jsd_properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let params = JsdParams::default();
    let start = Instant::now();
    let mut worst_asym = 0.0_f64;
    for _ in 0..500 {
        let (p, q) = (random_dist(&mut rng), random_dist(&mut rng));
        let pp = jsd(&p, &p, params).map_err(|e| e.to_string())?;
        ensure!(pp == 0.0, "jsd(P, P) = {pp:e}");
        let (pq, qp) = (jsd(&p, &q, params).unwrap(), jsd(&q, &p, params).unwrap());
        worst_asym = worst_asym.max((pq - qp).abs());
        ensure!(pq >= 0.0 && qp >= 0.0, "negative divergence {pq} / {qp}");
    }
    let elapsed = start.elapsed();
    ensure!(worst_asym == 0.0, "max asymmetry {worst_asym:e}");
    ensure!(elapsed < JSD_RUNTIME, "took {elapsed:?}");
    Ok(format!("500 pairs, max asymmetry 0, {elapsed:.2?}"))
}

fn jsd_goldens() -> Outcome {
    let params = JsdParams::default();
    let p = dist(&[("a", 2), ("b", 1)]);
    let q = dist(&[("a", 1), ("b", 1)]);
    let vocab = 2;
    let pa = smoothed_prob(&p, "a", params, vocab);
    let unseen = smoothed_prob(&p, "zzz", params, vocab);
    let d = jsd(&p, &q, params).map_err(|e| e.to_string())?;
    let errs = [
        relative(pa, GOLDEN_P_A),
        relative(unseen, GOLDEN_P_UNSEEN),
        relative(d, GOLDEN_JSD),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    ensure!(worst <= GOLDEN_RELATIVE, "relative errors {errs:?}");
    Ok(format!("worst relative error {worst:.1e}"))
}

fn segment_count() -> Outcome {
    let (a, b) = (target_k(300.0).unwrap(), target_k(60.0).unwrap());
    ensure!(a == 100 && b == 20, "target_k(300) = {a}, target_k(60) = {b}");
    Ok("target_k(300) = 100, target_k(60) = 20".into())
}

fn score_points() -> Outcome {
    let s1 = score_terms(5.0, 5.0, 100.0, 0.0, 1.0);
    let s0 = score_terms(5.0, 5.0, 100.0, 0.0, 0.0);
    let via_segment = score_segment(&Segment::new(0, 0.0, 5.0).unwrap(), 1.0, 100.0).unwrap();
    ensure!(s1 == 0.025 && via_segment == 0.025, "S = {s1:e} / {via_segment:e}");
    ensure!(relative(s0, GOLDEN_SCORE_LR0) <= GOLDEN_RELATIVE, "lr = 0 gives {s0:e}");
    ensure!(relative(s0, 0.025 * std::f64::consts::E) <= GOLDEN_RELATIVE, "lr = 0 gives {s0:e}");
    Ok(format!("S = 0.025 exactly, lr = 0 variant {s0:.15}"))
}

fn shuffle_frames(m: &MfccMatrix, order: &[usize]) -> MfccMatrix {
    let frames: Vec<Vec<f64>> = order.iter().map(|&t| m.coefficients.frame(t).to_vec()).collect();
    m.with_coefficients(FrameMatrix::from_frames(&frames).unwrap())
}

fn feature_vector() -> Outcome {
    let cfg = PipelineConfig::default();
    let extractor = MfccExtractor::new(&cfg).unwrap();
    let talk = synth::talk(12.0, 21, cfg.sample_rate);
    let fv = segment_features(&extractor, &talk.audio, &Segment::new(0, 1.0, 11.0).unwrap()).map_err(|e| e.to_string())?;
    ensure!(fv.len() == 277, "descriptor has {} entries", fv.len());

    let silence = AudioBuffer::silence(10 * cfg.sample_rate as usize, cfg.sample_rate);
    let sv = segment_features(&extractor, &silence, &Segment::new(0, 0.0, 10.0).unwrap()).unwrap();
    for c in 0..cfg.n_mfcc {
        let s = &sv.values[c * 11..c * 11 + 11];
        ensure!(s[4..].iter().all(|&v| v == 0.0), "silence coefficient {c}: {s:?}");
    }

    // every statistic depends on the multiset of (value, delta, delta-delta)
    // frame triples, so a joint reordering must leave 0..275 unchanged
    let m = extractor.compute(&talk.audio.slice_seconds(1.0, 11.0)).unwrap();
    let (d1, d2) = deltas(&m).unwrap();
    let base = features_from_mfcc(&m, 1.0).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let mut order: Vec<usize> = (0..m.n_frames()).collect();
        order.shuffle(&mut rng);
        let p = features_from_tracks(
            &shuffle_frames(&m, &order),
            &shuffle_frames(&d1, &order),
            &shuffle_frames(&d2, &order),
            1.0,
        )
        .unwrap();
        for i in 0..275 {
            let scale = base.values[i].abs().max(1.0);
            worst = worst.max((p.values[i] - base.values[i]).abs() / scale);
        }
        ensure!(p.values[275..] == base.values[275..], "frame count or start time changed");
    }
    ensure!(worst <= 1e-9, "permutation changed a statistic by {worst:e}");
    Ok(format!("277 entries, silent statistics zero, permutation drift {worst:.1e}"))
}

fn regression() -> Outcome {
    let mut rng = StdRng::seed_from_u64(17);
    let d = 277;
    let truth: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let bias = 0.37;
    let f = |x: &[f64]| x.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + bias;
    let row = |rng: &mut StdRng| FeatureVector {
        values: (0..d).map(|j| rng.gen_range(-1.0..1.0) * (1.0 + j as f64 * 0.1)).collect(),
    };
    let rows: Vec<FeatureVector> = (0..2000).map(|_| row(&mut rng)).collect();
    let y: Vec<f64> = rows.iter().map(|r| f(&r.values)).collect();
    let echo = ConfigEcho::from(&PipelineConfig::default());

    let start = Instant::now();
    let model = RegressionModel::fit(&rows, &y, echo.clone()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut worst = 0.0_f64;
    for _ in 0..500 {
        let x = row(&mut rng);
        worst = worst.max((model.predict(&x).unwrap() - f(&x.values)).abs());
    }
    ensure!(worst <= REGRESSION_MAX_ERROR, "max held-out error {worst:e}");
    ensure!(elapsed < REGRESSION_RUNTIME, "fit took {elapsed:?}");

    let constant = vec![0.42; rows.len()];
    let cm = RegressionModel::fit(&rows, &constant, echo).unwrap();
    for _ in 0..50 {
        let p = cm.predict(&row(&mut rng)).unwrap();
        ensure!((p - 0.42).abs() <= REGRESSION_MAX_ERROR, "constant fit predicts {p}");
    }
    Ok(format!("2000 x 277, max held-out error {worst:.1e}, fit {elapsed:.2?}"))
}

fn separation() -> Outcome {
    let cfg = PipelineConfig::default();
    let talk = synth::talk(60.0, 33, cfg.sample_rate);
    let start = Instant::now();
    let sep = split_channels(&talk.audio, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(elapsed < SEPARATION_RUNTIME, "60 s separation took {elapsed:?}");

    let (bg, fg) = (&sep.masks.background, &sep.masks.foreground);
    let worst_sum = bg
        .as_slice()
        .iter()
        .zip(fg.as_slice())
        .map(|(b, f)| (b + f - 1.0).abs())
        .fold(0.0, f64::max);
    ensure!(worst_sum <= MASK_SUM_TOLERANCE, "mask sum off by {worst_sum:e}");

    let residual: f64 = talk
        .audio
        .samples
        .iter()
        .zip(&sep.background.samples)
        .zip(&sep.foreground.samples)
        .map(|((x, b), f)| (x - b - f).powi(2))
        .sum();
    let rel_rms = (residual / talk.audio.energy()).sqrt();
    ensure!(rel_rms <= ADDITIVITY_RELATIVE_RMS, "reconstruction relative RMS {rel_rms:e}");

    let tone = split_channels(&synth::sine(440.0, 0.5, 10.0, cfg.sample_rate), &cfg).unwrap();
    let share = tone.background.energy() / (tone.background.energy() + tone.foreground.energy());
    ensure!(share >= TONE_BACKGROUND_SHARE, "tone background share {share}");

    let spec = Stft::from_config(&cfg).unwrap().forward(&talk.audio).unwrap();
    let params = SimilarityParams::from_config(&cfg);
    let min_gap = (cfg.separation_gap * cfg.sample_rate as f64 / cfg.hop as f64).ceil() as usize;
    for t in (0..spec.n_frames()).step_by(37) {
        let sim = similar_frames(&spec, t, params).unwrap();
        for (i, &a) in sim.iter().enumerate() {
            for &b in &sim[i + 1..] {
                ensure!(a.abs_diff(b) >= min_gap, "frames {a} and {b} of query {t} are closer than {min_gap}");
            }
        }
    }
    let model = repeating_model(&spec, params);
    let masks = soft_masks(&spec, &model).unwrap();
    ensure!(masks.background == *bg, "mask recomputation differs");
    Ok(format!(
        "mask sum error {worst_sum:.1e}, reconstruction {rel_rms:.1e}, tone share {:.4}, 60 s in {elapsed:.2?}",
        share
    ))
}

/// Lowest-SSE placement of `k - 1` boundaries, by enumeration.
fn brute_force_bounds(frames: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = frames.len();
    let d = frames[0].len();
    let mut s1 = vec![vec![0.0; d]; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for t in 0..n {
        for j in 0..d {
            s1[t + 1][j] = s1[t][j] + frames[t][j];
        }
        s2[t + 1] = s2[t] + frames[t].iter().map(|v| v * v).sum::<f64>();
    }
    let sse = |a: usize, b: usize| {
        let len = (b - a) as f64;
        let lin: f64 = (0..d).map(|j| (s1[b][j] - s1[a][j]).powi(2)).sum();
        s2[b] - s2[a] - lin / len
    };
    let mut best = (f64::INFINITY, Vec::new());
    let mut cuts = vec![0usize; k - 1];
    fn walk(pos: usize, from: usize, n: usize, cuts: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if pos == cuts.len() {
            visit(cuts);
            return;
        }
        for c in from..n - (cuts.len() - pos - 1) {
            cuts[pos] = c;
            walk(pos + 1, c + 1, n, cuts, visit);
        }
    }
    walk(0, 1, n, &mut cuts, &mut |c: &[usize]| {
        let mut bounds = vec![0];
        bounds.extend_from_slice(c);
        bounds.push(n);
        let cost: f64 = bounds.windows(2).map(|w| sse(w[0], w[1])).sum();
        if cost < best.0 - 1e-9 {
            best = (cost, bounds);
        }
    });
    best.1
}

fn segmentation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let dim = 5;
    let trials = 60;
    for trial in 0..trials {
        let plateaus = rng.gen_range(2..=4);
        let n = rng.gen_range(20..=200usize);
        let mut edges: Vec<usize> = Vec::new();
        while edges.len() < plateaus - 1 {
            let e = rng.gen_range(1..n);
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
        edges.sort_unstable();
        let mut bounds = vec![0];
        bounds.extend(&edges);
        bounds.push(n);
        let mut frames = Vec::with_capacity(n);
        for w in bounds.windows(2) {
            let level: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
            frames.extend(std::iter::repeat_n(level, w[1] - w[0]));
        }
        let refs: Vec<&[f64]> = frames.iter().map(Vec::as_slice).collect();
        let got = cluster_bounds(&refs, plateaus);
        let oracle = brute_force_bounds(&frames, plateaus);
        ensure!(oracle == bounds, "trial {trial}: oracle {oracle:?} vs plateaus {bounds:?}");
        ensure!(got == bounds, "trial {trial}: clustering {got:?} vs plateaus {bounds:?}");

        let hop = 512.0 / 22050.0;
        let m = MfccMatrix {
            coefficients: FrameMatrix::from_frames(&frames).unwrap(),
            frame_times: (0..n).map(|t| t as f64 * hop).collect(),
            duration: n as f64 * hop,
        };
        let k = rng.gen_range(2..=n.min(30));
        let plan = cluster_segments(&m, k).map_err(|e| e.to_string())?;
        ensure!(plan.segments.len() == k, "trial {trial}: {} segments for k = {k}", plan.segments.len());
        ensure!(plan.segments[0].start_time == 0.0, "partition does not start at 0");
        ensure!(plan.segments[k - 1].end_time == m.duration, "partition does not reach the end");
        ensure!(
            plan.segments.windows(2).all(|w| w[0].end_time == w[1].start_time && w[0].duration() > 0.0),
            "trial {trial}: partition is not contiguous"
        );
    }
    Ok(format!("{trials} piecewise-constant instances, all plateau edges recovered"))
}

/// Scans every subset; keeps the feasible one whose membership, read in
/// priority order, is lexicographically largest.
fn brute_force_selection(durations: &[f64], scores: &[f64], theta: f64) -> Vec<usize> {
    let n = durations.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut best: Option<Vec<bool>> = None;
    for mask in 0u32..(1 << n) {
        let used: f64 = order.iter().filter(|&&i| mask >> i & 1 == 1).map(|&i| durations[i]).sum();
        if used > theta {
            continue;
        }
        let key: Vec<bool> = order.iter().map(|&i| mask >> i & 1 == 1).collect();
        if best.as_ref().is_none_or(|b| key > *b) {
            best = Some(key);
        }
    }
    let mut out: Vec<usize> = order.iter().zip(best.unwrap()).filter(|(_, k)| *k).map(|(&i, _)| i).collect();
    out.sort_unstable();
    out
}

fn selection() -> Outcome {
    let mut rng = StdRng::seed_from_u64(23);
    for trial in 0..1000 {
        let n = rng.gen_range(1..=12);
        let durations: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=40) as f64 / 4.0).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 7.0).collect();
        let mut starts = vec![0.0; n];
        for i in 1..n {
            starts[i] = starts[i - 1] + durations[i - 1];
        }
        let theta = rng.gen_range(0.0..durations.iter().sum::<f64>() * 1.1);
        let got = select_indices(&durations, &scores, &starts, theta);
        let want = brute_force_selection(&durations, &scores, theta);
        ensure!(got == want, "trial {trial}: greedy {got:?} vs oracle {want:?}");
        let used: f64 = got.iter().map(|&i| durations[i]).sum();
        ensure!(used <= theta, "trial {trial}: {used} s selected for budget {theta}");
    }
    Ok("1000 random instances of up to 12 segments".into())
}

fn end_to_end() -> Outcome {
    let cfg = PipelineConfig::default();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let start = Instant::now();
    let mut manifest = String::new();
    for seed in 0..3 {
        let talk = synth::talk(60.0, 1000 + seed, cfg.sample_rate);
        write_wav(&talk.audio, root.join(format!("t{seed}.wav"))).unwrap();
        fs::write(root.join(format!("t{seed}.txt")), talk.transcript_text()).unwrap();
        manifest.push_str(&format!("t{seed}.wav\tt{seed}.txt\n"));
    }
    fs::write(root.join("corpus.tsv"), manifest).unwrap();
    let model = root.join("model.txt");
    let report = cmd_train(&root.join("corpus.tsv"), &model, &cfg).map_err(|e| e.to_string())?;

    let input = root.join("input.wav");
    write_wav(&synth::talk(60.0, 2024, cfg.sample_rate).audio, &input).unwrap();
    let mut manifests = Vec::new();
    let mut k = 0;
    let mut selected = 0.0;
    for run in 0..2 {
        let outputs = SummarizeOutputs {
            audio: &root.join(format!("summary{run}.wav")),
            manifest: &root.join(format!("summary{run}.txt")),
            plot: Some(&root.join(format!("scores{run}.svg"))),
        };
        let r = cmd_summarize(&model, &input, 0.35, &outputs, &cfg).map_err(|e| e.to_string())?;
        k = r.k;
        selected = read_wav(outputs.audio).unwrap().duration();
        ensure!(r.selected_duration() <= 21.0, "selected {} s", r.selected_duration());
        manifests.push(fs::read(outputs.manifest).unwrap());
    }
    let elapsed = start.elapsed();
    ensure!(k == 20, "k = {k}");
    ensure!(selected <= 21.0, "summary lasts {selected} s");
    ensure!(manifests[0] == manifests[1], "manifests differ between runs");
    ensure!(elapsed < END_TO_END_RUNTIME, "took {elapsed:?}");
    Ok(format!(
        "{} training rows, k = {k}, summary {selected:.2} s, identical manifests, {elapsed:.1?}",
        report.rows
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("JSD identity, symmetry and positivity", jsd_properties),
        ("JSD golden values", jsd_goldens),
        ("segment count arithmetic", segment_count),
        ("score closed-form points", score_points),
        ("feature vector layout and invariances", feature_vector),
        ("regression recovery", regression),
        ("separation masks, additivity, tone energy, gap", separation),
        ("segmentation against brute force", segmentation),
        ("selection against brute force", selection),
        ("end-to-end desk-scale run", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  [{:2}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  [{:2}] {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
