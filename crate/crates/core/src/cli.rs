//! The five commands behind the `audiosum` binary, callable as functions.
//!
//! Each command takes an already resolved [`PipelineConfig`]; see
//! [`resolve_config`] for the flag > file > default precedence.

use std::fmt;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use crate::audio_io::{read_wav_at, write_wav, AudioBuffer};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::features::segment_features_padded;
use crate::model::{ConfigEcho, RegressionModel};
use crate::segmentation::{cluster_segments, target_k_for_frames};
use crate::separation::{split_channels, Separated};
use crate::spectral::MfccExtractor;
use crate::summarizer::{assemble_summary, score_segment, select_segments, ScoredSegment, SummaryReport, SummarySpec};
use crate::textinfo::{build_training_pairs, jsd, JsdParams, TimedTranscript, TokenDistribution, TrainingPairs};

/// Config from `--config` if given, else from `AUDIOSUM_CONFIG`, else defaults.
pub fn resolve_config(flag: Option<&Path>) -> Result<PipelineConfig> {
    match flag {
        Some(p) => PipelineConfig::from_file(p),
        None => PipelineConfig::from_env(),
    }
}

/// One `audio<TAB>transcript` line of a training manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub line: usize,
    pub audio: PathBuf,
    pub transcript: PathBuf,
}

/// A manifest line that produced no training rows, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFailure {
    pub line: usize,
    pub message: String,
}

/// Parses a training manifest. Relative paths are resolved against
/// `base_dir`; blank lines and `#` comments are ignored.
pub fn parse_manifest(text: &str, base_dir: &Path) -> (Vec<ManifestEntry>, Vec<LineFailure>) {
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        match fields.as_slice() {
            [audio, transcript] if !audio.is_empty() && !transcript.is_empty() => entries.push(ManifestEntry {
                line: i + 1,
                audio: base_dir.join(audio),
                transcript: base_dir.join(transcript),
            }),
            _ => failures.push(LineFailure {
                line: i + 1,
                message: "expected `audio<TAB>transcript`".into(),
            }),
        }
    }
    (entries, failures)
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub rows: usize,
    pub files_used: usize,
    pub skipped_windows: usize,
    pub failures: Vec<LineFailure>,
    pub train_rmse: f64,
    pub ridge_lambda: f64,
}

impl fmt::Display for TrainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows: {}", self.rows)?;
        writeln!(f, "files_used: {}", self.files_used)?;
        writeln!(f, "skipped_windows: {}", self.skipped_windows)?;
        writeln!(f, "failed_lines: {}", self.failures.len())?;
        for fl in &self.failures {
            writeln!(f, "  line {}: {}", fl.line, fl.message)?;
        }
        writeln!(f, "ridge_lambda: {:e}", self.ridge_lambda)?;
        write!(f, "train_rmse: {:e}", self.train_rmse)
    }
}

fn entry_pairs(entry: &ManifestEntry, extractor: &MfccExtractor, cfg: &PipelineConfig) -> Result<TrainingPairs> {
    let audio = read_wav_at(&entry.audio, cfg.sample_rate)?;
    let transcript = TimedTranscript::from_file(&entry.transcript)?;
    build_training_pairs(extractor, &audio, &transcript, cfg.segment_length_train, JsdParams::default())
}

/// Fits a model on every usable manifest entry. Unusable entries are
/// reported and skipped; having none at all is an error.
pub fn train_from_manifest(manifest: &Path, cfg: &PipelineConfig) -> Result<(RegressionModel, TrainReport)> {
    let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let (entries, mut failures) = parse_manifest(&text, base);
    let extractor = MfccExtractor::new(cfg)?;

    let results: Vec<_> = entries
        .par_iter()
        .map(|e| (e.line, entry_pairs(e, &extractor, cfg)))
        .collect();

    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut skipped_windows = 0;
    let mut files_used = 0;
    for (line, res) in results {
        match res {
            Ok(tp) if !tp.pairs.is_empty() => {
                files_used += 1;
                skipped_windows += tp.skipped_windows;
                for p in tp.pairs {
                    features.push(p.features);
                    targets.push(p.divergence);
                }
            }
            Ok(tp) => {
                skipped_windows += tp.skipped_windows;
                failures.push(LineFailure {
                    line,
                    message: "no window contains speech".into(),
                });
            }
            Err(e) => failures.push(LineFailure {
                line,
                message: e.to_string(),
            }),
        }
    }
    failures.sort_by_key(|f| f.line);
    for f in &failures {
        warn!("manifest line {}: {}", f.line, f.message);
    }
    if features.is_empty() {
        return Err(Error::NoTrainingData);
    }
    info!("fitting on {} rows from {} files", features.len(), files_used);
    let model = RegressionModel::fit(&features, &targets, ConfigEcho::from(cfg))?;
    let report = TrainReport {
        rows: features.len(),
        files_used,
        skipped_windows,
        failures,
        train_rmse: model.train_rmse,
        ridge_lambda: model.ridge_lambda,
    };
    Ok((model, report))
}

pub fn cmd_train(manifest: &Path, output: &Path, cfg: &PipelineConfig) -> Result<TrainReport> {
    let (model, report) = train_from_manifest(manifest, cfg)?;
    model.save(output)?;
    Ok(report)
}

/// Candidate segments of `audio` with their predicted divergence and score.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub k: usize,
    pub segments: Vec<ScoredSegment>,
}

/// Separation, background clustering, then per-segment prediction and
/// scoring on the original signal.
pub fn score_candidates(model: &RegressionModel, audio: &AudioBuffer, cfg: &PipelineConfig) -> Result<Candidates> {
    model.check_config(cfg)?;
    if audio.sample_rate != cfg.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "audio is at {} Hz, pipeline expects {} Hz",
            audio.sample_rate, cfg.sample_rate
        )));
    }
    if audio.len() < cfg.n_fft {
        return Err(Error::TooShort {
            needed: cfg.n_fft,
            got: audio.len(),
        });
    }
    let duration = audio.duration();
    let extractor = MfccExtractor::new(cfg)?;
    let Separated { background, .. } = split_channels(audio, cfg)?;
    let mfcc = extractor.compute(&background)?;
    let k = target_k_for_frames(duration, mfcc.n_frames())?;
    let plan = cluster_segments(&mfcc, k)?;
    info!("{} candidate segments, mean length {:.2} s", k, plan.mean_segment_length());

    let segments = plan
        .segments
        .par_iter()
        .map(|seg| {
            let fv = segment_features_padded(&extractor, audio, seg)?;
            let lr = model.predict(&fv)?;
            Ok(ScoredSegment {
                segment: *seg,
                n_frames: fv.n_frames() as usize,
                lr,
                score: score_segment(seg, lr, duration)?,
                selected: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Candidates { k, segments })
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub report: SummaryReport,
    pub audio: AudioBuffer,
}

/// Full summarization of an in-memory signal.
pub fn summarize_buffer(
    model: &RegressionModel,
    audio: &AudioBuffer,
    ratio: f64,
    cfg: &PipelineConfig,
    source_label: &str,
    model_label: &str,
) -> Result<Summary> {
    let spec = SummarySpec::new(ratio, audio.duration())?;
    let Candidates { k, mut segments } = score_candidates(model, audio, cfg)?;
    let chosen = select_segments(&mut segments, &spec);
    if chosen.is_empty() {
        warn!("budget of {:.2} s is below every candidate length", spec.theta);
    }
    let summary = assemble_summary(audio, &chosen)?;
    let effective = PipelineConfig { ratio, ..cfg.clone() };
    Ok(Summary {
        report: SummaryReport {
            source: source_label.to_string(),
            model: model_label.to_string(),
            duration: audio.duration(),
            k,
            spec,
            schema_version: model.schema_version,
            config: effective.to_string(),
            segments,
        },
        audio: summary,
    })
}

/// Output paths of `summarize`; the plot is optional.
#[derive(Debug, Clone)]
pub struct SummarizeOutputs<'a> {
    pub audio: &'a Path,
    pub manifest: &'a Path,
    pub plot: Option<&'a Path>,
}

pub fn cmd_summarize(
    model_path: &Path,
    input: &Path,
    ratio: f64,
    outputs: &SummarizeOutputs<'_>,
    cfg: &PipelineConfig,
) -> Result<SummaryReport> {
    let model = RegressionModel::load_for(model_path, cfg)?;
    let audio = read_wav_at(input, cfg.sample_rate)?;
    let Summary { report, audio: summary } = summarize_buffer(
        &model,
        &audio,
        ratio,
        cfg,
        &input.display().to_string(),
        &model_path.display().to_string(),
    )?;
    write_wav(&summary, outputs.audio)?;
    report.write_manifest(outputs.manifest)?;
    if let Some(p) = outputs.plot {
        report.write_plot(p)?;
    }
    Ok(report)
}

/// Per-candidate TSV: `start`, `end`, `lr`, `score`.
pub fn score_table(candidates: &Candidates) -> String {
    let mut out = String::from("start\tend\tlr\tscore\n");
    for s in &candidates.segments {
        out.push_str(&format!(
            "{:.6}\t{:.6}\t{:e}\t{:e}\n",
            s.segment.start_time, s.segment.end_time, s.lr, s.score
        ));
    }
    out
}

pub fn cmd_score(model_path: &Path, input: &Path, cfg: &PipelineConfig) -> Result<String> {
    let model = RegressionModel::load_for(model_path, cfg)?;
    let audio = read_wav_at(input, cfg.sample_rate)?;
    Ok(score_table(&score_candidates(&model, &audio, cfg)?))
}

pub fn cmd_separate(input: &Path, background: &Path, foreground: &Path, cfg: &PipelineConfig) -> Result<Separated> {
    let audio = read_wav_at(input, cfg.sample_rate)?;
    let sep = split_channels(&audio, cfg)?;
    write_wav(&sep.background, background)?;
    write_wav(&sep.foreground, foreground)?;
    Ok(sep)
}

/// Divergence between the word distributions of two plain-text files.
pub fn cmd_jsd(source: &Path, segment: &Path) -> Result<f64> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    jsd(
        &TokenDistribution::from_text(&read(source)?),
        &TokenDistribution::from_text(&read(segment)?),
        JsdParams::default(),
    )
}
