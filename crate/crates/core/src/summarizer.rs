//! Segment scoring, budgeted selection, summary assembly and reporting.
//!
//! A candidate starting at `t` with duration `dt` inside a source of
//! duration `P` and predicted divergence `lr` scores
//!
//! ```text
//! S = sigmoid(dt - 5) * (dt / P) * exp(-t / dt) * exp(1 - lr)
//! ```
//!
//! Candidates are admitted by descending score while they fit the budget,
//! then emitted in chronological order.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use crate::audio_io::AudioBuffer;
use crate::error::{Error, Result};
use crate::segmentation::Segment;

pub const MANIFEST_HEADER: &str = "audiosum-manifest v1";
pub const CROSSFADE_SECONDS: f64 = 0.01;
pub const EMPTY_SELECTION_WARNING: &str = "budget below minimum segment";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummarySpec {
    pub ratio: f64,
    /// Budget in seconds.
    pub theta: f64,
}

impl SummarySpec {
    pub fn new(ratio: f64, source_duration: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("ratio must lie in (0, 1), got {ratio}")));
        }
        if !(source_duration > 0.0 && source_duration.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "source duration must be positive, got {source_duration}"
            )));
        }
        Ok(Self {
            ratio,
            theta: ratio * source_duration,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSegment {
    pub segment: Segment,
    pub n_frames: usize,
    pub lr: f64,
    pub score: f64,
    pub selected: bool,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// The four-factor score with every length given explicitly.
pub fn score_terms(dt: f64, q_len: f64, p_len: f64, start: f64, lr: f64) -> f64 {
    sigmoid(dt - 5.0) * (q_len / p_len) * (-start / dt).exp() * (1.0 - lr).exp()
}

pub fn score_segment(seg: &Segment, lr: f64, source_duration: f64) -> Result<f64> {
    let dt = seg.duration();
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("segment {} has zero duration", seg.index)));
    }
    if !(source_duration > 0.0) {
        return Err(Error::InvalidArgument("source duration must be positive".into()));
    }
    if !lr.is_finite() {
        return Err(Error::NonFinite("predicted divergence"));
    }
    let s = score_terms(dt, dt, source_duration, seg.start_time, lr);
    if !s.is_finite() {
        return Err(Error::NonFinite("segment score"));
    }
    Ok(s)
}

/// Indices admitted by the skip-and-continue rule, in ascending order.
///
/// `starts` only breaks score ties.
pub fn select_indices(durations: &[f64], scores: &[f64], starts: &[f64], theta: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..durations.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(starts[a].total_cmp(&starts[b]))
            .then(a.cmp(&b))
    });
    let mut used = 0.0;
    let mut picked = Vec::new();
    for i in order {
        if used + durations[i] <= theta {
            used += durations[i];
            picked.push(i);
        }
    }
    picked.sort_unstable();
    picked
}

/// Marks the admitted candidates and returns them sorted by start time.
pub fn select_segments(scored: &mut [ScoredSegment], spec: &SummarySpec) -> Vec<Segment> {
    let durations: Vec<f64> = scored.iter().map(|s| s.segment.duration()).collect();
    let scores: Vec<f64> = scored.iter().map(|s| s.score).collect();
    let starts: Vec<f64> = scored.iter().map(|s| s.segment.start_time).collect();
    let picked = select_indices(&durations, &scores, &starts, spec.theta);
    for s in scored.iter_mut() {
        s.selected = false;
    }
    let mut out: Vec<Segment> = picked
        .into_iter()
        .map(|i| {
            scored[i].selected = true;
            scored[i].segment
        })
        .collect();
    out.sort_by(|a, b| a.start_time.partial_cmp(&b.start_time).unwrap_or(Ordering::Equal));
    out
}

/// Concatenates the selected ranges with a linear crossfade at every join.
pub fn assemble_summary(source: &AudioBuffer, selected: &[Segment]) -> Result<AudioBuffer> {
    let half_sample = 0.5 / source.sample_rate as f64;
    let mut ranges = Vec::with_capacity(selected.len());
    let mut prev_end = 0usize;
    for (n, seg) in selected.iter().enumerate() {
        if seg.start_time < 0.0 || seg.end_time > source.duration() + half_sample {
            return Err(Error::InvalidArgument(format!(
                "segment [{}, {}) lies outside the {:.3} s source",
                seg.start_time,
                seg.end_time,
                source.duration()
            )));
        }
        let (a, b) = (source.sample_at(seg.start_time), source.sample_at(seg.end_time));
        if n > 0 && a < prev_end {
            return Err(Error::InvalidArgument(format!(
                "segment [{}, {}) overlaps or precedes the previous one",
                seg.start_time, seg.end_time
            )));
        }
        prev_end = b;
        ranges.push((a, b));
    }

    let fade = (CROSSFADE_SECONDS * source.sample_rate as f64).floor() as usize;
    let mut out: Vec<f64> = Vec::with_capacity(ranges.iter().map(|(a, b)| b - a).sum());
    for (a, b) in ranges {
        let piece = &source.samples[a..b];
        let f = if out.is_empty() { 0 } else { fade.min(piece.len()).min(out.len()) };
        let tail = out.len() - f;
        for (j, &x) in piece[..f].iter().enumerate() {
            let w = (j + 1) as f64 / (f + 1) as f64;
            out[tail + j] = out[tail + j] * (1.0 - w) + x * w;
        }
        out.extend_from_slice(&piece[f..]);
    }
    AudioBuffer::new(out, source.sample_rate)
}

/// Everything the manifest and the plot report about one summarization run.
#[derive(Debug, Clone)]
pub struct SummaryReport {
    pub source: String,
    pub model: String,
    pub duration: f64,
    pub k: usize,
    pub spec: SummarySpec,
    pub schema_version: u32,
    pub config: String,
    pub segments: Vec<ScoredSegment>,
}

impl SummaryReport {
    pub fn selected(&self) -> impl Iterator<Item = &ScoredSegment> {
        self.segments.iter().filter(|s| s.selected)
    }

    pub fn selected_duration(&self) -> f64 {
        self.selected().map(|s| s.segment.duration()).sum()
    }

    pub fn mean_segment_length(&self) -> f64 {
        if self.segments.is_empty() {
            return 0.0;
        }
        self.segments.iter().map(|s| s.segment.duration()).sum::<f64>() / self.segments.len() as f64
    }

    pub fn to_manifest(&self) -> String {
        let mut m = String::new();
        let n_selected = self.selected().count();
        // writing into a String cannot fail
        let _ = writeln!(m, "{MANIFEST_HEADER}");
        let _ = writeln!(m, "source: {}", self.source);
        let _ = writeln!(m, "model: {}", self.model);
        let _ = writeln!(m, "schema_version: {}", self.schema_version);
        let _ = writeln!(m, "duration: {:.6}", self.duration);
        let _ = writeln!(m, "k: {}", self.k);
        let _ = writeln!(m, "ratio: {}", self.spec.ratio);
        let _ = writeln!(m, "theta: {:.6}", self.spec.theta);
        let _ = writeln!(m, "mean_segment_length: {:.6}", self.mean_segment_length());
        let _ = writeln!(m, "selected_count: {n_selected}");
        let _ = writeln!(m, "selected_duration: {:.6}", self.selected_duration());
        let _ = writeln!(m, "config: {}", self.config);
        if n_selected == 0 {
            let _ = writeln!(m, "warning: {EMPTY_SELECTION_WARNING}");
        }
        let _ = writeln!(m, "segments:");
        let _ = writeln!(m, "index\tstart\tend\tduration\tn_frames\tlr\tscore\tselected");
        for s in &self.segments {
            let _ = writeln!(
                m,
                "{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{:e}\t{:e}\t{}",
                s.segment.index,
                s.segment.start_time,
                s.segment.end_time,
                s.segment.duration(),
                s.n_frames,
                s.lr,
                s.score,
                s.selected
            );
        }
        m
    }

    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_manifest()).map_err(|e| Error::io(path, e))
    }

    /// Bar chart of the scores; selected bars are filled, the rest are grey.
    pub fn to_svg(&self) -> String {
        const HEIGHT: f64 = 240.0;
        const MARGIN: f64 = 20.0;
        const BAR: f64 = 14.0;
        const GAP: f64 = 4.0;
        let n = self.segments.len();
        let width = 2.0 * MARGIN + n as f64 * (BAR + GAP);
        let top = self.segments.iter().map(|s| s.score).fold(0.0, f64::max);
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{:.0}" viewBox="0 0 {width:.0} {:.0}">"#,
            HEIGHT + 2.0 * MARGIN,
            HEIGHT + 2.0 * MARGIN
        );
        let _ = writeln!(svg, "<title>segment scores for {}</title>", xml_escape(&self.source));
        for (i, s) in self.segments.iter().enumerate() {
            let h = if top > 0.0 { s.score / top * HEIGHT } else { 0.0 };
            let x = MARGIN + i as f64 * (BAR + GAP);
            let y = MARGIN + HEIGHT - h;
            let (class, fill) = if s.selected { ("selected", "#1f77b4") } else { ("rejected", "#c7c7c7") };
            let _ = writeln!(
                svg,
                r#"<rect class="{class}" x="{x:.3}" y="{y:.6}" width="{BAR}" height="{h:.6}" fill="{fill}"><title>{}: {:.3}-{:.3} s, score {:e}</title></rect>"#,
                s.segment.index, s.segment.start_time, s.segment.end_time, s.score
            );
        }
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN}" y1="{0}" x2="{1:.0}" y2="{0}" stroke="#333"/>"##,
            MARGIN + HEIGHT,
            width - MARGIN
        );
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write_plot(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_svg()).map_err(|e| Error::io(path, e))
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
