//! Background/foreground split by repetition similarity.
//!
//! Every frame is modelled by the per-bin median of the frames most similar
//! to it (cosine similarity of magnitude columns, at least `separation_gap`
//! seconds apart). The model, clamped by the observed magnitude, becomes a
//! soft background mask; the foreground mask is its complement.

use rayon::prelude::*;

use crate::audio_io::AudioBuffer;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::spectral::{FrameMatrix, Spectrogram, Stft};

/// Denominator guard for the ratio mask.
pub const MASK_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityParams {
    /// Upper bound on the returned set, query frame included.
    pub n_similar: usize,
    /// Minimum index distance between any two returned frames.
    pub min_gap: usize,
}

impl SimilarityParams {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self {
            n_similar: cfg.n_similar,
            min_gap: cfg.separation_gap_frames(),
        }
    }

    /// Gap in frames equivalent to `gap_seconds` for a given spectrogram.
    pub fn for_spectrogram(spec: &Spectrogram, n_similar: usize, gap_seconds: f64) -> Self {
        Self {
            n_similar,
            min_gap: (gap_seconds * spec.sample_rate as f64 / spec.hop as f64).ceil() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair {
    pub background: FrameMatrix,
    pub foreground: FrameMatrix,
}

/// Magnitude columns scaled to unit norm; all-zero columns stay zero.
fn unit_columns(mag: &FrameMatrix) -> FrameMatrix {
    let mut out = mag.clone();
    for t in 0..out.n_frames() {
        let col = out.frame_mut(t);
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.iter_mut().for_each(|v| *v /= norm);
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy pick by descending similarity (ties to the lower index), keeping
/// only strictly positive similarities and enforcing the minimum gap.
fn pick_similar(query: usize, sims: &[f64], params: SimilarityParams) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sims.len()).filter(|&j| j != query && sims[j] > 0.0).collect();
    order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
    let mut chosen = vec![query];
    for j in order {
        if chosen.len() >= params.n_similar {
            break;
        }
        if chosen.iter().all(|&c| c.abs_diff(j) >= params.min_gap) {
            chosen.push(j);
        }
    }
    chosen
}

fn similar_from_units(units: &FrameMatrix, frame: usize, params: SimilarityParams) -> Vec<usize> {
    let q = units.frame(frame);
    let sims: Vec<f64> = (0..units.n_frames()).map(|j| dot(q, units.frame(j))).collect();
    pick_similar(frame, &sims, params)
}

/// Indices of the frames most similar to `frame`, query first.
pub fn similar_frames(spec: &Spectrogram, frame: usize, params: SimilarityParams) -> Result<Vec<usize>> {
    if frame >= spec.n_frames() {
        return Err(Error::InvalidArgument(format!(
            "frame {frame} out of range for {} frames",
            spec.n_frames()
        )));
    }
    let units = unit_columns(&spec.magnitude());
    Ok(similar_from_units(&units, frame, params))
}

/// Median of a slice; mean of the two middle values for even lengths.
fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    }
}

/// Repeating-background magnitude model, never above the observed magnitude.
pub fn repeating_model(spec: &Spectrogram, params: SimilarityParams) -> FrameMatrix {
    let mag = spec.magnitude();
    let units = unit_columns(&mag);
    let n_bins = mag.n_rows();
    let columns: Vec<Vec<f64>> = (0..mag.n_frames())
        .into_par_iter()
        .map(|t| {
            let set = similar_from_units(&units, t, params);
            let mut scratch = vec![0.0; set.len()];
            (0..n_bins)
                .map(|k| {
                    for (s, &j) in scratch.iter_mut().zip(&set) {
                        *s = mag.get(k, j);
                    }
                    median_in_place(&mut scratch).min(mag.get(k, t))
                })
                .collect()
        })
        .collect();
    FrameMatrix::from_frames(&columns).unwrap_or_else(|_| FrameMatrix::zeros(n_bins, 0))
}

/// Ratio masks `model / (|spec| + eps)` and their complement.
pub fn soft_masks(spec: &Spectrogram, model: &FrameMatrix) -> Result<MaskPair> {
    let mag = spec.magnitude();
    if mag.shape() != model.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", mag.shape()),
            got: format!("{:?}", model.shape()),
        });
    }
    let (rows, frames) = mag.shape();
    let mut background = FrameMatrix::zeros(rows, frames);
    let mut foreground = FrameMatrix::zeros(rows, frames);
    for t in 0..frames {
        for k in 0..rows {
            let bg = (model.get(k, t) / (mag.get(k, t) + MASK_EPS)).clamp(0.0, 1.0);
            background.set(k, t, bg);
            foreground.set(k, t, 1.0 - bg);
        }
    }
    Ok(MaskPair {
        background,
        foreground,
    })
}

/// Background and foreground signals of the same length as the input.
#[derive(Debug, Clone)]
pub struct Separated {
    pub background: AudioBuffer,
    pub foreground: AudioBuffer,
    pub masks: MaskPair,
}

pub fn split_channels(buffer: &AudioBuffer, cfg: &PipelineConfig) -> Result<Separated> {
    let stft = Stft::from_config(cfg)?;
    let spec = stft.forward(buffer)?;
    let params = SimilarityParams::for_spectrogram(&spec, cfg.n_similar, cfg.separation_gap);
    let model = repeating_model(&spec, params);
    let masks = soft_masks(&spec, &model)?;
    let background = stft.inverse(&spec.apply_mask(&masks.background)?, buffer.len())?;
    let foreground = stft.inverse(&spec.apply_mask(&masks.foreground)?, buffer.len())?;
    Ok(Separated {
        background,
        foreground,
        masks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rustfft::num_complex::Complex64;
    use std::f64::consts::PI;

    fn spec_from_columns(cols: &[Vec<f64>], sample_rate: u32, hop: usize) -> Spectrogram {
        let n_fft = (cols[0].len() - 1) * 2;
        let frames = cols
            .iter()
            .map(|c| c.iter().map(|&m| Complex64::new(m, 0.0)).collect())
            .collect();
        Spectrogram::from_parts(frames, n_fft, hop, sample_rate).unwrap()
    }

    #[test]
    fn single_frame_returns_itself() {
        let spec = spec_from_columns(&[vec![1.0, 2.0, 3.0]], 8, 4);
        let p = SimilarityParams { n_similar: 100, min_gap: 4 };
        assert_eq!(similar_frames(&spec, 0, p).unwrap(), vec![0]);
    }

    #[test]
    fn identical_columns_are_spread_by_the_gap() {
        let cols = vec![vec![1.0, 0.5, 0.25, 0.0, 2.0]; 40];
        let spec = spec_from_columns(&cols, 8, 4); // 2 frames per second
        let p = SimilarityParams::for_spectrogram(&spec, 100, 2.0);
        assert_eq!(p.min_gap, 4);
        let got = similar_frames(&spec, 10, p).unwrap();
        assert_eq!(got, vec![10, 0, 4, 14, 18, 22, 26, 30, 34, 38]);
        let units = unit_columns(&spec.magnitude());
        for &j in &got {
            assert!((dot(units.frame(10), units.frame(j)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_frames_stay_on_the_period() {
        // one-hot columns cycling with period 8 frames (4 s at 2 frames/s)
        let period = 8;
        let cols: Vec<Vec<f64>> = (0..60)
            .map(|t| {
                let mut c = vec![0.0; 9];
                c[t % period] = 1.0 + (t as f64) * 1e-3;
                c
            })
            .collect();
        let spec = spec_from_columns(&cols, 8, 4);
        let p = SimilarityParams::for_spectrogram(&spec, 100, 2.0);
        let query = 20; // 10 s
        let got = similar_frames(&spec, query, p).unwrap();
        // brute force: every frame with positive cosine to the query
        let mag = spec.magnitude();
        let cos = |a: usize, b: usize| {
            let (x, y) = (mag.frame(a), mag.frame(b));
            dot(x, y) / (dot(x, x).sqrt() * dot(y, y).sqrt())
        };
        let matching: Vec<usize> = (0..60).filter(|&j| cos(query, j) > 0.5).collect();
        for &j in &got {
            assert!(matching.contains(&j));
            assert_eq!((j as isize - query as isize).rem_euclid(period as isize), 0);
        }
        assert_eq!(got.len(), matching.len());
    }

    #[test]
    fn similar_frames_rejects_bad_index() {
        let spec = spec_from_columns(&[vec![1.0, 2.0, 3.0]], 8, 4);
        let p = SimilarityParams { n_similar: 3, min_gap: 1 };
        assert!(similar_frames(&spec, 1, p).is_err());
    }

    #[test]
    fn identical_columns_model_equals_magnitude() {
        let cols = vec![vec![0.3, 1.0, 0.0, 7.5, 2.0]; 30];
        let spec = spec_from_columns(&cols, 8, 4);
        let p = SimilarityParams::for_spectrogram(&spec, 100, 2.0);
        assert_eq!(repeating_model(&spec, p), spec.magnitude());
    }

    #[test]
    fn transient_is_replaced_by_median_of_quiet_frames() {
        let mut cols: Vec<Vec<f64>> = (0..30)
            .map(|t| vec![1.0 + 0.01 * (t % 3) as f64, 0.5, 0.2, 0.1, 0.1])
            .collect();
        cols[13][3] = 50.0;
        let spec = spec_from_columns(&cols, 8, 4);
        let p = SimilarityParams::for_spectrogram(&spec, 100, 2.0);
        let model = repeating_model(&spec, p);
        let set = similar_frames(&spec, 13, p).unwrap();
        assert!(set.len() > 2);
        let mut vals: Vec<f64> = set.iter().map(|&j| cols[j][3]).collect();
        vals.sort_by(f64::total_cmp);
        let n = vals.len();
        let manual = if n % 2 == 1 { vals[n / 2] } else { (vals[n / 2 - 1] + vals[n / 2]) / 2.0 };
        assert_eq!(model.get(3, 13), manual);
        assert!(model.get(3, 13) < 1.0);
    }

    #[test]
    fn zero_spectrogram_zero_model() {
        let cols = vec![vec![0.0; 5]; 12];
        let spec = spec_from_columns(&cols, 8, 4);
        let p = SimilarityParams::for_spectrogram(&spec, 100, 2.0);
        assert!(repeating_model(&spec, p).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median_in_place(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_in_place(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median_in_place(&mut [5.0]), 5.0);
    }

    #[test]
    fn soft_mask_limits() {
        let cols: Vec<Vec<f64>> = (0..6).map(|t| vec![1.0 + t as f64, 2.0, 0.5]).collect();
        let spec = spec_from_columns(&cols, 8, 2);
        let mag = spec.magnitude();

        let full = soft_masks(&spec, &mag).unwrap();
        assert!(full.background.as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-9));
        assert!(full.foreground.as_slice().iter().all(|&v| v.abs() < 1e-9));

        let zero = soft_masks(&spec, &FrameMatrix::zeros(3, 6)).unwrap();
        assert!(zero.background.as_slice().iter().all(|&v| v == 0.0));
        assert!(zero.foreground.as_slice().iter().all(|&v| v == 1.0));

        let mut half = mag.clone();
        for t in 0..6 {
            half.frame_mut(t).iter_mut().for_each(|v| *v /= 2.0);
        }
        let h = soft_masks(&spec, &half).unwrap();
        for (b, f) in h.background.as_slice().iter().zip(h.foreground.as_slice()) {
            assert!((b - 0.5).abs() < 1e-9 && (f - 0.5).abs() < 1e-9);
        }

        assert!(soft_masks(&spec, &FrameMatrix::zeros(2, 6)).is_err());
    }

    #[test]
    fn silent_bins_get_zero_background() {
        let cols = vec![vec![0.0; 3]; 4];
        let spec = spec_from_columns(&cols, 8, 2);
        let m = soft_masks(&spec, &FrameMatrix::zeros(3, 4)).unwrap();
        assert!(m.background.as_slice().iter().all(|v| v.is_finite() && *v == 0.0));
    }

    #[test]
    fn silence_splits_into_silence() {
        let cfg = PipelineConfig::default();
        let s = split_channels(&AudioBuffer::silence(22050, 22050), &cfg).unwrap();
        assert!(s.background.samples.iter().all(|&v| v == 0.0));
        assert!(s.foreground.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn steady_tone_is_background() {
        let cfg = PipelineConfig::default();
        let x = AudioBuffer::new(
            (0..22050 * 10)
                .map(|i| 0.5 * (2.0 * PI * 440.0 * i as f64 / 22050.0).sin())
                .collect(),
            22050,
        )
        .unwrap();
        let s = split_channels(&x, &cfg).unwrap();
        assert!(s.background.energy() / x.energy() >= 0.99);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn masks_complementary_and_gap_respected(
            cols in proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, 5), 1..60),
            gap in 1usize..10,
            n_similar in 1usize..20,
        ) {
            let spec = spec_from_columns(&cols, 8, 4);
            let p = SimilarityParams { n_similar, min_gap: gap };
            let model = repeating_model(&spec, p);
            let mag = spec.magnitude();
            for (w, m) in model.as_slice().iter().zip(mag.as_slice()) {
                prop_assert!(*w >= 0.0 && w <= m);
            }
            let masks = soft_masks(&spec, &model).unwrap();
            for (b, f) in masks.background.as_slice().iter().zip(masks.foreground.as_slice()) {
                prop_assert!((0.0..=1.0).contains(b) && (0.0..=1.0).contains(f));
                prop_assert_eq!(b + f, 1.0);
            }
            for t in 0..spec.n_frames() {
                let set = similar_frames(&spec, t, p).unwrap();
                prop_assert_eq!(set[0], t);
                prop_assert!(set.len() <= n_similar.max(1));
                for (i, a) in set.iter().enumerate() {
                    for b in &set[i + 1..] {
                        prop_assert!(a.abs_diff(*b) >= gap);
                    }
                }
            }
        }
    }
}
