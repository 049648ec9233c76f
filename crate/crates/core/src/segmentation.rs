//! Contiguous segmentation by temporally-constrained agglomerative clustering.
//!
//! Every frame starts as its own cluster; the adjacent pair whose merge adds
//! the least within-cluster sum of squares (Ward) is merged until `k`
//! clusters remain. Ties go to the earliest pair.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::MfccMatrix;

/// Candidate segments per minute of source audio.
pub const SEGMENTS_PER_MINUTE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub index: usize,
    pub start_time: f64,
    pub end_time: f64,
}

impl Segment {
    pub fn new(index: usize, start_time: f64, end_time: f64) -> Result<Self> {
        if !(start_time >= 0.0 && end_time > start_time && end_time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "segment [{start_time}, {end_time}) is empty or negative"
            )));
        }
        Ok(Self {
            index,
            start_time,
            end_time,
        })
    }

    pub fn duration(&self) -> f64 {
        self.end_time - self.start_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationPlan {
    pub k: usize,
    pub segments: Vec<Segment>,
    /// First frame of each segment, plus a final entry equal to the frame count.
    pub frame_bounds: Vec<usize>,
}

impl SegmentationPlan {
    pub fn mean_segment_length(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum::<f64>() / self.segments.len() as f64
    }
}

/// `round(duration / 60 * 20)`, never below 2.
pub fn target_k(duration: f64) -> Result<usize> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!("duration must be positive, got {duration}")));
    }
    let raw = (duration / 60.0 * SEGMENTS_PER_MINUTE).round();
    Ok((raw as usize).max(2))
}

/// `target_k` capped at the number of available frames.
pub fn target_k_for_frames(duration: f64, n_frames: usize) -> Result<usize> {
    Ok(target_k(duration)?.min(n_frames))
}

#[derive(Debug, Clone)]
struct Cluster {
    start: usize,
    len: usize,
    sum: Vec<f64>,
    prev: Option<usize>,
    next: Option<usize>,
    alive: bool,
    version: u32,
}

fn ward_cost(a: &Cluster, b: &Cluster) -> f64 {
    let (na, nb) = (a.len as f64, b.len as f64);
    let dist: f64 = a
        .sum
        .iter()
        .zip(&b.sum)
        .map(|(sa, sb)| {
            let d = sa / na - sb / nb;
            d * d
        })
        .sum();
    na * nb / (na + nb) * dist
}

/// Candidate merge of cluster `left` with its right neighbour.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    start: usize,
    left: usize,
    left_version: u32,
    right_version: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // reversed: BinaryHeap pops the cheapest, earliest candidate first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.start.cmp(&self.start))
    }
}

/// Partitions the frames of `features` into `k` contiguous clusters and
/// converts frame boundaries to seconds (midpoint between frame centres).
pub fn cluster_segments(features: &MfccMatrix, k: usize) -> Result<SegmentationPlan> {
    let n = features.n_frames();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {n} frames")));
    }
    let bounds = cluster_bounds(&features.coefficients_by_frame(), k);
    let times = &features.frame_times;
    let boundary_time = |f: usize| (times[f - 1] + times[f]) / 2.0;
    let segments = bounds
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let start = if w[0] == 0 { 0.0 } else { boundary_time(w[0]) };
            let end = if w[1] == n { features.duration } else { boundary_time(w[1]) };
            Segment::new(i, start, end)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentationPlan {
        k,
        segments,
        frame_bounds: bounds,
    })
}

/// Frame boundaries `[0, b1, ..., n]` of the `k`-cluster partition.
pub fn cluster_bounds(frames: &[&[f64]], k: usize) -> Vec<usize> {
    let n = frames.len();
    let mut clusters: Vec<Cluster> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| Cluster {
            start: i,
            len: 1,
            sum: f.to_vec(),
            prev: i.checked_sub(1),
            next: (i + 1 < n).then_some(i + 1),
            alive: true,
            version: 0,
        })
        .collect();

    let candidate = |clusters: &[Cluster], left: usize| -> Option<Candidate> {
        let right = clusters[left].next?;
        Some(Candidate {
            cost: ward_cost(&clusters[left], &clusters[right]),
            start: clusters[left].start,
            left,
            left_version: clusters[left].version,
            right_version: clusters[right].version,
        })
    };

    let mut heap: BinaryHeap<Candidate> = (0..n).filter_map(|i| candidate(&clusters, i)).collect();
    let mut remaining = n;
    while remaining > k {
        let Some(c) = heap.pop() else { break };
        let left = &clusters[c.left];
        let Some(right) = left.next else { continue };
        if !left.alive || left.version != c.left_version || clusters[right].version != c.right_version {
            continue;
        }
        let absorbed = clusters[right].clone();
        {
            let l = &mut clusters[c.left];
            l.len += absorbed.len;
            l.sum.iter_mut().zip(&absorbed.sum).for_each(|(a, b)| *a += b);
            l.next = absorbed.next;
            l.version += 1;
        }
        clusters[right].alive = false;
        clusters[right].version += 1;
        if let Some(nx) = absorbed.next {
            clusters[nx].prev = Some(c.left);
        }
        remaining -= 1;
        if let Some(p) = clusters[c.left].prev {
            heap.extend(candidate(&clusters, p));
        }
        heap.extend(candidate(&clusters, c.left));
    }

    let mut bounds: Vec<usize> = clusters.iter().filter(|c| c.alive).map(|c| c.start).collect();
    bounds.push(n);
    bounds
}

impl MfccMatrix {
    pub(crate) fn coefficients_by_frame(&self) -> Vec<&[f64]> {
        (0..self.n_frames()).map(|t| self.coefficients.frame(t)).collect()
    }
}
