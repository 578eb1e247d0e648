//! Sparse temporal sampling: segment planning, per-segment random training
//! frames, evenly spaced test frames, and score consensus by averaging.

use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};

/// Contiguous division of a clip's frame indices into `k` segments of
/// near-equal size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentPlan {
    boundaries: Vec<Range<usize>>,
}

impl SegmentPlan {
    pub fn k(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[Range<usize>] {
        &self.boundaries
    }
}

/// Plans `k` sequential segments over `n` frames. When `k` does not divide
/// `n`, the first `n mod k` segments receive one extra frame. Clips shorter
/// than `k` frames reuse frames: each segment covers the single frame at
/// floor(i*n/k), so very short clips remain usable.
pub fn split_segments(n: usize, k: usize) -> Result<SegmentPlan> {
    if n == 0 || k == 0 {
        return Err(Error::invalid(format!(
            "cannot split {n} frames into {k} segments"
        )));
    }
    let boundaries = if n < k {
        (0..k)
            .map(|i| {
                let f = i * n / k;
                f..f + 1
            })
            .collect()
    } else {
        let base = n / k;
        let extra = n % k;
        let mut start = 0;
        (0..k)
            .map(|i| {
                let size = base + usize::from(i < extra);
                let range = start..start + size;
                start += size;
                range
            })
            .collect()
    };
    Ok(SegmentPlan { boundaries })
}

/// Draws one uniformly random frame index from each segment.
pub fn sample_train<R: Rng>(plan: &SegmentPlan, rng: &mut R) -> Vec<usize> {
    plan.boundaries
        .iter()
        .map(|range| rng.gen_range(range.clone()))
        .collect()
}

/// `count` frame indices spread evenly over the clip, each at the centre of
/// its 1/count slice: index_i = floor((i + 0.5) * n / count).
pub fn sample_test(n: usize, count: usize) -> Vec<usize> {
    (0..count)
        .map(|i| ((i as f64 + 0.5) * n as f64 / count as f64).floor() as usize)
        .map(|idx| idx.min(n.saturating_sub(1)))
        .collect()
}

/// Elementwise arithmetic mean of per-frame score vectors. With softmax
/// inputs the result stays on the probability simplex.
pub fn consensus_average(scores: &[Vec<f32>]) -> Result<Vec<f32>> {
    let first = scores
        .first()
        .ok_or_else(|| Error::invalid("consensus of an empty score list"))?;
    let c = first.len();
    if scores.iter().any(|s| s.len() != c) {
        return Err(Error::shape("consensus inputs differ in length"));
    }
    let inv = 1.0 / scores.len() as f32;
    let mut out = vec![0.0f32; c];
    for s in scores {
        for (o, v) in out.iter_mut().zip(s) {
            *o += v * inv;
        }
    }
    Ok(out)
}
