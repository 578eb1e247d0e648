//! Score-level fusion: a weighted sum of per-stream probability vectors,
//! plus a grid search that picks the weights maximizing validation top-1.

use crate::error::{Error, Result};
use crate::metrics::argmax;

use super::scores::StreamScores;

/// One positive weight per stream, applied positionally.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionWeights {
    values: Vec<f32>,
}

impl FusionWeights {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("fusion needs at least one weight"));
        }
        if values.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::invalid(format!(
                "fusion weights must be positive and finite, got {values:?}"
            )));
        }
        Ok(FusionWeights { values })
    }

    /// Equal weighting of `n` streams (the unweighted sum).
    pub fn uniform(n: usize) -> Result<Self> {
        FusionWeights::new(vec![1.0; n])
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Fuses aligned stream scores into one simplex vector: the weighted sum of
/// the per-stream probabilities, renormalized to sum to one.
pub fn weighted_sum_fuse(scores: &[StreamScores], weights: &FusionWeights) -> Result<Vec<f32>> {
    if scores.is_empty() {
        return Err(Error::invalid("no stream scores to fuse"));
    }
    if scores.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} streams but {} weights",
            scores.len(),
            weights.len()
        )));
    }
    let c = scores[0].num_classes();
    let mut fused = vec![0.0f32; c];
    for (stream, &w) in scores.iter().zip(weights.values()) {
        if stream.num_classes() != c {
            return Err(Error::shape(format!(
                "stream {} has {} classes, expected {c}",
                stream.stream_id.as_str(),
                stream.num_classes()
            )));
        }
        for (f, p) in fused.iter_mut().zip(&stream.probs) {
            *f += w * p;
        }
    }
    let total: f32 = fused.iter().sum();
    for f in &mut fused {
        *f /= total;
    }
    Ok(fused)
}

/// The default search grid: 1.0 to 2.0 in steps of 0.1, inclusive.
pub fn weight_grid() -> Vec<f32> {
    (0..=10).map(|i| 1.0 + 0.1 * i as f32).collect()
}

fn grid_accuracy(
    scores_val: &[Vec<StreamScores>],
    labels_val: &[usize],
    weights: &FusionWeights,
) -> Result<usize> {
    let mut hits = 0;
    for (streams, &label) in scores_val.iter().zip(labels_val) {
        if argmax(&weighted_sum_fuse(streams, weights)?) == label {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Searches every combination of grid weights for the streams after the
/// first (whose weight stays pinned at 1.0, since only ratios affect the
/// argmax) and returns the combination with the highest validation top-1.
/// Ties resolve to the lexicographically smallest weight tuple.
pub fn grid_search_weights(
    scores_val: &[Vec<StreamScores>],
    labels_val: &[usize],
    grid: &[f32],
) -> Result<FusionWeights> {
    if scores_val.is_empty() {
        return Err(Error::invalid("grid search needs a non-empty validation set"));
    }
    if scores_val.len() != labels_val.len() {
        return Err(Error::invalid(format!(
            "{} score rows but {} labels",
            scores_val.len(),
            labels_val.len()
        )));
    }
    if grid.is_empty() || grid.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::invalid("grid values must be positive and finite"));
    }
    let streams = scores_val[0].len();
    if streams == 0 {
        return Err(Error::invalid("validation rows hold no streams"));
    }
    if let Some(bad) = scores_val.iter().find(|row| row.len() != streams) {
        return Err(Error::invalid(format!(
            "inconsistent stream count: expected {streams}, found {}",
            bad.len()
        )));
    }

    // Odometer over the free weight positions, in lexicographic order, so a
    // strictly-greater update rule lands on the smallest tying tuple.
    let free = streams - 1;
    let mut indices = vec![0usize; free];
    let mut best: Option<(usize, FusionWeights)> = None;
    loop {
        let mut values = Vec::with_capacity(streams);
        values.push(1.0);
        values.extend(indices.iter().map(|&i| grid[i]));
        let candidate = FusionWeights::new(values)?;
        let hits = grid_accuracy(scores_val, labels_val, &candidate)?;
        if best.as_ref().is_none_or(|(b, _)| hits > *b) {
            best = Some((hits, candidate));
        }
        // Advance the odometer; most-significant digit first gives
        // lexicographic order over tuples.
        let mut pos = free;
        while pos > 0 {
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < grid.len() {
                break;
            }
            indices[pos] = 0;
            if pos == 0 {
                return Ok(best.expect("loop ran at least once").1);
            }
        }
        if free == 0 {
            return Ok(best.expect("loop ran at least once").1);
        }
    }
}
