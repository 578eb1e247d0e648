//! Classification metrics and reference baselines: top-k accuracy,
//! per-class precision/recall with macro averages, per-class accuracy
//! differences between two systems, normalized confusion matrices, and the
//! chance / largest-class baselines every result table is read against.

mod baselines;
mod confusion;
mod report;

pub use baselines::{largest_class_baseline, random_baseline};
pub use confusion::ConfusionMatrix;
pub use report::{
    accuracy_difference, per_class_precision_recall, topk_accuracy, write_report_csv, ClassDelta,
    MetricsReport, PerClassMetrics,
};

use crate::error::{Error, Result};

/// How far two scores may drift from an exact simplex before a prediction
/// is rejected. Probabilities come out of f32 softmax chains, so a small
/// slack is required; anything larger signals unnormalized scores.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// One scored test item: a probability vector over the class space.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    segment_id: String,
    scores: Vec<f32>,
}

impl Prediction {
    /// Validates that `scores` is a probability simplex: finite,
    /// non-negative entries summing to 1 within [`SIMPLEX_TOLERANCE`].
    pub fn new(segment_id: impl Into<String>, scores: Vec<f32>) -> Result<Self> {
        let segment_id = segment_id.into();
        if scores.is_empty() {
            return Err(Error::invalid(format!("{segment_id}: empty score vector")));
        }
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid(format!(
                "{segment_id}: scores must be finite and non-negative"
            )));
        }
        // Summing in f64 leaves only per-entry representation error, so the
        // tolerance stays meaningful even for hundreds of classes.
        let sum: f64 = scores.iter().map(|s| *s as f64).sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!(
                "{segment_id}: scores sum to {sum}, not a simplex"
            )));
        }
        Ok(Prediction { segment_id, scores })
    }

    pub fn segment_id(&self) -> &str {
        &self.segment_id
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    pub fn num_classes(&self) -> usize {
        self.scores.len()
    }
}

/// Index of the largest score; the lowest index wins ties so decisions are
/// deterministic. This is the single decision rule shared by accuracy
/// computations, confusion matrices and fusion.
pub fn argmax(scores: &[f32]) -> usize {
    scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Checks `preds` and `labels` line up with each other and the class space.
fn validate_aligned(preds: &[Prediction], labels: &[usize], num_classes: usize) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::invalid("no predictions to evaluate"));
    }
    if preds.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions but {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if num_classes == 0 {
        return Err(Error::invalid("class space is empty"));
    }
    for pred in preds {
        if pred.num_classes() != num_classes {
            return Err(Error::shape(format!(
                "{}: {} scores for {} classes",
                pred.segment_id(),
                pred.num_classes(),
                num_classes
            )));
        }
    }
    if let Some(bad) = labels.iter().find(|l| **l >= num_classes) {
        return Err(Error::invalid(format!(
            "label {bad} outside class space of size {num_classes}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_simplex_is_accepted() {
        let p = Prediction::new("a", vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(p.segment_id(), "a");
        assert_eq!(p.num_classes(), 3);
    }

    #[test]
    fn near_simplex_within_tolerance_is_accepted() {
        // 5e-7 drift: below the tolerance, as softmax chains produce.
        Prediction::new("a", vec![0.5, 0.5 + 5e-7]).unwrap();
    }

    #[test]
    fn broken_simplexes_are_rejected() {
        assert!(Prediction::new("a", vec![]).is_err());
        assert!(Prediction::new("a", vec![0.5, 0.6]).is_err());
        assert!(Prediction::new("a", vec![1.5, -0.5]).is_err());
        assert!(Prediction::new("a", vec![f32::NAN, 1.0]).is_err());
        assert!(Prediction::new("a", vec![0.5, 0.5 + 1e-4]).is_err());
    }

    #[test]
    fn argmax_breaks_ties_toward_the_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax(&[0.4, 0.2, 0.4]), 0);
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
    }
}
