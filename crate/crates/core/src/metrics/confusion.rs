//! Confusion matrices over argmax decisions, with row normalization and a
//! support filter for readable plots on long-tailed class spaces.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

use super::{argmax, validate_aligned, Prediction};

/// Counts of (true class, predicted class) pairs. Rows are true classes.
/// `classes` names the row/column class ids, so a filtered matrix keeps
/// its labels after dropping rare classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionMatrix {
    classes: Vec<usize>,
    counts: Vec<Vec<usize>>,
    support: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn from_predictions(
        preds: &[Prediction],
        labels: &[usize],
        num_classes: usize,
    ) -> Result<Self> {
        validate_aligned(preds, labels, num_classes)?;
        let mut counts = vec![vec![0usize; num_classes]; num_classes];
        for (pred, &label) in preds.iter().zip(labels) {
            counts[label][argmax(pred.scores())] += 1;
        }
        let support = counts.iter().map(|row| row.iter().sum()).collect();
        Ok(ConfusionMatrix {
            classes: (0..num_classes).collect(),
            counts,
            support,
        })
    }

    /// Class ids labelling the rows and columns.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    /// True-class totals per row, captured before any filtering.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Each cell divided by its row's true-class support: the fraction of
    /// class-i items predicted as class j. Zero-support rows stay all-zero.
    /// On an unfiltered matrix every supported row sums to one; after
    /// column filtering the mass confused into dropped classes is gone, so
    /// rows may sum to less.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .zip(&self.support)
            .map(|(row, &s)| {
                row.iter()
                    .map(|&c| if s == 0 { 0.0 } else { c as f64 / s as f64 })
                    .collect()
            })
            .collect()
    }

    /// Restricts rows and columns to classes with support strictly greater
    /// than `min_support`. Supports of the kept classes are preserved so
    /// normalization still reads as fractions of the full test set.
    pub fn filter_min_support(&self, min_support: usize) -> ConfusionMatrix {
        let keep: Vec<usize> = (0..self.classes.len())
            .filter(|i| self.support[*i] > min_support)
            .collect();
        ConfusionMatrix {
            classes: keep.iter().map(|i| self.classes[*i]).collect(),
            counts: keep
                .iter()
                .map(|i| keep.iter().map(|j| self.counts[*i][*j]).collect())
                .collect(),
            support: keep.iter().map(|i| self.support[*i]).collect(),
        }
    }

    /// Writes the row-normalized matrix as CSV with class-id headers, in
    /// fixed six-decimal formatting for reproducible bytes.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("true_class");
        for c in &self.classes {
            write!(out, ",{c}").expect("string write");
        }
        out.push('\n');
        for (i, row) in self.row_normalized().iter().enumerate() {
            write!(out, "{}", self.classes[i]).expect("string write");
            for value in row {
                write!(out, ",{value:.6}").expect("string write");
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}
