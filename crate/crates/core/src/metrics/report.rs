//! Accuracy and per-class metrics, plus the side-by-side recall deltas used
//! to compare two systems on the same test set.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{argmax, validate_aligned, Prediction};

/// Fraction of items whose true label ranks among the `k` highest scores.
/// The ranking orders by score descending with ties broken by ascending
/// class index, so a tied label counts only when its index is small enough.
pub fn topk_accuracy(preds: &[Prediction], labels: &[usize], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("top-k needs k >= 1"));
    }
    let num_classes = preds.first().map_or(0, Prediction::num_classes);
    validate_aligned(preds, labels, num_classes.max(1))?;
    let mut hits = 0usize;
    for (pred, &label) in preds.iter().zip(labels) {
        let scores = pred.scores();
        let target = scores[label];
        // Classes ranked strictly above the label: higher score, or equal
        // score with a smaller index. The label lands in the top k exactly
        // when fewer than k classes outrank it.
        let outranked = scores
            .iter()
            .enumerate()
            .filter(|(j, s)| **s > target || (**s == target && *j < label))
            .count();
        hits += usize::from(outranked < k);
    }
    Ok(hits as f64 / preds.len() as f64)
}

/// Precision and recall of the argmax decisions, per class and macro.
#[derive(Clone, Debug, PartialEq)]
pub struct PerClassMetrics {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub support: Vec<usize>,
    /// Means over classes with support > 0; unsupported classes are
    /// excluded, never-predicted but supported classes contribute zeros.
    pub macro_precision: f64,
    pub macro_recall: f64,
}

pub fn per_class_precision_recall(
    preds: &[Prediction],
    labels: &[usize],
    num_classes: usize,
) -> Result<PerClassMetrics> {
    validate_aligned(preds, labels, num_classes)?;
    let mut tp = vec![0usize; num_classes];
    let mut predicted = vec![0usize; num_classes];
    let mut support = vec![0usize; num_classes];
    for (pred, &label) in preds.iter().zip(labels) {
        let decision = argmax(pred.scores());
        support[label] += 1;
        predicted[decision] += 1;
        if decision == label {
            tp[label] += 1;
        }
    }
    let precision: Vec<f64> = (0..num_classes)
        .map(|c| {
            if predicted[c] == 0 {
                0.0
            } else {
                tp[c] as f64 / predicted[c] as f64
            }
        })
        .collect();
    let recall: Vec<f64> = (0..num_classes)
        .map(|c| {
            if support[c] == 0 {
                0.0
            } else {
                tp[c] as f64 / support[c] as f64
            }
        })
        .collect();
    let evaluated: Vec<usize> = (0..num_classes).filter(|c| support[*c] > 0).collect();
    let macro_precision = evaluated.iter().map(|c| precision[*c]).sum::<f64>() / evaluated.len() as f64;
    let macro_recall = evaluated.iter().map(|c| recall[*c]).sum::<f64>() / evaluated.len() as f64;
    Ok(PerClassMetrics {
        precision,
        recall,
        support,
        macro_precision,
        macro_recall,
    })
}

/// The full evaluation of one system on one test set.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub top1: f64,
    pub top5: f64,
    pub per_class_precision: Vec<f64>,
    pub per_class_recall: Vec<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub support: Vec<usize>,
}

impl MetricsReport {
    pub fn compute(preds: &[Prediction], labels: &[usize], num_classes: usize) -> Result<Self> {
        validate_aligned(preds, labels, num_classes)?;
        let per_class = per_class_precision_recall(preds, labels, num_classes)?;
        Ok(MetricsReport {
            top1: topk_accuracy(preds, labels, 1)?,
            top5: topk_accuracy(preds, labels, 5)?,
            per_class_precision: per_class.precision,
            per_class_recall: per_class.recall,
            macro_precision: per_class.macro_precision,
            macro_recall: per_class.macro_recall,
            support: per_class.support,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.support.len()
    }

    /// Total number of evaluated items.
    pub fn total_support(&self) -> usize {
        self.support.iter().sum()
    }
}

/// One class whose recall moved between two evaluations.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDelta {
    pub class: usize,
    /// recall(b) − recall(a): positive when system b improved the class.
    pub delta: f64,
}

/// Per-class recall change from report `a` to report `b`, restricted to the
/// classes whose recall actually moved. Recalls are ratios of small integer
/// counts over a shared test set, so exact comparison is meaningful. Both
/// reports must describe the same class space and test set.
pub fn accuracy_difference(a: &MetricsReport, b: &MetricsReport) -> Result<Vec<ClassDelta>> {
    if a.num_classes() != b.num_classes() {
        return Err(Error::shape(format!(
            "class spaces differ: {} vs {}",
            a.num_classes(),
            b.num_classes()
        )));
    }
    if a.support != b.support {
        return Err(Error::invalid(
            "reports evaluate different test sets (supports differ)",
        ));
    }
    Ok(a.per_class_recall
        .iter()
        .zip(&b.per_class_recall)
        .enumerate()
        .filter(|(_, (ra, rb))| ra != rb)
        .map(|(class, (ra, rb))| ClassDelta {
            class,
            delta: rb - ra,
        })
        .collect())
}

/// Writes a report as CSV: one row per class, then a macro row and an
/// overall row carrying the accuracies. Values use fixed six-decimal
/// formatting so identical reports serialize to identical bytes.
pub fn write_report_csv(path: &Path, report: &MetricsReport) -> Result<()> {
    let mut out = String::from("class,support,precision,recall,top1,top5\n");
    for c in 0..report.num_classes() {
        writeln!(
            out,
            "{c},{},{:.6},{:.6},,",
            report.support[c], report.per_class_precision[c], report.per_class_recall[c]
        )
        .expect("string write");
    }
    writeln!(
        out,
        "macro,,{:.6},{:.6},,",
        report.macro_precision, report.macro_recall
    )
    .expect("string write");
    writeln!(
        out,
        "overall,{},,,{:.6},{:.6}",
        report.total_support(),
        report.top1,
        report.top5
    )
    .expect("string write");
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_hot(class: usize, num_classes: usize) -> Vec<f32> {
        let mut v = vec![0.0; num_classes];
        v[class] = 1.0;
        v
    }

    fn preds_from(scores: Vec<Vec<f32>>) -> Vec<Prediction> {
        scores
            .into_iter()
            .enumerate()
            .map(|(i, s)| Prediction::new(format!("s{i}"), s).unwrap())
            .collect()
    }

    /// Random prediction set with deliberate score ties: scores drawn on a
    /// coarse grid, then normalized.
    fn random_tied_instance(
        rng: &mut ChaCha8Rng,
        num_classes: usize,
        items: usize,
    ) -> (Vec<Prediction>, Vec<usize>) {
        let mut preds = Vec::new();
        let mut labels = Vec::new();
        for i in 0..items {
            let raw: Vec<f64> = (0..num_classes)
                .map(|_| rng.gen_range(1..=5) as f64)
                .collect();
            let total: f64 = raw.iter().sum();
            let scores: Vec<f32> = raw.iter().map(|r| (r / total) as f32).collect();
            preds.push(Prediction::new(format!("s{i}"), scores).unwrap());
            labels.push(rng.gen_range(0..num_classes));
        }
        (preds, labels)
    }

    #[test]
    fn perfect_one_hot_predictions_score_everything_at_one() {
        let labels = vec![0, 1, 2, 1];
        let preds = preds_from(labels.iter().map(|l| one_hot(*l, 3)).collect());
        let report = MetricsReport::compute(&preds, &labels, 3).unwrap();
        assert_eq!(report.top1, 1.0);
        assert_eq!(report.top5, 1.0);
        assert!(report.per_class_precision.iter().all(|p| *p == 1.0));
        assert!(report.per_class_recall.iter().all(|r| *r == 1.0));
        assert_eq!(report.macro_precision, 1.0);
        assert_eq!(report.macro_recall, 1.0);
    }

    #[test]
    fn uniform_scores_count_the_label_only_below_k() {
        // All scores tied: the tie rule ranks classes by index, so the
        // label is a top-5 hit exactly when its index is below five.
        for label in 0..10usize {
            let preds = preds_from(vec![vec![0.1; 10]]);
            let hit = topk_accuracy(&preds, &[label], 5).unwrap();
            assert_eq!(hit, if label < 5 { 1.0 } else { 0.0 }, "label {label}");
        }
    }

    #[test]
    fn topk_matches_a_sort_and_scan_oracle_on_random_tied_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for case in 0..200 {
            let num_classes = rng.gen_range(2..20);
            let (preds, labels) = random_tied_instance(&mut rng, num_classes, 1);
            let k = rng.gen_range(1..=num_classes);

            // Oracle: sort class indices by (score desc, index asc), scan
            // the first k for the label.
            let scores = preds[0].scores();
            let mut order: Vec<usize> = (0..num_classes).collect();
            order.sort_by(|a, b| scores[*b].partial_cmp(&scores[*a]).unwrap().then(a.cmp(b)));
            let expected = if order[..k].contains(&labels[0]) { 1.0 } else { 0.0 };

            let got = topk_accuracy(&preds, &labels, k).unwrap();
            assert_eq!(got, expected, "case {case}: k={k} scores={scores:?}");
        }
    }

    #[test]
    fn topk_is_monotone_in_k_and_saturates_at_full_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (preds, labels) = random_tied_instance(&mut rng, 12, 50);
        let mut previous = 0.0;
        for k in 1..=12 {
            let acc = topk_accuracy(&preds, &labels, k).unwrap();
            assert!(acc >= previous, "k={k}: {acc} < {previous}");
            previous = acc;
        }
        assert_eq!(previous, 1.0);
    }

    #[test]
    fn never_predicted_class_scores_zero_but_stays_in_the_macro() {
        // Class 2 is present in the labels but every decision says 0 or 1.
        let preds = preds_from(vec![
            one_hot(0, 3),
            one_hot(1, 3),
            one_hot(0, 3), // true class 2, predicted 0
        ]);
        let labels = vec![0, 1, 2];
        let m = per_class_precision_recall(&preds, &labels, 3).unwrap();
        assert_eq!(m.precision[2], 0.0);
        assert_eq!(m.recall[2], 0.0);
        // Macro averages over all three supported classes, zeros included.
        assert!((m.macro_recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.macro_precision - (0.5 + 1.0 + 0.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn per_class_metrics_match_a_confusion_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let num_classes = rng.gen_range(2..8);
            let (preds, labels) = random_tied_instance(&mut rng, num_classes, 60);
            let m = per_class_precision_recall(&preds, &labels, num_classes).unwrap();

            // Oracle: accumulate the full confusion matrix, then read the
            // metrics off its rows and columns.
            let mut confusion = vec![vec![0usize; num_classes]; num_classes];
            for (p, &l) in preds.iter().zip(&labels) {
                confusion[l][argmax(p.scores())] += 1;
            }
            for c in 0..num_classes {
                let tp = confusion[c][c];
                let row: usize = confusion[c].iter().sum();
                let col: usize = confusion.iter().map(|r| r[c]).sum();
                let precision = if col == 0 { 0.0 } else { tp as f64 / col as f64 };
                let recall = if row == 0 { 0.0 } else { tp as f64 / row as f64 };
                assert_eq!(m.precision[c], precision, "precision class {c}");
                assert_eq!(m.recall[c], recall, "recall class {c}");
                assert_eq!(m.support[c], row, "support class {c}");
            }
        }
    }

    #[test]
    fn micro_accuracy_equals_support_weighted_recall() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let (preds, labels) = random_tied_instance(&mut rng, 7, 120);
        let report = MetricsReport::compute(&preds, &labels, 7).unwrap();
        let weighted: f64 = report
            .per_class_recall
            .iter()
            .zip(&report.support)
            .map(|(r, s)| r * *s as f64)
            .sum();
        let micro = weighted / report.total_support() as f64;
        assert!((micro - report.top1).abs() < 1e-9, "{micro} vs {}", report.top1);
    }

    #[test]
    fn identical_reports_produce_no_deltas() {
        let labels = vec![0, 1, 2];
        let preds = preds_from(labels.iter().map(|l| one_hot(*l, 3)).collect());
        let report = MetricsReport::compute(&preds, &labels, 3).unwrap();
        assert!(accuracy_difference(&report, &report).unwrap().is_empty());
    }

    #[test]
    fn full_recovery_of_one_class_yields_delta_one() {
        let labels = vec![0, 1, 2, 2];
        // System a gets class 2 always wrong; system b is perfect.
        let a = preds_from(vec![one_hot(0, 3), one_hot(1, 3), one_hot(0, 3), one_hot(1, 3)]);
        let b = preds_from(labels.iter().map(|l| one_hot(*l, 3)).collect());
        let report_a = MetricsReport::compute(&a, &labels, 3).unwrap();
        let report_b = MetricsReport::compute(&b, &labels, 3).unwrap();
        let deltas = accuracy_difference(&report_a, &report_b).unwrap();
        assert_eq!(deltas.len(), 1);
        assert_eq!(deltas[0].class, 2);
        assert_eq!(deltas[0].delta, 1.0);
    }

    #[test]
    fn deltas_match_direct_recall_subtraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let labels: Vec<usize> = (0..80).map(|_| rng.gen_range(0..5)).collect();
        let (preds_a, _) = random_tied_instance(&mut rng, 5, 80);
        let (preds_b, _) = random_tied_instance(&mut rng, 5, 80);
        let a = MetricsReport::compute(&preds_a, &labels, 5).unwrap();
        let b = MetricsReport::compute(&preds_b, &labels, 5).unwrap();
        let deltas = accuracy_difference(&a, &b).unwrap();
        for c in 0..5 {
            let direct = b.per_class_recall[c] - a.per_class_recall[c];
            match deltas.iter().find(|d| d.class == c) {
                Some(d) => assert_eq!(d.delta, direct),
                None => assert_eq!(direct, 0.0, "class {c} omitted despite moving"),
            }
        }
    }

    #[test]
    fn mismatched_reports_are_rejected() {
        let labels3 = vec![0, 1, 2];
        let preds3 = preds_from(labels3.iter().map(|l| one_hot(*l, 3)).collect());
        let report3 = MetricsReport::compute(&preds3, &labels3, 3).unwrap();

        let labels4 = vec![0, 1, 2, 3];
        let preds4 = preds_from(labels4.iter().map(|l| one_hot(*l, 4)).collect());
        let report4 = MetricsReport::compute(&preds4, &labels4, 4).unwrap();
        assert!(accuracy_difference(&report3, &report4).is_err());

        // Same class space, different test set.
        let labels3b = vec![0, 0, 1];
        let preds3b = preds_from(labels3b.iter().map(|l| one_hot(*l, 3)).collect());
        let report3b = MetricsReport::compute(&preds3b, &labels3b, 3).unwrap();
        assert!(accuracy_difference(&report3, &report3b).is_err());
    }

    #[test]
    fn report_csv_has_stable_byte_layout() {
        let labels = vec![0, 1, 1, 2];
        let preds = preds_from(vec![one_hot(0, 3), one_hot(1, 3), one_hot(0, 3), one_hot(2, 3)]);
        let report = MetricsReport::compute(&preds, &labels, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        write_report_csv(&path, &report).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "class,support,precision,recall,top1,top5\n\
             0,1,0.500000,1.000000,,\n\
             1,2,1.000000,0.500000,,\n\
             2,1,1.000000,1.000000,,\n\
             macro,,0.833333,0.833333,,\n\
             overall,4,,,0.750000,1.000000\n"
        );
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let preds = preds_from(vec![one_hot(0, 3)]);
        assert!(topk_accuracy(&[], &[], 1).is_err());
        assert!(topk_accuracy(&preds, &[0], 0).is_err());
        assert!(topk_accuracy(&preds, &[0, 1], 1).is_err());
        assert!(per_class_precision_recall(&preds, &[7], 3).is_err());
    }
}
