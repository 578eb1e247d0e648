//! Reference baselines every trained system is read against: the constant
//! largest-class predictor and the chance level of a multinomial guesser
//! fitted to the training distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{MetricsReport, Prediction};

fn class_counts(labels: &[usize], num_classes: usize) -> Result<Vec<usize>> {
    if labels.is_empty() {
        return Err(Error::invalid("baselines need a non-empty label list"));
    }
    let mut counts = vec![0usize; num_classes];
    for &label in labels {
        if label >= num_classes {
            return Err(Error::invalid(format!(
                "label {label} outside class space of size {num_classes}"
            )));
        }
        counts[label] += 1;
    }
    Ok(counts)
}

/// Turns non-negative weights into a simplex score vector, normalizing in
/// f64 so the result passes the prediction validity check.
fn normalized_scores(weights: &[f64]) -> Vec<f32> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| (w / total) as f32).collect()
}

/// Constant predictor scoring every class by its training frequency: top-1
/// always names the most frequent train class, top-5 the five most
/// frequent, with frequency ties resolved toward the lower class index by
/// the shared ranking rule. Evaluated through the standard metric path.
pub fn largest_class_baseline(
    train_labels: &[usize],
    test_labels: &[usize],
    num_classes: usize,
) -> Result<MetricsReport> {
    let counts = class_counts(train_labels, num_classes)?;
    let scores = normalized_scores(&counts.iter().map(|c| *c as f64).collect::<Vec<_>>());
    let preds: Vec<Prediction> = (0..test_labels.len())
        .map(|i| Prediction::new(format!("test_{i}"), scores.clone()))
        .collect::<Result<_>>()?;
    MetricsReport::compute(&preds, test_labels, num_classes)
}

/// Chance level: each trial guesses a ranking per test item by sampling
/// classes without replacement from the train-frequency multinomial, the
/// trial is scored through the standard metric path, and all report fields
/// are averaged over trials. Deterministic for a given seed.
pub fn random_baseline(
    train_labels: &[usize],
    test_labels: &[usize],
    num_classes: usize,
    trials: usize,
    seed: u64,
) -> Result<MetricsReport> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if test_labels.is_empty() {
        return Err(Error::invalid("baselines need a non-empty test set"));
    }
    let counts = class_counts(train_labels, num_classes)?;
    let positive = counts.iter().filter(|c| **c > 0).count();
    let depth = positive.min(5);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accumulator: Option<MetricsReport> = None;
    for _ in 0..trials {
        let preds: Vec<Prediction> = (0..test_labels.len())
            .map(|i| {
                let ranking = sample_ranking(&counts, depth, &mut rng);
                // Rank weights 5,4,3,... over the drawn classes give a
                // strict score ordering; everything undrawn scores zero.
                let mut weights = vec![0.0f64; num_classes];
                for (rank, &class) in ranking.iter().enumerate() {
                    weights[class] = (depth - rank) as f64;
                }
                Prediction::new(format!("test_{i}"), normalized_scores(&weights))
            })
            .collect::<Result<_>>()?;
        let report = MetricsReport::compute(&preds, test_labels, num_classes)?;
        accumulator = Some(match accumulator {
            None => report,
            Some(total) => add_reports(total, &report)?,
        });
    }
    let total = accumulator.expect("at least one trial");
    Ok(scale_report(total, 1.0 / trials as f64))
}

/// Draws `depth` distinct classes, each draw proportional to the remaining
/// classes' counts. The draw order is the guessed ranking.
fn sample_ranking(counts: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut remaining: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let mut total: f64 = remaining.iter().sum();
    let mut ranking = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mut u = rng.gen_range(0.0..total);
        let mut chosen = None;
        for (class, weight) in remaining.iter().enumerate() {
            if *weight <= 0.0 {
                continue;
            }
            if u < *weight {
                chosen = Some(class);
                break;
            }
            u -= *weight;
        }
        // Float roundoff can push u past the last positive weight; fall
        // back to that weight rather than skipping a draw.
        let class = chosen.unwrap_or_else(|| {
            remaining.iter().rposition(|w| *w > 0.0).expect("positive weight")
        });
        ranking.push(class);
        total -= remaining[class];
        remaining[class] = 0.0;
    }
    ranking
}

fn add_reports(mut a: MetricsReport, b: &MetricsReport) -> Result<MetricsReport> {
    if a.support != b.support {
        return Err(Error::invalid("trial reports disagree on the test set"));
    }
    a.top1 += b.top1;
    a.top5 += b.top5;
    a.macro_precision += b.macro_precision;
    a.macro_recall += b.macro_recall;
    for (x, y) in a.per_class_precision.iter_mut().zip(&b.per_class_precision) {
        *x += y;
    }
    for (x, y) in a.per_class_recall.iter_mut().zip(&b.per_class_recall) {
        *x += y;
    }
    Ok(a)
}

fn scale_report(mut report: MetricsReport, factor: f64) -> MetricsReport {
    report.top1 *= factor;
    report.top5 *= factor;
    report.macro_precision *= factor;
    report.macro_recall *= factor;
    for x in &mut report.per_class_precision {
        *x *= factor;
    }
    for x in &mut report.per_class_recall {
        *x *= factor;
    }
    report
}
