//! `eval`: turn a score table into a metrics report, confusion matrix,
//! reference baselines, and optional per-class comparison against another
//! table.

use std::path::{Path, PathBuf};

use clap::Args;
use egoav_core::data::{Split, Task};
use egoav_core::metrics::{
    accuracy_difference, largest_class_baseline, random_baseline, write_report_csv, ClassDelta,
    ConfusionMatrix, MetricsReport,
};
use egoav_core::{Error, Result};

use crate::plots::{confusion_heatmap, delta_bars};
use crate::table::ScoreTable;

/// Evaluate one score table. Writes `report.csv`, `confusion.csv` and
/// `confusion.png`; with `--dataset`, also `baselines.csv`; with
/// `--compare`, also `deltas.csv` and `deltas.png`.
#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Score table to evaluate.
    #[arg(long)]
    pub scores: PathBuf,
    /// Directory for the report files.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Dataset root; enables the chance and largest-class baselines, which
    /// need the train-split label distribution.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Task whose label space the table uses (with --dataset).
    #[arg(long, default_value = "action")]
    pub task: String,
    /// Baseline score table to diff against: reports the per-class recall
    /// changes from that table to this one.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Keep only classes with more than this many test items in the
    /// confusion matrix.
    #[arg(long, default_value_t = 0)]
    pub min_support: usize,
    /// Sampling trials for the chance baseline.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let table = ScoreTable::read_csv(&args.scores)?;
    let preds = table.predictions()?;
    let labels = table.labels();
    let classes = table.num_classes();
    std::fs::create_dir_all(&args.out_dir)?;

    let report = MetricsReport::compute(&preds, &labels, classes)?;
    write_report_csv(&args.out_dir.join("report.csv"), &report)?;
    println!(
        "top-1 {:.4}  top-5 {:.4}  macro precision {:.4}  macro recall {:.4}  ({} items, {} classes)",
        report.top1,
        report.top5,
        report.macro_precision,
        report.macro_recall,
        labels.len(),
        classes
    );

    let mut confusion = ConfusionMatrix::from_predictions(&preds, &labels, classes)?;
    if args.min_support > 0 {
        confusion = confusion.filter_min_support(args.min_support);
    }
    confusion.write_csv(&args.out_dir.join("confusion.csv"))?;
    if !confusion.classes().is_empty() {
        confusion_heatmap(&confusion, &args.out_dir.join("confusion.png"))?;
    }

    if let Some(dataset_root) = &args.dataset {
        let (largest, chance) = compute_baselines(args, dataset_root, &labels, classes)?;
        write_baselines_csv(&args.out_dir.join("baselines.csv"), &largest, &chance)?;
        println!(
            "baselines: largest-class top-1 {:.4}, chance top-1 {:.4} ({} trials)",
            largest.top1, chance.top1, args.trials
        );
    }

    if let Some(compare) = &args.compare {
        let deltas = compute_deltas(compare, &report, classes)?;
        write_deltas_csv(&args.out_dir.join("deltas.csv"), &deltas)?;
        delta_bars(&deltas, &args.out_dir.join("deltas.png"))?;
        let improved = deltas.iter().filter(|d| d.delta > 0.0).count();
        println!(
            "vs {}: {} classes changed ({} improved, {} regressed)",
            compare.display(),
            deltas.len(),
            improved,
            deltas.len() - improved
        );
    }
    Ok(())
}

/// The two reference systems every result is read against, evaluated on the
/// same test labels through the standard metric path.
fn compute_baselines(
    args: &EvalArgs,
    dataset_root: &Path,
    test_labels: &[usize],
    classes: usize,
) -> Result<(MetricsReport, MetricsReport)> {
    let task = Task::parse(&args.task)?;
    let dataset = super::common::Dataset::load(dataset_root)?;
    let partition = dataset.load_partition()?;
    let labels = super::common::TaskLabels::derive(&dataset.records, task)?;
    if labels.num_classes() != classes {
        return Err(Error::invalid(format!(
            "table has {classes} classes but the {} label space has {}; check --task",
            task.as_str(),
            labels.num_classes()
        )));
    }
    let train_records = dataset.split_records(&partition, Split::Train)?;
    let train_labels = labels.dense_labels(&train_records)?;
    let largest = largest_class_baseline(&train_labels, test_labels, classes)?;
    let chance = random_baseline(&train_labels, test_labels, classes, args.trials, args.seed)?;
    Ok((largest, chance))
}

fn compute_deltas(
    compare: &Path,
    report: &MetricsReport,
    classes: usize,
) -> Result<Vec<ClassDelta>> {
    let baseline_table = ScoreTable::read_csv(compare)?;
    if baseline_table.num_classes() != classes {
        return Err(Error::invalid(format!(
            "comparison table has {} classes, this one has {classes}",
            baseline_table.num_classes()
        )));
    }
    let baseline = MetricsReport::compute(
        &baseline_table.predictions()?,
        &baseline_table.labels(),
        classes,
    )?;
    accuracy_difference(&baseline, report)
}

fn write_baselines_csv(
    path: &Path,
    largest: &MetricsReport,
    chance: &MetricsReport,
) -> Result<()> {
    let out = format!(
        "system,top1,top5\nlargest-class,{:.6},{:.6}\nchance,{:.6},{:.6}\n",
        largest.top1, largest.top5, chance.top1, chance.top5
    );
    std::fs::write(path, out)?;
    Ok(())
}

fn write_deltas_csv(path: &Path, deltas: &[ClassDelta]) -> Result<()> {
    let mut out = String::from("class,recall_delta\n");
    for d in deltas {
        out.push_str(&format!("{},{:.6}\n", d.class, d.delta));
    }
    std::fs::write(path, out)?;
    Ok(())
}
