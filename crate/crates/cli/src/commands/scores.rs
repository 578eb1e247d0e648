//! `scores`: run trained stream checkpoints over one split and write a score
//! table per stream.

use clap::Args;
use egoav_core::data::Split;
use egoav_core::fusion::StreamId;
use egoav_core::nets::{DilatedNet, TsnModel, VisualBackbone, DEFAULT_TEST_SAMPLES};
use egoav_core::tensor::load_params;
use egoav_core::{Error, Result};

use super::common::{
    checkpoint_path, load_audio_examples, load_visual_examples, scores_path, stream_modality,
    AudioArch, Dataset, TaskLabels, VisualArch,
};
use crate::config::ConfigFlags;
use crate::table::{ScoreRow, ScoreTable};

/// Score a split with the trained checkpoints of the enabled streams.
/// Writes `{out}/{stream}_{task}_{split}.csv`, sorted by segment id.
#[derive(Args, Debug)]
pub struct ScoresArgs {
    #[command(flatten)]
    pub config: ConfigFlags,
    /// Split to score: train, val, or test.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Audio network size the checkpoint was trained with.
    #[arg(long, default_value = "compact")]
    pub audio_arch: String,
    /// Visual backbone size the checkpoint was trained with.
    #[arg(long, default_value = "default")]
    pub visual_arch: String,
    /// Spectrogram geometry the audio stream was cached with.
    #[arg(long, default_value = "desk")]
    pub profile: String,
    /// Temporal segments the visual checkpoints were trained with.
    #[arg(long, default_value_t = 3)]
    pub segments: usize,
    /// Evenly spaced frames scored per clip for the visual streams.
    #[arg(long, default_value_t = DEFAULT_TEST_SAMPLES)]
    pub test_samples: usize,
}

pub fn run(args: &ScoresArgs) -> Result<()> {
    let config = args.config.resolve()?;
    let split = Split::parse(&args.split)?;
    let dataset = Dataset::load(&config.dataset_root)?;
    let partition = dataset.load_partition()?;
    let labels = TaskLabels::derive(&dataset.records, config.task)?;
    let records = dataset.split_records(&partition, split)?;
    std::fs::create_dir_all(&config.out_dir)?;

    for &stream in &config.streams {
        let table = score_stream(args, &config.out_dir, &dataset, &labels, &records, stream, split)?;
        let path = scores_path(&config.out_dir, stream, config.task, split);
        table.write_csv(&path)?;
        println!(
            "scored {} {} segments with {} -> {}",
            table.rows().len(),
            split.as_str(),
            stream.as_str(),
            path.display()
        );
    }
    Ok(())
}

fn score_stream(
    args: &ScoresArgs,
    out_dir: &std::path::Path,
    dataset: &Dataset,
    labels: &TaskLabels,
    records: &[&egoav_core::data::AnnotationRecord],
    stream: StreamId,
    _split: Split,
) -> Result<ScoreTable> {
    let config = args.config.resolve()?;
    let checkpoint = checkpoint_path(out_dir, stream, config.task);
    if !checkpoint.exists() {
        return Err(Error::invalid(format!(
            "{}: no checkpoint (run the train command first)",
            checkpoint.display()
        )));
    }
    let params = load_params(&checkpoint)?;

    let mut table;
    match stream_modality(stream) {
        None => {
            let profile = super::common::spectrogram_profile(&args.profile)?;
            let shape = (profile.freq_bins(), profile.time_frames());
            let net_config =
                AudioArch::parse(&args.audio_arch)?.config(shape, labels.num_classes())?;
            let net = DilatedNet::from_params(net_config, params)?;
            let examples = load_audio_examples(dataset, records, labels, &profile)?;
            table = ScoreTable::new(
                Some(stream),
                labels.num_classes(),
                net.config().dense_dims[net.config().dense_dims.len() - 1],
            )?;
            for (record, (tensor, label)) in records.iter().zip(&examples) {
                let scores = net.forward_scores(tensor)?;
                table.push(ScoreRow {
                    segment_id: record.segment_id.clone(),
                    label: *label,
                    probs: scores.probs,
                    feats: scores.penultimate,
                })?;
            }
        }
        Some(modality) => {
            let net_config =
                VisualArch::parse(&args.visual_arch)?.config(modality, labels.num_classes())?;
            let penultimate = net_config.penultimate_dim;
            let backbone = VisualBackbone::from_params(net_config, params)?;
            let model = TsnModel::new(backbone, args.segments)?;
            let examples = load_visual_examples(dataset, records, labels, modality)?;
            table = ScoreTable::new(Some(stream), labels.num_classes(), penultimate)?;
            for (seq, label) in &examples {
                let scores = model.score_sequence(seq, args.test_samples)?;
                table.push(ScoreRow {
                    segment_id: seq.segment_id().to_string(),
                    label: *label,
                    probs: scores.probs,
                    feats: scores.penultimate,
                })?;
            }
        }
    }
    table.sort_by_segment();
    Ok(table)
}
