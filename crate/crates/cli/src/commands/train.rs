//! `train`: fit one network per enabled stream on the train split, early
//! stopping on val, and checkpoint the best parameters.

use clap::Args;
use egoav_core::data::Split;
use egoav_core::fusion::{StreamId, STREAM_ORDER};
use egoav_core::nets::{
    train_stream, write_history_csv, SpectrogramBatcher, TrainOutcome, TsnBatcher,
};
use egoav_core::tensor::save_params;
use egoav_core::{Error, Result};

use super::common::{
    checkpoint_path, history_path, load_audio_examples, load_visual_examples, stream_modality,
    AudioArch, Dataset, TaskLabels, VisualArch,
};
use crate::config::{ConfigFlags, FusionMethod, RunConfig};

/// Train the enabled streams for one task. Writes
/// `{out}/{stream}_{task}.ckpt` and `{out}/{stream}_{task}_history.csv`.
#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigFlags,
    /// Audio network size: tiny, compact, or reference.
    #[arg(long, default_value = "compact")]
    pub audio_arch: String,
    /// Visual backbone size: small or default.
    #[arg(long, default_value = "default")]
    pub visual_arch: String,
    /// Spectrogram geometry the audio stream was cached with.
    #[arg(long, default_value = "desk")]
    pub profile: String,
    /// Temporal segments per clip for the visual streams.
    #[arg(long, default_value_t = 3)]
    pub segments: usize,
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let config = args.config.resolve()?;
    if config.fusion != FusionMethod::None {
        return Err(Error::invalid(
            "train fits single streams; run the fuse command for fusion",
        ));
    }
    let dataset = Dataset::load(&config.dataset_root)?;
    let partition = dataset.load_partition()?;
    let labels = TaskLabels::derive(&dataset.records, config.task)?;
    let train_records = dataset.split_records(&partition, Split::Train)?;
    let val_records = dataset.split_records(&partition, Split::Val)?;
    std::fs::create_dir_all(&config.out_dir)?;

    for &stream in &config.streams {
        let outcome = train_one(args, &config, &dataset, &labels, &train_records, &val_records, stream)?;
        println!(
            "{} {}: best val top-1 {:.4} at epoch {} ({} epochs run)",
            stream.as_str(),
            config.task.as_str(),
            outcome.best_val_top1,
            outcome.best_epoch,
            outcome.history.len()
        );
    }
    Ok(())
}

/// Offsets the run seed per stream so streams do not share shuffles or
/// initializations while staying reproducible from one base seed.
pub fn stream_seed(base: u64, stream: StreamId) -> u64 {
    let offset = STREAM_ORDER
        .iter()
        .position(|s| *s == stream)
        .expect("stream is one of the fixed three") as u64;
    base.wrapping_mul(3).wrapping_add(offset)
}

fn train_one(
    args: &TrainArgs,
    config: &RunConfig,
    dataset: &Dataset,
    labels: &TaskLabels,
    train_records: &[&egoav_core::data::AnnotationRecord],
    val_records: &[&egoav_core::data::AnnotationRecord],
    stream: StreamId,
) -> Result<TrainOutcome> {
    let mut train_config = config.train_config();
    train_config.seed = stream_seed(config.seed, stream);
    let train_items: Vec<usize> = (0..train_records.len()).collect();
    let val_items: Vec<usize> =
        (train_records.len()..train_records.len() + val_records.len()).collect();
    let all_records: Vec<&egoav_core::data::AnnotationRecord> = train_records
        .iter()
        .chain(val_records.iter())
        .copied()
        .collect();

    let (outcome, params) = match stream_modality(stream) {
        None => {
            let profile = super::common::spectrogram_profile(&args.profile)?;
            let shape = (profile.freq_bins(), profile.time_frames());
            let net = AudioArch::parse(&args.audio_arch)?.config(shape, labels.num_classes())?;
            let examples = load_audio_examples(dataset, &all_records, labels, &profile)?;
            let mut params = net.init_params(train_config.seed)?;
            let batcher = SpectrogramBatcher {
                config: &net,
                examples: &examples,
            };
            let outcome =
                train_stream(&mut params, &batcher, &train_items, &val_items, &train_config)?;
            (outcome, params)
        }
        Some(modality) => {
            let net = VisualArch::parse(&args.visual_arch)?.config(modality, labels.num_classes())?;
            let examples = load_visual_examples(dataset, &all_records, labels, modality)?;
            let mut params = net.init_params(train_config.seed)?;
            let batcher = TsnBatcher {
                config: &net,
                segments: args.segments,
                examples: &examples,
                augment: true,
            };
            let outcome =
                train_stream(&mut params, &batcher, &train_items, &val_items, &train_config)?;
            (outcome, params)
        }
    };

    save_params(&params, &checkpoint_path(&config.out_dir, stream, config.task))?;
    write_history_csv(
        &history_path(&config.out_dir, stream, config.task),
        &outcome.history,
    )?;
    Ok(outcome)
}
