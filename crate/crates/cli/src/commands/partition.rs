//! `partition`: assign every annotated segment to train, val, or test.

use std::path::PathBuf;

use clap::Args;
use egoav_core::data::{homemade_partition, unseen_participant_partition, Scheme, Split};
use egoav_core::Result;

use super::common::Dataset;

/// Write a `partition.csv` next to the annotations, using either the
/// category-aware random scheme or the held-out-participant scheme.
#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// Dataset directory holding `annotations.csv`.
    #[arg(long)]
    pub root: PathBuf,
    /// Split scheme: homemade or unseen-participant.
    #[arg(long, default_value = "homemade")]
    pub scheme: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &PartitionArgs) -> Result<()> {
    let scheme = Scheme::parse(&args.scheme)?;
    let dataset = Dataset::load(&args.root)?;
    let spec = match scheme {
        Scheme::Homemade => homemade_partition(&dataset.records, args.seed)?,
        Scheme::UnseenParticipant => unseen_participant_partition(&dataset.records, args.seed)?,
    };
    spec.write_csv(&dataset.partition_path())?;
    println!(
        "partitioned {} segments: {} train / {} val / {} test ({}, seed {})",
        spec.len(),
        spec.count(Split::Train),
        spec.count(Split::Val),
        spec.count(Split::Test),
        scheme.as_str(),
        args.seed
    );
    Ok(())
}
