//! `synth`: generate the synthetic audio-visual corpus.

use std::path::PathBuf;

use clap::Args;
use egoav_core::data::{generate, SynthConfig};
use egoav_core::Result;

/// Generate a synthetic corpus whose verbs are audible (tone chords) and
/// whose nouns are visible (colored moving discs), with annotations.
#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory to create the dataset under.
    #[arg(long)]
    pub root: PathBuf,
    /// Number of verb classes.
    #[arg(long, default_value_t = 4)]
    pub verbs: usize,
    /// Number of noun classes.
    #[arg(long, default_value_t = 4)]
    pub nouns: usize,
    /// Segments generated per (verb, noun) pair.
    #[arg(long, default_value_t = 25)]
    pub samples_per_action: usize,
    /// Square frame edge in pixels.
    #[arg(long, default_value_t = 64)]
    pub frame_size: usize,
    /// Frames stored per segment.
    #[arg(long, default_value_t = 8)]
    pub frames_per_segment: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let config = SynthConfig {
        verbs: args.verbs,
        nouns: args.nouns,
        samples_per_action: args.samples_per_action,
        frame_size: args.frame_size,
        frames_per_segment: args.frames_per_segment,
        ..SynthConfig::default()
    };
    let records = generate(&config, &args.root, args.seed)?;
    println!(
        "wrote {} segments ({} verbs x {} nouns x {} samples) under {}",
        records.len(),
        args.verbs,
        args.nouns,
        args.samples_per_action,
        args.root.display()
    );
    Ok(())
}
