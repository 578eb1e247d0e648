//! `spectrogram`: precompute and cache the normalized log-power spectrogram
//! of every audio clip in a dataset.

use std::path::PathBuf;

use clap::Args;
use egoav_core::audio::{compute_spectrogram, read_wav};
use egoav_core::{Error, Result};

use super::common::spectrogram_profile;

/// Compute spectrograms for every `audio/*.wav` and store them as binary
/// matrices under `spectrograms/`. Recomputing is deterministic, so a rerun
/// rewrites identical files.
#[derive(Args, Debug)]
pub struct SpectrogramArgs {
    /// Dataset directory holding `audio/`.
    #[arg(long)]
    pub root: PathBuf,
    /// Spectrogram geometry: input-shape, stated, or desk.
    #[arg(long, default_value = "desk")]
    pub profile: String,
}

pub fn run(args: &SpectrogramArgs) -> Result<usize> {
    let config = spectrogram_profile(&args.profile)?;
    let audio_dir = args.root.join("audio");
    if !audio_dir.is_dir() {
        return Err(Error::invalid(format!(
            "{}: not a directory",
            audio_dir.display()
        )));
    }
    let mut wavs: Vec<PathBuf> = std::fs::read_dir(&audio_dir)?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|p| p.extension().is_some_and(|e| e == "wav"))
        .collect();
    wavs.sort();
    if wavs.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no .wav files",
            audio_dir.display()
        )));
    }

    let out_dir = args.root.join("spectrograms");
    std::fs::create_dir_all(&out_dir)?;
    let mut shape = (0, 0);
    for wav in &wavs {
        let clip = read_wav(wav)?;
        let spec = compute_spectrogram(&clip, &config)?;
        shape = spec.shape();
        let stem = wav
            .file_stem()
            .ok_or_else(|| Error::invalid(format!("{}: no file stem", wav.display())))?;
        let mut out = out_dir.join(stem);
        out.set_extension("spg1");
        spec.save(&out)?;
    }
    println!(
        "cached {} spectrograms ({}x{}) under {}",
        wavs.len(),
        shape.0,
        shape.1,
        out_dir.display()
    );
    Ok(wavs.len())
}
