//! Audio front end: decode, mix down, resample, trim and convert raw audio
//! into the normalized log-power spectrogram the audio network consumes.

mod resample;
mod spectrogram;
mod stft;
mod wav;

pub use resample::resample;
pub use spectrogram::{
    compute_spectrogram, load_spectrogram, log_power_spectrogram, normalize,
    read_spectrogram_matrix, write_spectrogram_matrix, Spectrogram, SpectrogramConfig,
    SpectrogramProfile, LOG_POWER_FLOOR, SPECTROGRAM_MAGIC,
};
pub use stft::{frame_count, hamming_window, stft_power};
pub use wav::{read_wav, write_wav_mono};

use crate::error::{Error, Result};

/// A decoded audio signal: one or more equally long channels of samples in
/// [-1, 1] at a fixed sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    channels: Vec<Vec<f32>>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(channels: Vec<Vec<f32>>, sample_rate: u32) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("audio clip must have at least one channel"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::invalid("audio channels differ in length"));
        }
        Ok(AudioClip {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        AudioClip::new(vec![samples], sample_rate)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> &[f32] {
        &self.channels[index]
    }

    /// The single channel of a mono clip.
    pub fn mono_samples(&self) -> Result<&[f32]> {
        if self.channels.len() != 1 {
            return Err(Error::invalid(format!(
                "expected mono audio, got {} channels",
                self.channels.len()
            )));
        }
        Ok(&self.channels[0])
    }
}

/// Averages all channels into one.
pub fn mixdown(clip: &AudioClip) -> AudioClip {
    if clip.channel_count() == 1 {
        return clip.clone();
    }
    let n = clip.len();
    let inv = 1.0 / clip.channel_count() as f32;
    let mut mixed = vec![0.0f32; n];
    for channel in &clip.channels {
        for (m, s) in mixed.iter_mut().zip(channel) {
            *m += *s;
        }
    }
    for m in &mut mixed {
        *m *= inv;
    }
    AudioClip {
        channels: vec![mixed],
        sample_rate: clip.sample_rate,
    }
}

/// Forces a mono clip to exactly `duration_s` seconds: shorter signals are
/// zero-padded at the end, longer ones keep their first samples.
pub fn fix_duration(clip: &AudioClip, duration_s: f64) -> Result<AudioClip> {
    let samples = clip.mono_samples()?;
    let target = (duration_s * clip.sample_rate as f64).round() as usize;
    let mut out = Vec::with_capacity(target);
    out.extend_from_slice(&samples[..samples.len().min(target)]);
    out.resize(target, 0.0);
    AudioClip::mono(out, clip.sample_rate)
}
