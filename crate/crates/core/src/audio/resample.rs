//! Sample-rate conversion by windowed-sinc interpolation.
//!
//! For each output instant the input is convolved with a Hann-windowed sinc
//! whose cutoff is the lower of the two Nyquist frequencies, which gives
//! band-limited interpolation when upsampling and anti-aliasing when
//! downsampling. Taps are renormalized per output sample so a constant signal
//! stays exactly constant, including at the edges.

use crate::error::{Error, Result};

use super::AudioClip;

/// Half-width of the sinc kernel in zero crossings; the filter support in
/// input samples grows by 1/cutoff when downsampling.
const KERNEL_ZERO_CROSSINGS: usize = 32;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Converts a mono clip to `target_rate`. The output holds
/// floor(input_len * target/source) samples.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::invalid("target sample rate must be positive"));
    }
    let samples = clip.mono_samples()?;
    if clip.sample_rate() == target_rate {
        return Ok(clip.clone());
    }
    let ratio = target_rate as f64 / clip.sample_rate() as f64;
    let out_len = (samples.len() as f64 * ratio).floor() as usize;
    if out_len == 0 {
        return Err(Error::invalid(format!(
            "resampling {} samples from {} Hz to {target_rate} Hz yields an empty signal",
            samples.len(),
            clip.sample_rate()
        )));
    }

    let cutoff = ratio.min(1.0);
    let half_width = (KERNEL_ZERO_CROSSINGS as f64 / cutoff).ceil() as isize;
    let n = samples.len() as isize;

    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        // Centre of the output sample in input coordinates.
        let t = j as f64 / ratio;
        let centre = t.floor() as isize;
        let mut acc = 0.0f64;
        let mut weight = 0.0f64;
        for i in (centre - half_width).max(0)..=(centre + half_width).min(n - 1) {
            let d = t - i as f64;
            let u = d / half_width as f64;
            if u.abs() > 1.0 {
                continue;
            }
            let hann = 0.5 * (1.0 + (std::f64::consts::PI * u).cos());
            let w = cutoff * sinc(cutoff * d) * hann;
            acc += w * samples[i as usize] as f64;
            weight += w;
        }
        // Dividing by the tap sum normalizes the local DC gain to exactly 1,
        // so constants survive and edge samples are not attenuated.
        out.push(if weight.abs() > 1e-12 {
            (acc / weight) as f32
        } else {
            0.0
        });
    }
    AudioClip::mono(out, target_rate)
}

#[cfg(test)]
mod tests {
    use super::super::{hamming_window, stft_power};
    use super::*;

    #[test]
    fn halving_the_rate_halves_the_length() {
        let clip = AudioClip::mono(vec![0.0; 64000], 32000).unwrap();
        let out = resample(&clip, 16000).unwrap();
        assert_eq!(out.sample_rate(), 16000);
        assert_eq!(out.len(), 32000);
    }

    #[test]
    fn constant_signal_stays_constant() {
        let clip = AudioClip::mono(vec![0.6; 4410], 44100).unwrap();
        let out = resample(&clip, 16000).unwrap();
        assert_eq!(out.len(), 1600);
        for s in out.channel(0) {
            assert!((s - 0.6).abs() < 1e-4, "sample {s}");
        }
    }

    #[test]
    fn identical_rates_return_clip_unchanged() {
        let clip = AudioClip::mono(vec![0.1, -0.2, 0.3], 16000).unwrap();
        assert_eq!(resample(&clip, 16000).unwrap(), clip);
    }

    #[test]
    fn sine_peak_survives_downsampling() {
        // 1 kHz sine, 0.1 s at 48 kHz: exactly 100 cycles, so the peak falls
        // on a clean DFT bin after resampling to 16 kHz.
        let source: Vec<f32> = (0..4800)
            .map(|i| (2.0 * std::f32::consts::PI * 1000.0 * i as f32 / 48000.0).sin())
            .collect();
        let clip = AudioClip::mono(source, 48000).unwrap();
        let out = resample(&clip, 16000).unwrap();
        assert_eq!(out.len(), 1600);

        // Single rectangular frame over the whole signal; bin spacing is
        // 16000/1600 = 10 Hz, so 1 kHz lands on bin 100.
        let window = vec![1.0f32; 1600];
        let (bins, frames, power) = stft_power(out.channel(0), &window, 1600, 1600).unwrap();
        assert_eq!((bins, frames), (801, 1));
        let peak = power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(
            (peak as isize - 100).unsigned_abs() <= 1,
            "peak at bin {peak}, expected 100"
        );
    }

    #[test]
    fn upsampled_sine_keeps_its_frequency() {
        // 500 Hz sine, 0.2 s at 8 kHz, upsampled to 16 kHz: bin spacing
        // 16000/3200 = 5 Hz, expected peak at bin 100.
        let source: Vec<f32> = (0..1600)
            .map(|i| (2.0 * std::f32::consts::PI * 500.0 * i as f32 / 8000.0).sin())
            .collect();
        let clip = AudioClip::mono(source, 8000).unwrap();
        let out = resample(&clip, 16000).unwrap();
        assert_eq!(out.len(), 3200);
        let window = hamming_window(3200);
        let (_, _, power) = stft_power(out.channel(0), &window, 3200, 3200).unwrap();
        let peak = power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(
            (peak as isize - 100).unsigned_abs() <= 1,
            "peak at bin {peak}, expected 100"
        );
    }

    #[test]
    fn empty_output_is_rejected() {
        let clip = AudioClip::mono(vec![0.0; 2], 48000).unwrap();
        assert!(resample(&clip, 100).is_err());
    }
}
