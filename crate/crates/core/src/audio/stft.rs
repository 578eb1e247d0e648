//! Short-time Fourier analysis: framing, Hamming windowing, and one-sided
//! power spectra.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Number of complete analysis frames for a signal of `n` samples under
/// window length `w` and hop `h`: floor((n - w) / h) + 1. Zero when the
/// window does not fit.
pub fn frame_count(n: usize, w: usize, h: usize) -> usize {
    if n < w || w == 0 || h == 0 {
        0
    } else {
        (n - w) / h + 1
    }
}

/// Symmetric Hamming window w[i] = 0.54 - 0.46 cos(2*pi*i / (L-1)).
pub fn hamming_window(len: usize) -> Vec<f32> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|i| {
            let phase = 2.0 * std::f64::consts::PI * i as f64 / (len - 1) as f64;
            (0.54 - 0.46 * phase.cos()) as f32
        })
        .collect()
}

/// One-sided STFT power: |X(f, t)|^2 for frequency bins 0..=fft_size/2.
///
/// Frames start at multiples of `hop`; each is multiplied by `window` and
/// zero-padded to `fft_size`. Returns (freq_bins, time_frames, values) with
/// values in freq-major order, i.e. index = f * time_frames + t.
pub fn stft_power(
    signal: &[f32],
    window: &[f32],
    hop: usize,
    fft_size: usize,
) -> Result<(usize, usize, Vec<f32>)> {
    let w = window.len();
    if w == 0 || hop == 0 {
        return Err(Error::invalid("window and hop must be non-empty"));
    }
    if fft_size < w {
        return Err(Error::invalid(format!(
            "fft size {fft_size} shorter than window length {w}"
        )));
    }
    if signal.len() < w {
        return Err(Error::invalid(format!(
            "signal of {} samples shorter than analysis window of {w}",
            signal.len()
        )));
    }
    let frames = frame_count(signal.len(), w, hop);
    let bins = fft_size / 2 + 1;

    let mut planner = FftPlanner::<f32>::new();
    let fft = planner.plan_fft_forward(fft_size);
    let mut buffer = vec![Complex::new(0.0f32, 0.0); fft_size];
    let mut power = vec![0.0f32; bins * frames];

    for t in 0..frames {
        let start = t * hop;
        for (slot, (s, win)) in buffer
            .iter_mut()
            .zip(signal[start..start + w].iter().zip(window))
        {
            *slot = Complex::new(s * win, 0.0);
        }
        for slot in buffer.iter_mut().skip(w) {
            *slot = Complex::new(0.0, 0.0);
        }
        fft.process(&mut buffer);
        for (f, value) in buffer.iter().take(bins).enumerate() {
            power[f * frames + t] = value.norm_sqr();
        }
    }
    Ok((bins, frames, power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn frame_count_matches_paper_shapes() {
        assert_eq!(frame_count(64000, 660, 256), 248);
        assert_eq!(frame_count(64000, 480, 240), 265);
        assert_eq!(frame_count(8000, 128, 64), 124);
    }

    #[test]
    fn hamming_is_symmetric_with_familiar_endpoints() {
        let w = hamming_window(660);
        assert_eq!(w.len(), 660);
        for i in 0..330 {
            assert_eq!(w[i], w[659 - i]);
        }
        assert!((w[0] - 0.08).abs() < 1e-6);
        let mid = w[330].max(w[329]);
        assert!((mid - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_padded_fft_keeps_bin_math() {
        // 400 Hz tone at 16 kHz, window 660, fft 660: bin = 400*660/16000 = 16.5,
        // so the peak must land on bin 16 or 17.
        let signal: Vec<f32> = (0..1320)
            .map(|i| (2.0 * std::f32::consts::PI * 400.0 * i as f32 / 16000.0).sin())
            .collect();
        let window = hamming_window(660);
        let (bins, frames, power) = stft_power(&signal, &window, 256, 660).unwrap();
        assert_eq!(bins, 331);
        assert_eq!(frames, 3);
        for t in 0..frames {
            let peak = (0..bins)
                .max_by(|a, b| power[a * frames + t].partial_cmp(&power[b * frames + t]).unwrap())
                .unwrap();
            assert!(peak == 16 || peak == 17, "frame {t} peaked at bin {peak}");
        }
    }

    #[test]
    fn rectangular_stft_satisfies_parseval() {
        // With a rectangular window and one-sided bins, doubling the interior
        // bins reconstructs the full-spectrum energy, which equals fft_size
        // times the frame energy.
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f32 / (1u64 << 53) as f32 - 0.5
        };
        let signal: Vec<f32> = (0..512).map(|_| next()).collect();
        let window = vec![1.0f32; 128];
        let fft_size = 128;
        let (bins, frames, power) = stft_power(&signal, &window, 128, fft_size).unwrap();
        assert_eq!(frames, 4);

        for t in 0..frames {
            let mut spectral = 0.0f64;
            for f in 0..bins {
                let p = power[f * frames + t] as f64;
                let double = f != 0 && f != bins - 1;
                spectral += if double { 2.0 * p } else { p };
            }
            spectral /= fft_size as f64;
            let frame_energy: f64 = signal[t * 128..(t + 1) * 128]
                .iter()
                .map(|s| (*s as f64).powi(2))
                .sum();
            let rel = (spectral - frame_energy).abs() / frame_energy;
            assert!(rel < 0.01, "frame {t}: spectral {spectral} vs {frame_energy}");
        }
    }

    #[test]
    fn window_longer_than_signal_is_rejected() {
        let window = hamming_window(16);
        assert!(stft_power(&[0.0; 8], &window, 4, 16).is_err());
    }

    proptest! {
        /// The closed-form frame count agrees with literally sliding a window.
        #[test]
        fn frame_count_matches_sliding_oracle(
            n in 0usize..2000,
            w in 1usize..300,
            h in 1usize..300,
        ) {
            let mut count = 0usize;
            let mut start = 0usize;
            while start + w <= n {
                count += 1;
                start += h;
            }
            prop_assert_eq!(frame_count(n, w, h), count);
        }
    }
}
