//! Synthetic multimodal corpus with deliberately split label information:
//! the verb class is audible but invisible (a per-verb tone chord plus
//! noise), and the noun class is visible but inaudible (a colored moving
//! disc plus jitter). A classifier therefore needs both modalities to
//! recover the full (verb, noun) action label.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio::{write_wav_mono, AudioClip};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::video::{frame_file_name, write_frame};

use super::annotations::{write_annotations, AnnotationRecord, NOUN_VOCAB, VERB_VOCAB};

/// Shape of the generated corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub verbs: usize,
    pub nouns: usize,
    pub samples_per_action: usize,
    /// Square frame edge in pixels.
    pub frame_size: usize,
    pub frames_per_segment: usize,
    pub sample_rate: u32,
    pub duration_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            verbs: 4,
            nouns: 4,
            samples_per_action: 25,
            frame_size: 64,
            frames_per_segment: 8,
            sample_rate: 16_000,
            duration_s: 4.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.verbs == 0 || self.nouns == 0 || self.samples_per_action == 0 {
            return Err(Error::invalid("corpus dimensions must be positive"));
        }
        if self.verbs > VERB_VOCAB || self.nouns > NOUN_VOCAB {
            return Err(Error::invalid("class counts exceed the vocabularies"));
        }
        if self.frame_size < 32 {
            return Err(Error::invalid("frames smaller than 32 px leave no room for the disc"));
        }
        if self.frames_per_segment < 2 {
            return Err(Error::invalid("need at least two frames for motion"));
        }
        if self.sample_rate == 0 || !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(Error::invalid("audio length must be positive"));
        }
        // The higher chord tone must stay below the Nyquist frequency.
        let (_, high) = verb_tone_frequencies(self.verbs - 1);
        if high >= self.sample_rate as f64 / 2.0 {
            return Err(Error::invalid(format!(
                "verb chord at {high} Hz exceeds Nyquist for rate {}",
                self.sample_rate
            )));
        }
        Ok(())
    }

    pub fn total_segments(&self) -> usize {
        self.verbs * self.nouns * self.samples_per_action
    }
}

/// The two sine frequencies of a verb's chord, in Hz. Both stay below
/// 1 kHz so the chord survives resampling to compact spectrogram rates.
pub fn verb_tone_frequencies(verb: usize) -> (f64, f64) {
    (200.0 + 60.0 * verb as f64, 520.0 + 60.0 * verb as f64)
}

/// The RGB color of a noun's disc, equally spaced hues at full saturation.
pub fn noun_color(noun: usize, nouns: usize) -> [f32; 3] {
    let h = 6.0 * noun as f32 / nouns as f32; // hue sector in [0, 6)
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    match h as usize {
        0 => [1.0, x, 0.0],
        1 => [x, 1.0, 0.0],
        2 => [0.0, 1.0, x],
        3 => [0.0, x, 1.0],
        4 => [x, 0.0, 1.0],
        _ => [1.0, 0.0, x],
    }
}

/// One segment's audio: the verb chord with random phases, mild amplitude
/// jitter, and white noise. Nothing about the noun enters the signal.
pub fn synth_audio(config: &SynthConfig, verb: usize, rng: &mut ChaCha8Rng) -> Result<AudioClip> {
    config.validate()?;
    if verb >= config.verbs {
        return Err(Error::invalid(format!("verb {verb} outside corpus")));
    }
    let n = (config.duration_s * config.sample_rate as f64).round() as usize;
    let (f1, f2) = verb_tone_frequencies(verb);
    let (phase1, phase2) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU));
    let (amp1, amp2) = (rng.gen_range(0.30..0.40), rng.gen_range(0.30..0.40));
    let noise = Normal::new(0.0f64, 0.05).expect("valid sigma");
    let dt = 1.0 / config.sample_rate as f64;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            let s = amp1 * (std::f64::consts::TAU * f1 * t + phase1).sin()
                + amp2 * (std::f64::consts::TAU * f2 * t + phase2).sin()
                + noise.sample(rng);
            s as f32
        })
        .collect();
    AudioClip::mono(samples, config.sample_rate)
}

/// One segment's frames: a disc in the noun's color bouncing across a dark
/// noisy background. Position and velocity are random; nothing about the
/// verb enters the pixels.
pub fn synth_frames(
    config: &SynthConfig,
    noun: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Tensor<f32>>> {
    config.validate()?;
    if noun >= config.nouns {
        return Err(Error::invalid(format!("noun {noun} outside corpus")));
    }
    let size = config.frame_size;
    let radius = (size / 7).max(4) as f64;
    let color = noun_color(noun, config.nouns);

    let mut x = rng.gen_range(radius..size as f64 - radius);
    let mut y = rng.gen_range(radius..size as f64 - radius);
    // Velocity magnitude at least one pixel per frame so the flow stream
    // always sees motion; sign chosen independently per axis.
    let mut vx = rng.gen_range(1.0..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let mut vy = rng.gen_range(1.0..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };

    let mut frames = Vec::with_capacity(config.frames_per_segment);
    for _ in 0..config.frames_per_segment {
        let mut values = vec![0.0f32; 3 * size * size];
        for py in 0..size {
            for px in 0..size {
                let inside = {
                    let dx = px as f64 + 0.5 - x;
                    let dy = py as f64 + 0.5 - y;
                    dx * dx + dy * dy <= radius * radius
                };
                for (c, base) in color.iter().enumerate() {
                    let value = if inside {
                        (base + rng.gen_range(-0.08f32..0.08)).clamp(0.0, 1.0)
                    } else {
                        rng.gen_range(0.0f32..0.06)
                    };
                    values[(c * size + py) * size + px] = value;
                }
            }
        }
        frames.push(Tensor::from_vec(vec![3, size, size], values)?);

        x += vx;
        y += vy;
        if x < radius || x > size as f64 - radius {
            vx = -vx;
            x += 2.0 * vx;
        }
        if y < radius || y > size as f64 - radius {
            vy = -vy;
            y += 2.0 * vy;
        }
    }
    Ok(frames)
}

/// Paths of one generated segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentPaths {
    pub wav: PathBuf,
    pub frame_dir: PathBuf,
}

impl SegmentPaths {
    /// Layout convention under a dataset root.
    pub fn under(root: &Path, segment_id: &str) -> Self {
        SegmentPaths {
            wav: root.join("audio").join(format!("{segment_id}.wav")),
            frame_dir: root.join("frames").join(segment_id),
        }
    }
}

/// Seed for one segment's generator stream, decorrelated across segments so
/// generation order (or future parallelism) cannot change the content.
fn segment_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Generates the full corpus under `root`: WAV audio and frame files per
/// segment plus `annotations.csv`. Every action pair receives exactly
/// `samples_per_action` segments. Returns the records in generation order.
pub fn generate(config: &SynthConfig, root: &Path, seed: u64) -> Result<Vec<AnnotationRecord>> {
    config.validate()?;
    fs::create_dir_all(root.join("audio"))?;
    fs::create_dir_all(root.join("frames"))?;

    let mut records = Vec::with_capacity(config.total_segments());
    let mut index = 0usize;
    for verb in 0..config.verbs {
        for noun in 0..config.nouns {
            for _ in 0..config.samples_per_action {
                let segment_id = format!("seg_{index:05}");
                let mut rng = ChaCha8Rng::seed_from_u64(segment_seed(seed, index));

                let paths = SegmentPaths::under(root, &segment_id);
                let clip = synth_audio(config, verb, &mut rng)?;
                write_wav_mono(&paths.wav, clip.mono_samples()?, config.sample_rate)?;

                fs::create_dir_all(&paths.frame_dir)?;
                for (f, frame) in synth_frames(config, noun, &mut rng)?.iter().enumerate() {
                    write_frame(&paths.frame_dir.join(frame_file_name(f)), frame)?;
                }

                let participant = 1 + (index % 31) as u32;
                let start_s = rng.gen_range(0.0..60.0f64);
                let duration = rng.gen_range(2.0..6.0f64);
                records.push(AnnotationRecord {
                    segment_id,
                    participant_id: format!("P{participant:02}"),
                    video_id: format!("P{participant:02}_{:02}", index % 4 + 1),
                    start_s: (start_s * 10.0).round() / 10.0,
                    stop_s: ((start_s + duration) * 10.0).round() / 10.0,
                    verb_class: verb,
                    noun_class: noun,
                });
                index += 1;
            }
        }
    }
    write_annotations(&root.join("annotations.csv"), &records)?;
    Ok(records)
}
