//! RIFF/WAVE decode and encode on top of `hound`.

use std::path::Path;

use hound::{SampleFormat, WavSpec};

use crate::error::{Error, Result};

use super::AudioClip;

const MAX_CHANNELS: usize = 8;

/// Reads a PCM 16-bit or IEEE-float 32-bit WAV file into per-channel samples
/// scaled to [-1, 1].
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let mut reader = hound::WavReader::open(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || channels > MAX_CHANNELS {
        return Err(Error::invalid(format!(
            "{}: unsupported channel count {channels}",
            path.display()
        )));
    }

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
        (format, bits) => {
            return Err(Error::invalid(format!(
                "{}: unsupported sample format {format:?}/{bits}-bit (PCM 16-bit or float 32-bit only)",
                path.display()
            )))
        }
    };

    let frames = interleaved.len() / channels;
    let mut per_channel = vec![Vec::with_capacity(frames); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (c, s) in frame.iter().enumerate() {
            per_channel[c].push(*s);
        }
    }
    AudioClip::new(per_channel, spec.sample_rate)
}

/// Writes a mono 16-bit PCM WAV; samples are clamped to [-1, 1].
pub fn write_wav_mono(path: &Path, samples: &[f32], sample_rate: u32) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    for s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer
            .write_sample(v)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    writer
        .finalize()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mono_wav_round_trips_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tone.wav");
        let samples: Vec<f32> = (0..1000)
            .map(|i| (i as f32 * 0.02).sin() * 0.8)
            .collect();
        write_wav_mono(&path, &samples, 16000).unwrap();
        let clip = read_wav(&path).unwrap();
        assert_eq!(clip.sample_rate(), 16000);
        assert_eq!(clip.channel_count(), 1);
        assert_eq!(clip.len(), 1000);
        for (a, b) in clip.channel(0).iter().zip(&samples) {
            assert!((a - b).abs() < 1.0 / 32000.0);
        }
    }

    #[test]
    fn stereo_float_wav_decodes_both_channels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 48000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for i in 0..10 {
            writer.write_sample(i as f32 / 10.0).unwrap();
            writer.write_sample(-(i as f32) / 10.0).unwrap();
        }
        writer.finalize().unwrap();

        let clip = read_wav(&path).unwrap();
        assert_eq!(clip.channel_count(), 2);
        assert_eq!(clip.len(), 10);
        assert_eq!(clip.channel(0)[3], 0.3);
        assert_eq!(clip.channel(1)[3], -0.3);
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(read_wav(Path::new("/nonexistent/audio.wav")).is_err());
    }
}
