use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};

use super::{AudioClip, AudioError, Result};

/// Stored sample encoding for [`write_wav_as`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    #[default]
    Pcm16,
    Float32,
}

const PCM16_SCALE: f64 = 32_768.0;

fn map_hound(err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(e) if is_short_read(&e) => AudioError::Truncated,
        hound::Error::IoError(e) => AudioError::Io(e),
        hound::Error::UnfinishedSample => AudioError::Truncated,
        hound::Error::FormatError(msg) => AudioError::Malformed(msg.to_string()),
        hound::Error::Unsupported => AudioError::UnsupportedEncoding {
            format: "unknown",
            bits: 0,
        },
        other => AudioError::Malformed(other.to_string()),
    }
}

// hound reports short reads as `Other` with a fixed message rather than `UnexpectedEof`.
fn is_short_read(e: &std::io::Error) -> bool {
    e.kind() == ErrorKind::UnexpectedEof || e.to_string().contains("Failed to read enough bytes")
}

/// Reads a mono PCM16 or float32 WAV file at its native sample rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let reader = WavReader::open(path.as_ref()).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AudioError::MultiChannel(spec.channels));
    }
    let expected = reader.len() as usize;
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (HoundFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (HoundFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (HoundFormat::Int, bits) => {
            return Err(AudioError::UnsupportedEncoding { format: "PCM", bits })
        }
        (HoundFormat::Float, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                format: "IEEE float",
                bits,
            })
        }
    };
    if samples.len() != expected {
        return Err(AudioError::Truncated);
    }
    AudioClip::new(samples, spec.sample_rate)
}

/// Writes `clip` as mono PCM16.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    write_wav_as(clip, path, SampleFormat::Pcm16)
}

pub fn write_wav_as(clip: &AudioClip, path: impl AsRef<Path>, format: SampleFormat) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz(),
        bits_per_sample: match format {
            SampleFormat::Pcm16 => 16,
            SampleFormat::Float32 => 32,
        },
        sample_format: match format {
            SampleFormat::Pcm16 => HoundFormat::Int,
            SampleFormat::Float32 => HoundFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path.as_ref(), spec).map_err(map_hound)?;
    match format {
        SampleFormat::Pcm16 => {
            for &s in clip.samples() {
                let v = (s * PCM16_SCALE).round().clamp(-32_768.0, 32_767.0) as i16;
                writer.write_sample(v).map_err(map_hound)?;
            }
        }
        SampleFormat::Float32 => {
            for &s in clip.samples() {
                writer.write_sample(s as f32).map_err(map_hound)?;
            }
        }
    }
    writer.finalize().map_err(map_hound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, secs: f64, amp: f64) -> AudioClip {
        let n = (secs * 16_000.0) as usize;
        AudioClip::new(
            (0..n)
                .map(|i| amp * (2.0 * PI * freq * i as f64 / 16_000.0).sin())
                .collect(),
            16_000,
        )
        .unwrap()
    }

    #[test]
    fn pcm16_round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sine.wav");
        let clip = sine(440.0, 1.0, 0.9);
        write_wav(&clip, &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.len(), 16_000);
        assert_eq!(back.sample_rate_hz(), 16_000);
        let max_dev = clip
            .samples()
            .iter()
            .zip(back.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_dev <= 2f64.powi(-15), "max deviation {max_dev}");
    }

    #[test]
    fn float32_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sine.wav");
        let clip = sine(123.0, 0.25, 0.5);
        write_wav_as(&clip, &path, SampleFormat::Float32).unwrap();
        let back = read_wav(&path).unwrap();
        for (a, b) in clip.samples().iter().zip(back.samples()) {
            assert_eq!(*b, *a as f32 as f64);
        }
    }

    #[test]
    fn empty_clip_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.wav");
        write_wav(&AudioClip::silence(0, 16_000).unwrap(), &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.sample_rate_hz(), 16_000);
    }

    #[test]
    fn stereo_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: HoundFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path), Err(AudioError::MultiChannel(2))));
    }

    #[test]
    fn other_bit_depths_are_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm24.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 24,
            sample_format: HoundFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(5i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&path),
            Err(AudioError::UnsupportedEncoding { bits: 24, .. })
        ));
    }

    #[test]
    fn truncated_data_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.wav");
        write_wav(&sine(200.0, 0.1, 0.5), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 101]).unwrap();
        assert!(matches!(read_wav(&path), Err(AudioError::Truncated)));

        std::fs::write(&path, &bytes[..20]).unwrap();
        assert!(matches!(read_wav(&path), Err(AudioError::Truncated)));
    }
}
