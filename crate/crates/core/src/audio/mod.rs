//! Mono audio container, WAV I/O, framing and spectral measurement.
//!
//! Samples are held as `f64` amplitudes with a nominal range of `[-1, 1]`.
//! Integer PCM is scaled by `2^(bits - 1)` on ingest.

mod fir;
mod grid;
mod resample;
mod spectrum;
mod wav;

pub use fir::{fft_convolve, kaiser_beta, kaiser_length, kaiser_window, windowed_sinc_lowpass};
pub use grid::FrameGrid;
pub use resample::{resample, to_canonical_rate};
pub use spectrum::{band_energy, band_energy_of, power_spectrum};
pub use wav::{read_wav, write_wav, write_wav_as, SampleFormat};

use thiserror::Error;

/// Sample rate every corpus clip is normalized to on ingest.
pub const CANONICAL_SAMPLE_RATE_HZ: u32 = 16_000;

/// Lowest sample rate accepted by [`AudioClip::new`].
pub const MIN_SAMPLE_RATE_HZ: u32 = 8_000;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("sample rate {0} Hz is below the {MIN_SAMPLE_RATE_HZ} Hz minimum")]
    SampleRateTooLow(u32),
    #[error("unsupported WAV encoding: {format} with {bits} bits per sample")]
    UnsupportedEncoding { format: &'static str, bits: u16 },
    #[error("expected mono audio, found {0} channels")]
    MultiChannel(u16),
    #[error("WAV file is truncated")]
    Truncated,
    #[error("malformed WAV file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("clip is empty")]
    EmptyClip,
    #[error("clip has no spectral energy")]
    NoEnergy,
    #[error("band [{lo_hz}, {hi_hz}] Hz is not within [0, {nyquist_hz}] Hz")]
    InvalidBand {
        lo_hz: f64,
        hi_hz: f64,
        nyquist_hz: f64,
    },
    #[error("invalid frame grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T, E = AudioError> = std::result::Result<T, E>;

/// A mono buffer of finite samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz < MIN_SAMPLE_RATE_HZ {
            return Err(AudioError::SampleRateTooLow(sample_rate_hz));
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    /// A clip with the same rate and new content.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / 2.0
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// True when every sample is exactly zero.
    pub fn is_digital_silence(&self) -> bool {
        self.samples.iter().all(|&s| s == 0.0)
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Scales the clip down so that its peak is at most 1.0.
    ///
    /// Returns the clip and the gain applied (1.0 when no scaling was needed).
    pub fn peak_normalized(self) -> (Self, f64) {
        let peak = self.peak();
        if peak <= 1.0 {
            return (self, 1.0);
        }
        let gain = 1.0 / peak;
        (self.scaled(gain), gain)
    }
}

pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Level in dB relative to full scale, clamped below at `floor_db`.
pub fn amplitude_to_db(amplitude: f64, floor_db: f64) -> f64 {
    if amplitude <= 0.0 {
        return floor_db;
    }
    (20.0 * amplitude.log10()).max(floor_db)
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_low_rates() {
        assert!(matches!(
            AudioClip::new(vec![0.0, f64::NAN], 16_000),
            Err(AudioError::NonFinite { index: 1 })
        ));
        assert!(matches!(
            AudioClip::new(vec![0.0], 4_000),
            Err(AudioError::SampleRateTooLow(4_000))
        ));
    }

    #[test]
    fn peak_normalization_records_gain() {
        let clip = AudioClip::new(vec![0.5, -2.0, 1.0], 16_000).unwrap();
        let (clip, gain) = clip.peak_normalized();
        assert_eq!(gain, 0.5);
        assert_eq!(clip.samples(), &[0.25, -1.0, 0.5]);

        let quiet = AudioClip::new(vec![0.5, -0.25], 16_000).unwrap();
        let (same, gain) = quiet.clone().peak_normalized();
        assert_eq!(gain, 1.0);
        assert_eq!(same, quiet);
    }

    #[test]
    fn db_helpers_clamp_at_floor() {
        assert_eq!(amplitude_to_db(0.0, -120.0), -120.0);
        assert!((amplitude_to_db(1.0, -120.0)).abs() < 1e-12);
        assert!((db_to_amplitude(-6.0206) - 0.5).abs() < 1e-4);
    }
}
