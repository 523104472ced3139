//! The four listening conditions: natural (untouched), lexical (flattened
//! F0 and intensity), prosodic (low-pass filtered) and noise (seeded white
//! noise of the same length).
//!
//! Every transform returns exactly as many samples as it was given.

mod gain;
mod lowpass;
mod noise;
mod psola;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gain::{flatten_intensity, flatten_intensity_with, gain_curve, GAIN_CAP_DB, GAIN_SMOOTHING_S};
pub use lowpass::{low_pass, lowpass_taps, transition_width_hz, MIN_CUTOFF_HZ, STOPBAND_ATTENUATION_DB};
pub use noise::{white_noise_like, white_noise_samples, DEFAULT_NOISE_LEVEL_DB};
pub use psola::{flatten_pitch, flatten_pitch_with};

use crate::audio::{AudioClip, AudioError};
use crate::prosody::{
    estimate_f0, intensity_contour, utterance_means, IntensityConfig, PitchConfig, ProsodyError,
    SILENCE_THRESHOLD_DB,
};

pub const DEFAULT_CUTOFF_HZ: f64 = 300.0;

#[derive(Debug, Error)]
pub enum ConditionError {
    #[error("target F0 {target} Hz outside [{lo}, {hi}] Hz")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("no voiced frames to flatten")]
    NoVoicedFrames,
    #[error("no frames above the silence threshold")]
    FullySilent,
    #[error("cutoff {cutoff_hz} Hz outside [20, {nyquist_hz}) Hz")]
    CutoffOutOfRange { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Prosody(ProsodyError),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

impl From<ProsodyError> for ConditionError {
    fn from(err: ProsodyError) -> Self {
        match err {
            ProsodyError::NoVoicedFrames => Self::NoVoicedFrames,
            ProsodyError::FullySilent => Self::FullySilent,
            other => Self::Prosody(other),
        }
    }
}

pub type Result<T, E = ConditionError> = std::result::Result<T, E>;

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF_HZ
}

fn default_noise_level() -> f64 {
    DEFAULT_NOISE_LEVEL_DB
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ConditionSpec {
    Natural,
    Lexical,
    Prosodic {
        #[serde(default = "default_cutoff")]
        cutoff_hz: f64,
    },
    Noise {
        #[serde(default)]
        noise_seed: u64,
        #[serde(default = "default_noise_level")]
        noise_level_db: f64,
    },
}

impl ConditionSpec {
    pub fn prosodic(cutoff_hz: f64) -> Self {
        Self::Prosodic { cutoff_hz }
    }

    pub fn noise(noise_seed: u64) -> Self {
        Self::Noise {
            noise_seed,
            noise_level_db: DEFAULT_NOISE_LEVEL_DB,
        }
    }

    /// Builds a spec from a variant name and optional parameters.
    pub fn from_parts(
        variant: &str,
        cutoff_hz: Option<f64>,
        noise_seed: Option<u64>,
        noise_level_db: Option<f64>,
    ) -> Result<Self> {
        match variant {
            "natural" => Ok(Self::Natural),
            "lexical" => Ok(Self::Lexical),
            "prosodic" => Ok(Self::Prosodic {
                cutoff_hz: cutoff_hz.unwrap_or(DEFAULT_CUTOFF_HZ),
            }),
            "noise" => Ok(Self::Noise {
                noise_seed: noise_seed.unwrap_or(0),
                noise_level_db: noise_level_db.unwrap_or(DEFAULT_NOISE_LEVEL_DB),
            }),
            other => Err(ConditionError::InvalidParameter(format!(
                "unknown condition variant {other:?}"
            ))),
        }
    }

    pub fn variant(&self) -> &'static str {
        match self {
            Self::Natural => "natural",
            Self::Lexical => "lexical",
            Self::Prosodic { .. } => "prosodic",
            Self::Noise { .. } => "noise",
        }
    }

    /// Short tag used in file names and result tables, e.g. `prosodic300`.
    pub fn label(&self) -> String {
        match self {
            Self::Prosodic { cutoff_hz } => format!("prosodic{}", format_hz(*cutoff_hz)),
            other => other.variant().to_string(),
        }
    }

    pub fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        match *self {
            Self::Prosodic { cutoff_hz } => {
                let nyquist_hz = sample_rate_hz as f64 / 2.0;
                if !(MIN_CUTOFF_HZ..nyquist_hz).contains(&cutoff_hz) {
                    return Err(ConditionError::CutoffOutOfRange {
                        cutoff_hz,
                        nyquist_hz,
                    });
                }
                Ok(())
            }
            Self::Noise { noise_level_db, .. } if !noise_level_db.is_finite() => Err(
                ConditionError::InvalidParameter(format!("noise level {noise_level_db} dB")),
            ),
            _ => Ok(()),
        }
    }
}

fn format_hz(hz: f64) -> String {
    if hz.fract() == 0.0 {
        format!("{}", hz as i64)
    } else {
        format!("{hz}")
    }
}

/// Flattens pitch, then intensity, both toward the input's utterance means.
pub fn make_lexical(clip: &AudioClip) -> Result<AudioClip> {
    let pitch_cfg = PitchConfig::default();
    let intensity_cfg = IntensityConfig::default();
    let pitch = estimate_f0(clip, &pitch_cfg)?;
    let intensity = intensity_contour(clip, &intensity_cfg)?;
    let means = utterance_means(&pitch, &intensity)?;
    let flat_pitch = flatten_pitch_with(clip, means.mean_f0_hz, &pitch_cfg)?;
    flatten_intensity_with(&flat_pitch, means.mean_level_db, &intensity_cfg)
}

pub fn apply_condition(clip: &AudioClip, spec: &ConditionSpec) -> Result<AudioClip> {
    spec.validate(clip.sample_rate_hz())?;
    match *spec {
        ConditionSpec::Natural => Ok(clip.clone()),
        ConditionSpec::Lexical => make_lexical(clip),
        ConditionSpec::Prosodic { cutoff_hz } => low_pass(clip, cutoff_hz),
        ConditionSpec::Noise {
            noise_seed,
            noise_level_db,
        } => white_noise_samples(clip.len(), clip.sample_rate_hz(), noise_seed, noise_level_db),
    }
}

pub const F0_STD_BOUND_HZ: f64 = 5.0;
pub const F0_MEAN_BOUND_HZ: f64 = 5.0;
pub const LEVEL_BOUND_DB: f64 = 1.5;
/// Frames this close to a clip edge or a silent frame are not level-checked.
pub const LEVEL_EDGE_GUARD_S: f64 = 0.050;

/// Measured flatness of a lexical-condition output against its input.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessReport {
    pub input_f0_mean_hz: f64,
    pub output_f0_mean_hz: f64,
    pub output_f0_std_hz: f64,
    pub output_voiced_frames: usize,
    pub target_level_db: f64,
    pub checked_level_frames: usize,
    pub max_level_deviation_db: f64,
    pub same_length: bool,
}

impl FlatnessReport {
    pub fn f0_flat(&self) -> bool {
        self.output_f0_std_hz <= F0_STD_BOUND_HZ
            && (self.output_f0_mean_hz - self.input_f0_mean_hz).abs() <= F0_MEAN_BOUND_HZ
    }

    pub fn level_flat(&self) -> bool {
        self.max_level_deviation_db <= LEVEL_BOUND_DB
    }

    pub fn passes(&self) -> bool {
        self.same_length && self.f0_flat() && self.level_flat()
    }
}

/// Re-analyzes `output` with the same trackers and compares against the
/// utterance means of `input`.
pub fn measure_flatness(input: &AudioClip, output: &AudioClip) -> Result<FlatnessReport> {
    let pitch_cfg = PitchConfig::default();
    let intensity_cfg = IntensityConfig::default();
    let in_pitch = estimate_f0(input, &pitch_cfg)?;
    let in_levels = intensity_contour(input, &intensity_cfg)?;
    let means = utterance_means(&in_pitch, &in_levels)?;

    let out_pitch = estimate_f0(output, &pitch_cfg)?;
    let voiced: Vec<f64> = out_pitch.voiced().collect();
    let (f0_mean, f0_std) = mean_and_std(&voiced);

    let out_levels = intensity_contour(output, &intensity_cfg)?;
    let active = in_levels.non_silent_mask(SILENCE_THRESHOLD_DB);
    let guard = (LEVEL_EDGE_GUARD_S / in_levels.grid.hop_s).round() as usize;
    let n = active.len();
    let checked: Vec<usize> = (0..n)
        .filter(|&i| i >= guard && i + guard < n && active[i - guard..=i + guard].iter().all(|&a| a))
        .collect();
    let max_dev = checked
        .iter()
        .map(|&i| (out_levels.level_db[i] - means.mean_level_db).abs())
        .fold(0.0, f64::max);

    Ok(FlatnessReport {
        input_f0_mean_hz: means.mean_f0_hz,
        output_f0_mean_hz: f0_mean,
        output_f0_std_hz: f0_std,
        output_voiced_frames: voiced.len(),
        target_level_db: means.mean_level_db,
        checked_level_frames: checked.len(),
        max_level_deviation_db: max_dev,
        same_length: input.len() == output.len(),
    })
}

fn mean_and_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    (mean, var.sqrt())
}
