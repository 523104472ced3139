//! YIN fundamental frequency tracking.
//!
//! Per frame: squared difference function (summed over a span centered in
//! the frame for every lag), cumulative mean normalization,
//! absolute threshold with descent to the local minimum, then parabolic
//! interpolation of the raw difference function around that lag.

use rayon::prelude::*;

use super::{check_length, ProsodyError, Result};
use crate::audio::{AudioClip, FrameGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchConfig {
    pub f0_floor_hz: f64,
    pub f0_ceil_hz: f64,
    /// Upper bound on the normalized difference at the chosen lag.
    pub aperiodicity_threshold: f64,
    pub window_s: f64,
    pub hop_s: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_floor_hz: 60.0,
            f0_ceil_hz: 400.0,
            aperiodicity_threshold: 0.15,
            window_s: 0.040,
            hop_s: 0.010,
        }
    }
}

impl PitchConfig {
    fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        if !(self.f0_floor_hz > 0.0 && self.f0_floor_hz < self.f0_ceil_hz) {
            return Err(ProsodyError::InvalidConfig(format!(
                "f0 range [{}, {}] Hz is empty",
                self.f0_floor_hz, self.f0_ceil_hz
            )));
        }
        if self.f0_ceil_hz >= sample_rate_hz as f64 / 4.0 {
            return Err(ProsodyError::InvalidConfig(format!(
                "f0 ceiling {} Hz too high for {sample_rate_hz} Hz audio",
                self.f0_ceil_hz
            )));
        }
        let max_lag = (sample_rate_hz as f64 / self.f0_floor_hz).ceil();
        if self.window_s * sample_rate_hz as f64 <= 1.5 * max_lag {
            return Err(ProsodyError::InvalidConfig(format!(
                "{} s window cannot resolve a {} Hz floor",
                self.window_s, self.f0_floor_hz
            )));
        }
        Ok(())
    }
}

/// Per-frame F0; `None` marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchContour {
    pub grid: FrameGrid,
    pub f0_hz: Vec<Option<f64>>,
}

impl PitchContour {
    pub fn voiced(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0_hz.iter().flatten().copied()
    }

    pub fn voiced_count(&self) -> usize {
        self.f0_hz.iter().filter(|f| f.is_some()).count()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.f0_hz.is_empty() {
            return 0.0;
        }
        self.voiced_count() as f64 / self.f0_hz.len() as f64
    }
}

// Frames quieter than this RMS are unvoiced without analysis.
const MIN_FRAME_RMS: f64 = 1e-5;

pub fn estimate_f0(clip: &AudioClip, cfg: &PitchConfig) -> Result<PitchContour> {
    cfg.validate(clip.sample_rate_hz())?;
    let grid = FrameGrid::for_clip(clip, cfg.window_s, cfg.hop_s)?;
    check_length(clip, &grid)?;
    let samples = clip.samples();
    let sr = clip.sample_rate_hz() as f64;
    let f0_hz = (0..grid.n_frames)
        .into_par_iter()
        .map(|i| yin_frame(&samples[grid.frame_range(i)], sr, cfg))
        .collect();
    Ok(PitchContour { grid, f0_hz })
}

fn yin_frame(frame: &[f64], sr: f64, cfg: &PitchConfig) -> Option<f64> {
    let rms = (frame.iter().map(|s| s * s).sum::<f64>() / frame.len() as f64).sqrt();
    if rms < MIN_FRAME_RMS {
        return None;
    }
    let min_lag = ((sr / cfg.f0_ceil_hz).floor() as usize).max(2);
    let max_lag = (sr / cfg.f0_floor_hz).ceil() as usize;
    // one extra lag so the interpolation at max_lag has a right neighbour
    let span = frame.len() - max_lag - 1;

    let mut diff = vec![0.0; max_lag + 2];
    for (lag, d) in diff.iter_mut().enumerate().skip(1) {
        // pairs centered in the frame, so a time-reversed frame gives the same values
        let start = (frame.len() - span - lag) / 2;
        *d = frame[start..start + span]
            .iter()
            .zip(&frame[start + lag..start + lag + span])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
    }

    let mut cmnd = vec![1.0; diff.len()];
    let mut running = 0.0;
    for lag in 1..diff.len() {
        running += diff[lag];
        cmnd[lag] = if running > 0.0 {
            diff[lag] * lag as f64 / running
        } else {
            1.0
        };
    }

    let mut lag = min_lag;
    let best = loop {
        if lag > max_lag {
            return None;
        }
        if cmnd[lag] < cfg.aperiodicity_threshold {
            while lag < max_lag && cmnd[lag + 1] < cmnd[lag] {
                lag += 1;
            }
            break lag;
        }
        lag += 1;
    };

    let (a, b, c) = (diff[best - 1], diff[best], diff[best + 1]);
    let curvature = a - 2.0 * b + c;
    let shift = if curvature > 0.0 {
        (0.5 * (a - c) / curvature).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let f0 = sr / (best as f64 + shift);
    (cfg.f0_floor_hz..=cfg.f0_ceil_hz).contains(&f0).then_some(f0)
}
