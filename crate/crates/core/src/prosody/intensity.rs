use super::{check_length, Result};
use crate::audio::{amplitude_to_db, rms, AudioClip, FrameGrid};

pub const LEVEL_FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub floor_db: f64,
}

impl Default for IntensityConfig {
    fn default() -> Self {
        Self {
            window_s: 0.040,
            hop_s: 0.010,
            floor_db: LEVEL_FLOOR_DB,
        }
    }
}

/// Per-frame RMS level in dBFS, clamped below at the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityContour {
    pub grid: FrameGrid,
    pub level_db: Vec<f64>,
    pub floor_db: f64,
}

impl IntensityContour {
    pub fn peak_db(&self) -> f64 {
        self.level_db.iter().copied().fold(self.floor_db, f64::max)
    }

    /// Frames within `threshold_db` of the loudest frame (and above the floor).
    pub fn non_silent_mask(&self, threshold_db: f64) -> Vec<bool> {
        let peak = self.peak_db();
        self.level_db
            .iter()
            .map(|&l| l > self.floor_db && l >= peak - threshold_db)
            .collect()
    }
}

pub fn intensity_contour(clip: &AudioClip, cfg: &IntensityConfig) -> Result<IntensityContour> {
    let grid = FrameGrid::for_clip(clip, cfg.window_s, cfg.hop_s)?;
    check_length(clip, &grid)?;
    let level_db = grid
        .frames(clip.samples())
        .map(|frame| amplitude_to_db(rms(frame), cfg.floor_db))
        .collect();
    Ok(IntensityContour {
        grid,
        level_db,
        floor_db: cfg.floor_db,
    })
}
