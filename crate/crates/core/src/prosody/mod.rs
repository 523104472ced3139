//! F0 and intensity contours, and the per-utterance means the lexical
//! condition flattens toward.

mod intensity;
mod pitch;

use std::io::Write;

use thiserror::Error;

pub use intensity::{intensity_contour, IntensityConfig, IntensityContour, LEVEL_FLOOR_DB};
pub use pitch::{estimate_f0, PitchConfig, PitchContour};

use crate::audio::{AudioClip, AudioError, FrameGrid};

/// Frames more than this many dB below the loudest frame count as silence.
pub const SILENCE_THRESHOLD_DB: f64 = 40.0;

#[derive(Debug, Error)]
pub enum ProsodyError {
    #[error("clip of {duration_s:.3} s is shorter than one {window_s:.3} s analysis window")]
    TooShort { duration_s: f64, window_s: f64 },
    #[error("no voiced frames")]
    NoVoicedFrames,
    #[error("no frames above the silence threshold")]
    FullySilent,
    #[error("pitch and intensity contours use different frame grids")]
    GridMismatch,
    #[error("invalid analysis config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ProsodyError> = std::result::Result<T, E>;

fn check_length(clip: &AudioClip, grid: &FrameGrid) -> Result<()> {
    if grid.is_empty() {
        return Err(ProsodyError::TooShort {
            duration_s: clip.duration_s(),
            window_s: grid.window_s,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtteranceMeans {
    pub mean_f0_hz: f64,
    pub mean_level_db: f64,
}

pub fn mean_f0(pitch: &PitchContour) -> Result<f64> {
    let (sum, n) = pitch.voiced().fold((0.0, 0usize), |(s, n), f| (s + f, n + 1));
    if n == 0 {
        return Err(ProsodyError::NoVoicedFrames);
    }
    Ok(sum / n as f64)
}

/// Mean dB level over frames within [`SILENCE_THRESHOLD_DB`] of the peak frame.
pub fn mean_level(intensity: &IntensityContour) -> Result<f64> {
    let mask = intensity.non_silent_mask(SILENCE_THRESHOLD_DB);
    let (sum, n) = intensity
        .level_db
        .iter()
        .zip(&mask)
        .filter(|(_, &keep)| keep)
        .fold((0.0, 0usize), |(s, n), (l, _)| (s + l, n + 1));
    if n == 0 {
        return Err(ProsodyError::FullySilent);
    }
    Ok(sum / n as f64)
}

pub fn utterance_means(pitch: &PitchContour, intensity: &IntensityContour) -> Result<UtteranceMeans> {
    Ok(UtteranceMeans {
        mean_f0_hz: mean_f0(pitch)?,
        mean_level_db: mean_level(intensity)?,
    })
}

/// Writes `frame_start_s \t f0_hz|NA \t level_db`, one row per frame, after a header.
pub fn write_contour_tsv(
    pitch: &PitchContour,
    intensity: &IntensityContour,
    mut out: impl Write,
) -> Result<()> {
    if pitch.grid != intensity.grid {
        return Err(ProsodyError::GridMismatch);
    }
    writeln!(out, "frame_start_s\tf0_hz\tlevel_db")?;
    for (i, (f0, level)) in pitch.f0_hz.iter().zip(&intensity.level_db).enumerate() {
        match f0 {
            Some(f) => writeln!(out, "{:.3}\t{:.2}\t{:.2}", pitch.grid.frame_start_s(i), f, level)?,
            None => writeln!(out, "{:.3}\tNA\t{:.2}", pitch.grid.frame_start_s(i), level)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> FrameGrid {
        FrameGrid::new(0.04, 0.01, 16_000, 640 + (n - 1) * 160).unwrap()
    }

    fn pitch(f0: Vec<Option<f64>>) -> PitchContour {
        PitchContour { grid: grid(f0.len()), f0_hz: f0 }
    }

    fn levels(level_db: Vec<f64>) -> IntensityContour {
        IntensityContour {
            grid: grid(level_db.len()),
            level_db,
            floor_db: LEVEL_FLOOR_DB,
        }
    }

    #[test]
    fn means_over_voiced_frames() {
        assert_eq!(mean_f0(&pitch(vec![Some(200.0); 5])).unwrap(), 200.0);
        assert_eq!(mean_f0(&pitch(vec![Some(180.0), None, Some(220.0)])).unwrap(), 200.0);
        assert!(matches!(
            mean_f0(&pitch(vec![None, None])),
            Err(ProsodyError::NoVoicedFrames)
        ));
    }

    #[test]
    fn level_mean_skips_silence() {
        let c = levels(vec![-10.0, -20.0, -55.0, LEVEL_FLOOR_DB]);
        assert_eq!(mean_level(&c).unwrap(), -15.0);
        assert!(matches!(
            mean_level(&levels(vec![LEVEL_FLOOR_DB; 3])),
            Err(ProsodyError::FullySilent)
        ));
    }

    #[test]
    fn tsv_dump() {
        let p = pitch(vec![Some(200.0), None]);
        let l = levels(vec![-10.0, -20.5]);
        let mut buf = Vec::new();
        write_contour_tsv(&p, &l, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "frame_start_s\tf0_hz\tlevel_db\n0.000\t200.00\t-10.00\n0.010\tNA\t-20.50\n"
        );
        assert!(matches!(
            write_contour_tsv(&pitch(vec![None]), &l, Vec::new()),
            Err(ProsodyError::GridMismatch)
        ));
    }
}
