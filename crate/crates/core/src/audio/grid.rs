use std::ops::Range;

use super::{AudioClip, AudioError, Result};

/// Regular analysis frames over a clip.
///
/// Window and hop are rounded to whole samples; frame `i` covers samples
/// `[i * hop, i * hop + window)`. Only frames that fit entirely inside the
/// clip are counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGrid {
    pub window_s: f64,
    pub hop_s: f64,
    pub n_frames: usize,
    sample_rate_hz: u32,
    window_len: usize,
    hop_len: usize,
}

impl FrameGrid {
    pub fn new(window_s: f64, hop_s: f64, sample_rate_hz: u32, n_samples: usize) -> Result<Self> {
        if !(hop_s > 0.0 && hop_s <= window_s) {
            return Err(AudioError::InvalidGrid(format!(
                "need 0 < hop ({hop_s} s) <= window ({window_s} s)"
            )));
        }
        let window_len = (window_s * sample_rate_hz as f64).round() as usize;
        let hop_len = (hop_s * sample_rate_hz as f64).round() as usize;
        if hop_len == 0 || window_len == 0 {
            return Err(AudioError::InvalidGrid(format!(
                "window {window_s} s / hop {hop_s} s shorter than one sample at {sample_rate_hz} Hz"
            )));
        }
        let n_frames = if n_samples >= window_len {
            (n_samples - window_len) / hop_len + 1
        } else {
            0
        };
        Ok(Self {
            window_s,
            hop_s,
            n_frames,
            sample_rate_hz,
            window_len,
            hop_len,
        })
    }

    pub fn for_clip(clip: &AudioClip, window_s: f64, hop_s: f64) -> Result<Self> {
        Self::new(window_s, hop_s, clip.sample_rate_hz(), clip.len())
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop_len(&self) -> usize {
        self.hop_len
    }

    pub fn is_empty(&self) -> bool {
        self.n_frames == 0
    }

    pub fn frame_range(&self, index: usize) -> Range<usize> {
        let start = index * self.hop_len;
        start..start + self.window_len
    }

    pub fn frame_start_s(&self, index: usize) -> f64 {
        (index * self.hop_len) as f64 / self.sample_rate_hz as f64
    }

    pub fn frame_center_s(&self, index: usize) -> f64 {
        (index * self.hop_len) as f64 / self.sample_rate_hz as f64
            + self.window_len as f64 / (2.0 * self.sample_rate_hz as f64)
    }

    pub fn frame_center_sample(&self, index: usize) -> f64 {
        (index * self.hop_len) as f64 + self.window_len as f64 / 2.0
    }

    /// Inverse of [`FrameGrid::frame_start_s`] for times that fall on a frame start.
    pub fn frame_at_start(&self, start_s: f64) -> Option<usize> {
        let samples = start_s * self.sample_rate_hz as f64;
        let index = (samples / self.hop_len as f64).round();
        if index < 0.0 || index as usize >= self.n_frames {
            return None;
        }
        let index = index as usize;
        ((self.frame_start_s(index) - start_s).abs() < 0.5 / self.sample_rate_hz as f64)
            .then_some(index)
    }

    /// Iterates the sample slices of every frame.
    pub fn frames<'a>(&'a self, samples: &'a [f64]) -> impl Iterator<Item = &'a [f64]> + 'a {
        (0..self.n_frames).map(move |i| &samples[self.frame_range(i)])
    }
}
