use rustfft::{num_complex::Complex, FftPlanner};

use super::{Result, UnitsError};
use crate::audio::{AudioClip, FrameGrid};

/// Natural log of the energy floor, `ln(1e-10)`.
pub const LOG_FLOOR: f64 = -23.025850929940457;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub n_mels: usize,
    pub window_s: f64,
    pub hop_s: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            n_mels: 40,
            window_s: 0.025,
            hop_s: 0.020,
        }
    }
}

/// Row-major `n_frames x dim` matrix of per-frame features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub grid: FrameGrid,
    pub dim: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(grid: FrameGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(UnitsError::InvalidParameter("feature dimension 0".into()));
        }
        if values.len() != grid.n_frames * dim {
            return Err(UnitsError::DimensionMismatch {
                expected: grid.n_frames * dim,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(UnitsError::NonFinite(i));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn n_frames(&self) -> usize {
        self.grid.n_frames
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with peak 1, centers evenly spaced on the mel scale
/// between 0 Hz and Nyquist. Each filter has `fft_len / 2 + 1` weights.
pub fn mel_filterbank(n_mels: usize, fft_len: usize, sample_rate_hz: u32) -> Vec<Vec<f64>> {
    let nyquist = sample_rate_hz as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate_hz as f64 / fft_len as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..=fft_len / 2)
                .map(|b| {
                    let f = b as f64 * bin_hz;
                    let rising = (f - lo) / (center - lo);
                    let falling = (hi - f) / (hi - center);
                    rising.min(falling).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Log mel filterbank energies (natural log, floored at [`LOG_FLOOR`]) of
/// Hann-windowed frames zero-padded to the next power of two.
pub fn extract_features(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    if cfg.n_mels == 0 {
        return Err(UnitsError::InvalidParameter("n_mels 0".into()));
    }
    let grid = FrameGrid::for_clip(clip, cfg.window_s, cfg.hop_s)?;
    if grid.is_empty() {
        return Err(UnitsError::TooShort {
            duration_s: clip.duration_s(),
            window_s: cfg.window_s,
        });
    }
    let win = grid.window_len();
    let fft_len = win.next_power_of_two();
    let hann: Vec<f64> = (0..win)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / win as f64).cos())
        .collect();
    let bank = mel_filterbank(cfg.n_mels, fft_len, clip.sample_rate_hz());
    let fft = FftPlanner::new().plan_fft_forward(fft_len);

    let mut values = Vec::with_capacity(grid.n_frames * cfg.n_mels);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    for frame in grid.frames(clip.samples()) {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (slot, (s, w)) in buf.iter_mut().zip(frame.iter().zip(&hann)) {
            slot.re = s * w;
        }
        fft.process(&mut buf);
        let power: Vec<f64> = buf[..=fft_len / 2].iter().map(|c| c.norm_sqr()).collect();
        for filter in &bank {
            let e: f64 = filter.iter().zip(&power).map(|(w, p)| w * p).sum();
            values.push(e.max(1e-10).ln());
        }
    }
    FeatureMatrix::new(grid, cfg.n_mels, values)
}
