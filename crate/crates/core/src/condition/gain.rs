//! Intensity flattening with a smoothed, capped gain contour.
//!
//! Gains are set per analysis frame in dB, linearly interpolated between
//! frame centers, smoothed with a 30 ms moving average and applied to the
//! input. Smoothing and frame overlap couple neighboring frames, so the
//! per-frame gains are solved jointly by damped Gauss-Newton against the
//! re-measured output levels.

use nalgebra::{DMatrix, DVector};

use super::{ConditionError, Result};
use crate::audio::{db_to_amplitude, AudioClip, FrameGrid};
use crate::prosody::{intensity_contour, IntensityConfig, SILENCE_THRESHOLD_DB};

/// Largest per-frame gain magnitude. Equal to the silence threshold, so any
/// non-silent frame can be brought to a target inside the non-silent range.
pub const GAIN_CAP_DB: f64 = 40.0;
pub const GAIN_SMOOTHING_S: f64 = 0.030;
const MAX_STEPS: usize = 50;
const CONVERGED_DB: f64 = 0.05;
const MAX_DAMPING: f64 = 1e8;

pub fn flatten_intensity(clip: &AudioClip, target_level_db: f64) -> Result<AudioClip> {
    flatten_intensity_with(clip, target_level_db, &IntensityConfig::default())
}

pub fn flatten_intensity_with(
    clip: &AudioClip,
    target_level_db: f64,
    cfg: &IntensityConfig,
) -> Result<AudioClip> {
    if !target_level_db.is_finite() {
        return Err(ConditionError::InvalidParameter(format!(
            "target level {target_level_db} dB"
        )));
    }
    if clip.is_digital_silence() {
        return Ok(clip.clone());
    }
    let input = intensity_contour(clip, cfg)?;
    let active = input.non_silent_mask(SILENCE_THRESHOLD_DB);
    let free: Vec<usize> = (0..active.len()).filter(|&i| active[i]).collect();
    if free.is_empty() {
        return Err(ConditionError::FullySilent);
    }
    let solver = Solver {
        clip,
        grid: &input.grid,
        cfg,
        free: &free,
        target_db: target_level_db,
    };

    let mut gain_db = vec![0.0; active.len()];
    let mut best = solver.evaluate(&gain_db)?;
    let mut damping = 1e-3;
    for _ in 0..MAX_STEPS {
        if best.residual.amax() < CONVERGED_DB {
            break;
        }
        let (jtj, jtr) = solver.normal_equations(&best.curve, &best.residual);
        let accepted = loop {
            if damping > MAX_DAMPING {
                break None;
            }
            let mut lhs = jtj.clone();
            for d in 0..free.len() {
                lhs[(d, d)] += damping * (jtj[(d, d)] + 1e-12);
            }
            let Some(chol) = lhs.cholesky() else {
                damping *= 10.0;
                continue;
            };
            let step = chol.solve(&jtr);
            let mut candidate = gain_db.clone();
            for (col, &k) in free.iter().enumerate() {
                candidate[k] = (candidate[k] + step[col]).clamp(-GAIN_CAP_DB, GAIN_CAP_DB);
            }
            let trial = solver.evaluate(&candidate)?;
            if trial.cost() < best.cost() {
                damping = (damping / 10.0).max(1e-9);
                break Some((candidate, trial));
            }
            damping *= 10.0;
        };
        match accepted {
            Some((g, trial)) => {
                gain_db = g;
                best = trial;
            }
            None => break,
        }
    }
    Ok(best.output)
}

struct Solver<'a> {
    clip: &'a AudioClip,
    grid: &'a FrameGrid,
    cfg: &'a IntensityConfig,
    free: &'a [usize],
    target_db: f64,
}

struct Evaluation {
    output: AudioClip,
    curve: Vec<f64>,
    residual: DVector<f64>,
}

impl Evaluation {
    fn cost(&self) -> f64 {
        self.residual.norm_squared()
    }
}

impl Solver<'_> {
    fn evaluate(&self, gain_db: &[f64]) -> Result<Evaluation> {
        let curve = gain_curve(self.grid, gain_db, self.clip.len());
        let samples = self.clip.samples().iter().zip(&curve).map(|(s, g)| s * g).collect();
        let output = self.clip.with_samples(samples)?;
        let levels = intensity_contour(&output, self.cfg)?.level_db;
        let residual = DVector::from_iterator(
            self.free.len(),
            self.free.iter().map(|&i| self.target_db - levels[i]),
        );
        Ok(Evaluation {
            output,
            curve,
            residual,
        })
    }

    /// Builds J^T J and J^T r from the sparse Jacobian rows.
    fn normal_equations(&self, curve: &[f64], residual: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.free.len();
        let mut jtj = DMatrix::zeros(m, m);
        let mut jtr = DVector::zeros(m);
        for (r, row) in self.jacobian(curve).iter().enumerate() {
            for &(a, va) in row {
                jtr[a] += va * residual[r];
                for &(b, vb) in row {
                    jtj[(a, b)] += va * vb;
                }
            }
        }
        (jtj, jtr)
    }

    /// Row i holds (column, value) pairs of the derivative of free frame i's
    /// level with respect to the free knots. A frame's level moves with the
    /// energy-weighted mean of the smoothed dB curve over its window.
    fn jacobian(&self, curve: &[f64]) -> Vec<Vec<(usize, f64)>> {
        let x = self.clip.samples();
        let n = x.len();
        let mut column = vec![usize::MAX; self.grid.n_frames];
        for (col, &k) in self.free.iter().enumerate() {
            column[k] = col;
        }
        let (before, after) = smoothing_extent(self.grid);

        let mut rows = Vec::with_capacity(self.free.len());
        let mut prefix = Vec::new();
        for &i in self.free {
            let mut row: Vec<(usize, f64)> = Vec::new();
            let frame = self.grid.frame_range(i);
            let energy: Vec<f64> = frame.clone().map(|t| (x[t] * curve[t]).powi(2)).collect();
            let total: f64 = energy.iter().sum();
            if total <= 0.0 {
                rows.push(row);
                continue;
            }
            prefix.clear();
            prefix.push(0.0);
            for (t, e) in frame.clone().zip(&energy) {
                let count = (t + after).min(n) - t.saturating_sub(before);
                prefix.push(prefix.last().unwrap() + e / (total * count as f64));
            }

            let u_lo = frame.start.saturating_sub(before);
            let u_hi = (frame.end - 1 + after).min(n);
            for u in u_lo..u_hi {
                let t_lo = (u + 1).saturating_sub(after).max(frame.start);
                let t_hi = (u + before + 1).min(frame.end);
                if t_lo >= t_hi {
                    continue;
                }
                let c = prefix[t_hi - frame.start] - prefix[t_lo - frame.start];
                for (k, w) in interpolation_weights(self.grid, u as f64) {
                    let col = column[k];
                    if col == usize::MAX || w == 0.0 {
                        continue;
                    }
                    match row.iter_mut().find(|(existing, _)| *existing == col) {
                        Some((_, v)) => *v += c * w,
                        None => row.push((col, c * w)),
                    }
                }
            }
            rows.push(row);
        }
        rows
    }
}

/// Samples before and after `t` covered by its smoothing window.
fn smoothing_extent(grid: &FrameGrid) -> (usize, usize) {
    let width = ((GAIN_SMOOTHING_S * grid.sample_rate_hz() as f64).round() as usize).max(1);
    let before = width / 2;
    (before, width - before)
}

/// Knots and weights for linear interpolation at a sample position; held
/// constant beyond the first and last frame centers.
fn interpolation_weights(grid: &FrameGrid, pos: f64) -> [(usize, f64); 2] {
    let last = grid.n_frames - 1;
    let first_center = grid.frame_center_sample(0);
    if pos <= first_center {
        return [(0, 1.0), (0, 0.0)];
    }
    if pos >= grid.frame_center_sample(last) {
        return [(last, 1.0), (last, 0.0)];
    }
    let k = (((pos - first_center) / grid.hop_len() as f64).floor() as usize).min(last - 1);
    let (c0, c1) = (grid.frame_center_sample(k), grid.frame_center_sample(k + 1));
    let frac = (pos - c0) / (c1 - c0);
    [(k, 1.0 - frac), (k + 1, frac)]
}

/// Per-sample linear gain from per-frame dB knots.
pub fn gain_curve(grid: &FrameGrid, gain_db: &[f64], n_samples: usize) -> Vec<f64> {
    if grid.n_frames == 0 || gain_db.is_empty() {
        return vec![1.0; n_samples];
    }
    let raw: Vec<f64> = (0..n_samples)
        .map(|t| {
            interpolation_weights(grid, t as f64)
                .iter()
                .map(|&(k, w)| w * gain_db[k])
                .sum()
        })
        .collect();
    let (before, after) = smoothing_extent(grid);
    moving_average(&raw, before, after)
        .into_iter()
        .map(db_to_amplitude)
        .collect()
}

/// Mean over `[i - before, i + after)`, clipped to the signal.
pub(super) fn moving_average(x: &[f64], before: usize, after: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}
