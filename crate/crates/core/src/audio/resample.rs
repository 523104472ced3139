use std::f64::consts::PI;

use super::fir::bessel_i0;
use super::{AudioClip, Result, CANONICAL_SAMPLE_RATE_HZ};

// Fixed quality: 16 zero crossings per side, Kaiser beta 8.6 (~85 dB stopband).
const ZERO_CROSSINGS: f64 = 16.0;
const KAISER_BETA: f64 = 8.6;
const ROLLOFF: f64 = 0.97;

fn kaiser_at(x: f64, half_width: f64, i0_beta: f64) -> f64 {
    let r = x / half_width;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta
}

/// Band-limited windowed-sinc resampling to `target_hz`.
pub fn resample(clip: &AudioClip, target_hz: u32) -> Result<AudioClip> {
    let source_hz = clip.sample_rate_hz();
    if source_hz == target_hz {
        return Ok(clip.clone());
    }
    let ratio = target_hz as f64 / source_hz as f64;
    let out_len = (clip.len() as f64 * ratio).round() as usize;
    // cutoff in cycles per input sample
    let cutoff = 0.5 * ratio.min(1.0) * ROLLOFF;
    let half_width = ZERO_CROSSINGS / (2.0 * cutoff);
    let i0_beta = bessel_i0(KAISER_BETA);
    let x = clip.samples();

    let out = (0..out_len)
        .map(|m| {
            let t = m as f64 / ratio;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(x.len().saturating_sub(1));
            (lo..=hi)
                .map(|j| {
                    let d = t - j as f64;
                    let sinc = if d == 0.0 {
                        2.0 * cutoff
                    } else {
                        (2.0 * PI * cutoff * d).sin() / (PI * d)
                    };
                    x[j] * sinc * kaiser_at(d, half_width, i0_beta)
                })
                .sum()
        })
        .collect();
    AudioClip::new(out, target_hz)
}

/// Resamples to the canonical 16 kHz rate (identity when already there).
pub fn to_canonical_rate(clip: &AudioClip) -> Result<AudioClip> {
    resample(clip, CANONICAL_SAMPLE_RATE_HZ)
}
