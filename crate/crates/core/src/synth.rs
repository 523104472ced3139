//! Deterministic test signals: tones, sweeps, vibrato, amplitude envelopes
//! and harmonic "speech-like" tones with a moving pitch.

use std::f64::consts::PI;

use crate::audio::{AudioClip, Result};

fn n_samples(secs: f64, sample_rate_hz: u32) -> usize {
    (secs * sample_rate_hz as f64).round() as usize
}

/// Sine whose instantaneous frequency is `freq(t)`, integrated numerically.
pub fn frequency_modulated(
    freq: impl Fn(f64) -> f64,
    secs: f64,
    amplitude: f64,
    sample_rate_hz: u32,
) -> Result<AudioClip> {
    let dt = 1.0 / sample_rate_hz as f64;
    let mut phase = 0.0_f64;
    let samples = (0..n_samples(secs, sample_rate_hz))
        .map(|i| {
            let t = i as f64 * dt;
            let s = amplitude * phase.sin();
            phase += 2.0 * PI * freq(t + 0.5 * dt) * dt;
            s
        })
        .collect();
    AudioClip::new(samples, sample_rate_hz)
}

pub fn tone(freq_hz: f64, secs: f64, amplitude: f64, sample_rate_hz: u32) -> Result<AudioClip> {
    let samples = (0..n_samples(secs, sample_rate_hz))
        .map(|i| amplitude * (2.0 * PI * freq_hz * i as f64 / sample_rate_hz as f64).sin())
        .collect();
    AudioClip::new(samples, sample_rate_hz)
}

/// Linear chirp from `f_start_hz` to `f_end_hz` (closed-form phase).
pub fn sweep(f_start_hz: f64, f_end_hz: f64, secs: f64, amplitude: f64, sample_rate_hz: u32) -> Result<AudioClip> {
    let rate = (f_end_hz - f_start_hz) / secs;
    let samples = (0..n_samples(secs, sample_rate_hz))
        .map(|i| {
            let t = i as f64 / sample_rate_hz as f64;
            amplitude * (2.0 * PI * (f_start_hz * t + 0.5 * rate * t * t)).sin()
        })
        .collect();
    AudioClip::new(samples, sample_rate_hz)
}

/// `center ± depth` Hz sinusoidal vibrato at `rate_hz`.
pub fn vibrato(
    center_hz: f64,
    depth_hz: f64,
    rate_hz: f64,
    secs: f64,
    amplitude: f64,
    sample_rate_hz: u32,
) -> Result<AudioClip> {
    let samples = (0..n_samples(secs, sample_rate_hz))
        .map(|i| {
            let t = i as f64 / sample_rate_hz as f64;
            let phase = 2.0 * PI * center_hz * t + depth_hz / rate_hz * (1.0 - (2.0 * PI * rate_hz * t).cos());
            amplitude * phase.sin()
        })
        .collect();
    AudioClip::new(samples, sample_rate_hz)
}

/// Multiplies every sample by `envelope(t)`.
pub fn with_envelope(clip: &AudioClip, envelope: impl Fn(f64) -> f64) -> Result<AudioClip> {
    let sr = clip.sample_rate_hz() as f64;
    clip.with_samples(
        clip.samples()
            .iter()
            .enumerate()
            .map(|(i, s)| s * envelope(i as f64 / sr))
            .collect(),
    )
}

/// Envelope alternating between `low` and `high` every `segment_s`, with
/// raised-cosine transitions of `ramp_s`.
pub fn alternating_envelope(low: f64, high: f64, segment_s: f64, ramp_s: f64) -> impl Fn(f64) -> f64 {
    move |t: f64| {
        let seg = (t / segment_s).floor();
        let within = t - seg * segment_s;
        let (from, to) = if seg as i64 % 2 == 0 { (high, low) } else { (low, high) };
        let level = if seg as i64 % 2 == 0 { low } else { high };
        if within < ramp_s && seg > 0.0 {
            let w = 0.5 - 0.5 * (PI * within / ramp_s).cos();
            from + (to - from) * w
        } else {
            level
        }
    }
}

/// Harmonic complex with a glottal-like spectral tilt and two fixed formant
/// bumps, following the pitch trajectory `f0(t)`.
pub fn speech_like(
    f0: impl Fn(f64) -> f64,
    secs: f64,
    amplitude: f64,
    sample_rate_hz: u32,
) -> Result<AudioClip> {
    let nyquist = sample_rate_hz as f64 / 2.0;
    let dt = 1.0 / sample_rate_hz as f64;
    let formants = [(700.0, 130.0), (1_200.0, 150.0), (2_600.0, 250.0)];
    let mut phase = 0.0;
    let mut samples = Vec::with_capacity(n_samples(secs, sample_rate_hz));
    for i in 0..n_samples(secs, sample_rate_hz) {
        let t = i as f64 * dt;
        let f = f0(t);
        let mut s = 0.0;
        let mut h = 1;
        while h as f64 * f < 0.9 * nyquist.min(4_000.0) {
            let fh = h as f64 * f;
            let tilt = 1.0 / h as f64;
            let resonance: f64 = formants
                .iter()
                .map(|(fc, bw)| 1.0 / (1.0 + ((fh - fc) / bw).powi(2)))
                .sum();
            s += tilt * (0.3 + resonance) * (h as f64 * phase).sin();
            h += 1;
        }
        samples.push(s);
        phase += 2.0 * PI * f * dt;
    }
    let peak = samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        samples.iter_mut().for_each(|s| *s *= amplitude / peak);
    }
    AudioClip::new(samples, sample_rate_hz)
}
