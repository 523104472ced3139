use super::{ConditionError, Result};
use crate::audio::{fft_convolve, kaiser_beta, kaiser_length, windowed_sinc_lowpass, AudioClip};

pub const MIN_CUTOFF_HZ: f64 = 20.0;
/// Design stopband attenuation; comfortably above the 60 dB requirement.
pub const STOPBAND_ATTENUATION_DB: f64 = 70.0;

/// Transition band width for a cutoff: max(20 Hz, 10% of cutoff).
pub fn transition_width_hz(cutoff_hz: f64) -> f64 {
    (0.1 * cutoff_hz).max(20.0)
}

/// Linear-phase low-pass taps. The passband extends to `cutoff_hz` and the
/// stopband starts one transition width above it (capped at Nyquist).
pub fn lowpass_taps(cutoff_hz: f64, sample_rate_hz: u32) -> Result<Vec<f64>> {
    let nyquist = sample_rate_hz as f64 / 2.0;
    if !(MIN_CUTOFF_HZ..nyquist).contains(&cutoff_hz) {
        return Err(ConditionError::CutoffOutOfRange {
            cutoff_hz,
            nyquist_hz: nyquist,
        });
    }
    let stop_hz = (cutoff_hz + transition_width_hz(cutoff_hz)).min(nyquist);
    let transition = (stop_hz - cutoff_hz) / sample_rate_hz as f64;
    let center = 0.5 * (cutoff_hz + stop_hz) / sample_rate_hz as f64;
    let len = kaiser_length(STOPBAND_ATTENUATION_DB, transition);
    Ok(windowed_sinc_lowpass(center, len, kaiser_beta(STOPBAND_ATTENUATION_DB)))
}

/// Zero-phase application of a low-pass at `cutoff_hz`; output length equals input length.
pub fn low_pass(clip: &AudioClip, cutoff_hz: f64) -> Result<AudioClip> {
    let taps = lowpass_taps(cutoff_hz, clip.sample_rate_hz())?;
    if clip.is_empty() {
        return Ok(clip.clone());
    }
    let half = taps.len() / 2;
    let padded = reflect_pad(clip.samples(), half);
    let full = fft_convolve(&padded, &taps);
    // the symmetric filter's group delay is `half`; the pad adds another `half`
    let out = full[2 * half..2 * half + clip.len()].to_vec();
    Ok(clip.with_samples(out)?)
}

/// Mirror padding about each end sample (the end sample is not repeated).
/// Pads longer than the clip fold back and forth across it.
fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len() as isize;
    let mirror = |i: isize| -> f64 {
        if n == 1 {
            return x[0];
        }
        let period = 2 * (n - 1);
        let m = i.rem_euclid(period);
        x[(if m < n { m } else { period - m }) as usize]
    };
    (-(pad as isize)..n + pad as isize).map(mirror).collect()
}
