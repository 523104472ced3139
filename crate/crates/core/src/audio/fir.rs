//! Kaiser-windowed sinc FIR design and FFT convolution.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

/// Zeroth-order modified Bessel function of the first kind.
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser shape parameter for a stopband attenuation in dB.
pub fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Odd tap count meeting `atten_db` over a transition of `transition` cycles/sample.
pub fn kaiser_length(atten_db: f64, transition: f64) -> usize {
    let n = ((atten_db - 7.95) / (14.36 * transition)).ceil().max(1.0) as usize + 1;
    n | 1
}

pub fn kaiser_window(len: usize, beta: f64) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = bessel_i0(beta);
    let m = (len - 1) as f64;
    (0..len)
        .map(|i| {
            let r = 2.0 * i as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

/// Low-pass taps with cutoff `cutoff` in cycles/sample, normalized to unit DC gain.
pub fn windowed_sinc_lowpass(cutoff: f64, len: usize, beta: f64) -> Vec<f64> {
    let window = kaiser_window(len, beta);
    let center = (len - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let x = i as f64 - center;
            let ideal = if x == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * x).sin() / (PI * x)
            };
            ideal * w
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    taps
}

/// Full linear convolution (`signal.len() + taps.len() - 1` samples).
pub fn fft_convolve(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    if signal.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let out_len = signal.len() + taps.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let mut a = vec![Complex::new(0.0, 0.0); size];
    let mut b = vec![Complex::new(0.0, 0.0); size];
    for (dst, &s) in a.iter_mut().zip(signal) {
        dst.re = s;
    }
    for (dst, &t) in b.iter_mut().zip(taps) {
        dst.re = t;
    }
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inverse.process(&mut a);
    let scale = 1.0 / size as f64;
    a[..out_len].iter().map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_matches_reference_values() {
        // Abramowitz & Stegun table 9.8
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008).abs() < 1e-12);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_45).abs() < 1e-9);
    }

    #[test]
    fn window_is_symmetric_and_peaks_at_center() {
        let w = kaiser_window(51, 6.0);
        for i in 0..25 {
            assert!((w[i] - w[50 - i]).abs() < 1e-15);
        }
        assert!((w[25] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fft_convolution_matches_direct() {
        let x: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin()).collect();
        let h = [0.25, -0.5, 1.0, 0.125];
        let fast = fft_convolve(&x, &h);
        for (n, &v) in fast.iter().enumerate() {
            let direct: f64 = h
                .iter()
                .enumerate()
                .filter(|(k, _)| n >= *k && n - k < x.len())
                .map(|(k, hk)| hk * x[n - k])
                .sum();
            assert!((v - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn lowpass_has_unit_dc_gain() {
        let taps = windowed_sinc_lowpass(0.05, kaiser_length(70.0, 0.01), kaiser_beta(70.0));
        assert!((taps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(taps.len() % 2, 1);
    }
}
