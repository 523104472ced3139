use rustfft::{num_complex::Complex, FftPlanner};

use super::{AudioClip, AudioError, Result};

/// One-sided magnitude-squared periodogram of the whole buffer.
///
/// Bin `k` sits at `k * sample_rate / n` Hz for `k` in `0..=n/2`. Interior
/// bins are doubled so that the bins sum to the total energy.
pub fn power_spectrum(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr();
            if k == 0 || (n % 2 == 0 && k == half) {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

/// Fraction of spectral energy in `[f_lo_hz, f_hi_hz)`.
///
/// The Nyquist bin is counted when `f_hi_hz` reaches Nyquist, so adjacent
/// bands covering `[0, Nyquist]` sum to one.
pub fn band_energy(clip: &AudioClip, f_lo_hz: f64, f_hi_hz: f64) -> Result<f64> {
    band_energy_of(clip.samples(), clip.sample_rate_hz(), f_lo_hz, f_hi_hz)
}

pub fn band_energy_of(samples: &[f64], sample_rate_hz: u32, f_lo_hz: f64, f_hi_hz: f64) -> Result<f64> {
    let nyquist_hz = sample_rate_hz as f64 / 2.0;
    if !(0.0 <= f_lo_hz && f_lo_hz < f_hi_hz && f_hi_hz <= nyquist_hz) {
        return Err(AudioError::InvalidBand {
            lo_hz: f_lo_hz,
            hi_hz: f_hi_hz,
            nyquist_hz,
        });
    }
    if samples.is_empty() {
        return Err(AudioError::EmptyClip);
    }
    let spectrum = power_spectrum(samples);
    let total: f64 = spectrum.iter().sum();
    if total <= 0.0 {
        return Err(AudioError::NoEnergy);
    }
    let bin_hz = sample_rate_hz as f64 / samples.len() as f64;
    let in_band: f64 = spectrum
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * bin_hz;
            f >= f_lo_hz && (f < f_hi_hz || (f_hi_hz >= nyquist_hz && f <= nyquist_hz))
        })
        .map(|(_, p)| p)
        .sum();
    Ok(in_band / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, n: usize) -> AudioClip {
        AudioClip::new(
            (0..n)
                .map(|i| (2.0 * PI * freq * i as f64 / 16_000.0).sin())
                .collect(),
            16_000,
        )
        .unwrap()
    }

    /// Direct DFT energy at the bins of a band, independent of the FFT path.
    fn dft_band_fraction(x: &[f64], sr: f64, lo: f64, hi: f64) -> f64 {
        let n = x.len();
        let mut total = 0.0;
        let mut band = 0.0;
        for k in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let ang = -2.0 * PI * (k * t) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            let p = re * re + im * im;
            // fold negative frequencies onto their positive image
            let f = if k <= n / 2 { k } else { n - k } as f64 * sr / n as f64;
            total += p;
            if f >= lo && f < hi {
                band += p;
            }
        }
        band / total
    }

    #[test]
    fn sine_energy_lands_in_its_band() {
        let clip = sine(100.0, 16_000);
        assert!(band_energy(&clip, 50.0, 150.0).unwrap() >= 0.99);
        assert!(band_energy(&clip, 1000.0, 2000.0).unwrap() <= 0.01);
    }

    #[test]
    fn agrees_with_direct_dft() {
        let x: Vec<f64> = (0..400)
            .map(|i| {
                let t = i as f64 / 16_000.0;
                (2.0 * PI * 310.0 * t).sin() + 0.3 * (2.0 * PI * 2_170.0 * t).cos() + 0.1
            })
            .collect();
        for (lo, hi) in [(0.0, 200.0), (200.0, 1000.0), (1000.0, 3000.0), (250.0, 5000.0)] {
            let fft = band_energy_of(&x, 16_000, lo, hi).unwrap();
            let dft = dft_band_fraction(&x, 16_000.0, lo, hi);
            assert!((fft - dft).abs() < 1e-9, "{lo}-{hi}: {fft} vs {dft}");
        }
    }

    #[test]
    fn partition_sums_to_one() {
        let x: Vec<f64> = (0..1001).map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5).collect();
        let edges = [0.0, 120.0, 700.0, 3100.0, 8000.0];
        let sum: f64 = edges
            .windows(2)
            .map(|w| band_energy_of(&x, 16_000, w[0], w[1]).unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn silence_and_empty_are_errors() {
        let zeros = AudioClip::silence(1000, 16_000).unwrap();
        assert!(matches!(band_energy(&zeros, 0.0, 100.0), Err(AudioError::NoEnergy)));
        let empty = AudioClip::silence(0, 16_000).unwrap();
        assert!(matches!(band_energy(&empty, 0.0, 100.0), Err(AudioError::EmptyClip)));
        let clip = sine(100.0, 100);
        assert!(matches!(
            band_energy(&clip, 200.0, 100.0),
            Err(AudioError::InvalidBand { .. })
        ));
        assert!(band_energy(&clip, 0.0, 9000.0).is_err());
    }
}
