use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ConditionError, Result};
use crate::audio::{db_to_amplitude, rms, AudioClip};

pub const DEFAULT_NOISE_LEVEL_DB: f64 = -26.0;

/// Seeded i.i.d. Gaussian noise of `duration_s`, scaled to an RMS of `level_db` dBFS.
pub fn white_noise_like(duration_s: f64, sample_rate_hz: u32, seed: u64, level_db: f64) -> Result<AudioClip> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(ConditionError::InvalidParameter(format!(
            "noise duration {duration_s} s"
        )));
    }
    let n = (duration_s * sample_rate_hz as f64).round() as usize;
    white_noise_samples(n, sample_rate_hz, seed, level_db)
}

/// As [`white_noise_like`] with an exact sample count.
pub fn white_noise_samples(n: usize, sample_rate_hz: u32, seed: u64, level_db: f64) -> Result<AudioClip> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let current = rms(&samples);
    if current > 0.0 {
        let gain = db_to_amplitude(level_db) / current;
        samples.iter_mut().for_each(|s| *s *= gain);
    }
    Ok(AudioClip::new(samples, sample_rate_hz)?)
}
