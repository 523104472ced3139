//! Pitch flattening by time-domain pitch-synchronous overlap-add.
//!
//! Voiced regions are re-synthesized with two-period Hann grains taken at
//! waveform peaks and re-laid at a constant target period; unvoiced samples
//! are copied through. The output has exactly the input's length.

use super::gain::moving_average;
use super::{ConditionError, Result};
use crate::audio::AudioClip;
use crate::prosody::{estimate_f0, PitchConfig, PitchContour};

// Unvoiced gaps up to this many frames inside a voiced run are bridged.
const MAX_BRIDGED_GAP: usize = 2;
// Longer gaps, up to this many frames, are bridged when every frame still
// repeats at about the interpolated period.
const MAX_PERIODIC_GAP: usize = 6;
const GAP_PERIODICITY: f64 = 0.7;
const CROSSFADE_S: f64 = 0.005;
// Short-time energy of the resynthesis is matched to the input over this span.
const ENERGY_MATCH_S: f64 = 0.030;
const ENERGY_MATCH_LIMIT: f64 = 4.0;

/// Re-synthesizes voiced regions at a constant `target_f0_hz`.
pub fn flatten_pitch(clip: &AudioClip, target_f0_hz: f64) -> Result<AudioClip> {
    flatten_pitch_with(clip, target_f0_hz, &PitchConfig::default())
}

pub fn flatten_pitch_with(clip: &AudioClip, target_f0_hz: f64, cfg: &PitchConfig) -> Result<AudioClip> {
    if !(cfg.f0_floor_hz..=cfg.f0_ceil_hz).contains(&target_f0_hz) {
        return Err(ConditionError::TargetOutOfRange {
            target: target_f0_hz,
            lo: cfg.f0_floor_hz,
            hi: cfg.f0_ceil_hz,
        });
    }
    if clip.is_digital_silence() {
        return Ok(clip.clone());
    }
    let contour = estimate_f0(clip, cfg)?;
    if contour.voiced_count() == 0 {
        return Err(ConditionError::NoVoicedFrames);
    }
    let target_period = clip.sample_rate_hz() as f64 / target_f0_hz;
    let samples = resynthesize(clip.samples(), &contour, target_period);
    Ok(clip.with_samples(samples)?)
}

/// A voiced stretch in samples with period knots at frame centers.
struct Segment {
    start: usize,
    end: usize,
    // (sample position, period in samples)
    knots: Vec<(f64, f64)>,
}

impl Segment {
    fn period_at(&self, pos: f64) -> f64 {
        let k = &self.knots;
        if pos <= k[0].0 {
            return k[0].1;
        }
        if pos >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|(p, _)| *p <= pos);
        let (p0, v0) = k[i - 1];
        let (p1, v1) = k[i];
        v0 + (v1 - v0) * (pos - p0) / (p1 - p0)
    }
}

fn voiced_segments(x: &[f64], contour: &PitchContour, sr: f64) -> Vec<Segment> {
    let n = x.len();
    let grid = &contour.grid;
    let f0 = &contour.f0_hz;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for k in (0..f0.len()).filter(|&k| f0[k].is_some()) {
        match runs.last_mut() {
            Some((_, last)) if bridges(x, contour, sr, *last, k) => *last = k,
            _ => runs.push((k, k)),
        }
    }
    runs.into_iter()
        .map(|(first, last)| Segment {
            start: grid.frame_range(first).start,
            end: grid.frame_range(last).end.min(n),
            knots: (first..=last)
                .filter_map(|k| f0[k].map(|f| (grid.frame_center_sample(k), sr / f)))
                .collect(),
        })
        .collect()
}

/// Whether voiced frames `a` and `b` belong to one run.
fn bridges(x: &[f64], contour: &PitchContour, sr: f64, a: usize, b: usize) -> bool {
    let gap = b - a - 1;
    if gap <= MAX_BRIDGED_GAP {
        return true;
    }
    if gap > MAX_PERIODIC_GAP {
        return false;
    }
    let (pa, pb) = (sr / contour.f0_hz[a].unwrap_or(1.0), sr / contour.f0_hz[b].unwrap_or(1.0));
    (a + 1..b).all(|k| {
        let period = pa + (pb - pa) * (k - a) as f64 / (b - a) as f64;
        periodicity(x, contour.grid.frame_center_sample(k).round() as usize, period) >= GAP_PERIODICITY
    })
}

/// Best normalized correlation between the stretch ending at `center` and
/// the one starting there, over lags within 15% of `period`.
fn periodicity(x: &[f64], center: usize, period: f64) -> f64 {
    let lo = (0.85 * period).floor().max(2.0) as usize;
    let hi = (1.15 * period).ceil() as usize;
    if center < hi || center + hi > x.len() {
        return 0.0;
    }
    (lo..=hi)
        .map(|lag| {
            let (a, b) = (&x[center - lag..center], &x[center..center + lag]);
            let dot: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
            let ea: f64 = a.iter().map(|u| u * u).sum();
            let eb: f64 = b.iter().map(|v| v * v).sum();
            if ea > 0.0 && eb > 0.0 { dot / (ea * eb).sqrt() } else { 0.0 }
        })
        .fold(0.0, f64::max)
}

/// Parabolic refinement of an extremum at integer index `i`.
fn refine_peak(x: &[f64], i: usize, polarity: f64) -> f64 {
    if i == 0 || i + 1 >= x.len() {
        return i as f64;
    }
    let (a, b, c) = (polarity * x[i - 1], polarity * x[i], polarity * x[i + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature == 0.0 {
        return i as f64;
    }
    i as f64 + (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
}

fn argmax(x: &[f64], lo: usize, hi: usize, polarity: f64) -> usize {
    (lo..hi)
        .max_by(|&a, &b| (polarity * x[a]).total_cmp(&(polarity * x[b])).then(b.cmp(&a)))
        .unwrap_or(lo)
}

/// Analysis marks anchored at the strongest peak of the first period, each
/// next mark snapped to the strongest peak within a fifth of a period of the
/// point one local period later.
fn analysis_marks(x: &[f64], seg: &Segment) -> Vec<f64> {
    let region = &x[seg.start..seg.end];
    let max = region.iter().copied().fold(f64::MIN, f64::max);
    let min = region.iter().copied().fold(f64::MAX, f64::min);
    let polarity = if max >= -min { 1.0 } else { -1.0 };

    let first_period = seg.period_at(seg.start as f64);
    let hi = (seg.start + first_period.ceil() as usize).min(seg.end);
    let mut mark = refine_peak(x, argmax(x, seg.start, hi.max(seg.start + 1), polarity), polarity);
    let mut marks = Vec::new();
    while mark < seg.end as f64 {
        marks.push(mark);
        let period = seg.period_at(mark);
        let predicted = mark + period;
        let reach = 0.2 * period;
        let lo = ((predicted - reach).ceil().max(mark + 0.5 * period) as usize).max(seg.start);
        let hi = ((predicted + reach).floor() as usize + 1).min(seg.end);
        mark = if lo + 2 < hi {
            refine_peak(x, argmax(x, lo, hi, polarity), polarity)
        } else {
            predicted
        };
    }
    marks
}

fn sample_linear(x: &[f64], pos: f64) -> f64 {
    if pos < 0.0 || pos > (x.len() - 1) as f64 {
        return 0.0;
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= x.len() {
        return x[i];
    }
    x[i] * (1.0 - frac) + x[i + 1] * frac
}

fn resynthesize(x: &[f64], contour: &PitchContour, target_period: f64) -> Vec<f64> {
    let n = x.len();
    let sr = contour.grid.sample_rate_hz() as f64;
    let mut out = x.to_vec();
    let fade = (CROSSFADE_S * sr).round() as usize;

    for seg in voiced_segments(x, contour, sr) {
        let marks = analysis_marks(x, &seg);
        if marks.is_empty() {
            continue;
        }
        let lo = seg.start.saturating_sub(fade);
        let hi = (seg.end + fade).min(n);
        let mut ola = vec![0.0; hi - lo];
        let mut weight = vec![0.0; hi - lo];

        let mut synth = marks[0];
        while synth - target_period < hi as f64 {
            let nearest = marks
                .partition_point(|&m| m < synth)
                .min(marks.len() - 1);
            let nearest = if nearest > 0 && (synth - marks[nearest - 1]) < (marks[nearest] - synth) {
                nearest - 1
            } else {
                nearest
            };
            let analysis = marks[nearest];
            let half = seg.period_at(analysis).max(1.0);
            let from = (synth - half).ceil().max(lo as f64) as usize;
            let to = ((synth + half).floor() as usize + 1).min(hi);
            for t in from..to {
                let offset = t as f64 - synth;
                let w = 0.5 + 0.5 * (std::f64::consts::PI * offset / half).cos();
                ola[t - lo] += w * sample_linear(x, analysis + offset);
                weight[t - lo] += w;
            }
            synth += target_period;
        }

        let synthesized: Vec<f64> = (lo..hi)
            .map(|t| {
                let w = weight[t - lo];
                if w > 1e-3 { ola[t - lo] / w } else { x[t] }
            })
            .collect();
        let synthesized = match_energy(&x[lo..hi], synthesized, sr);
        for t in lo..hi {
            // crossfade weight: 1 inside the segment, ramping to 0 over `fade` outside it
            let inside = if t < seg.start {
                1.0 - (seg.start - t) as f64 / (fade + 1) as f64
            } else if t >= seg.end {
                1.0 - (t + 1 - seg.end) as f64 / (fade + 1) as f64
            } else {
                1.0
            };
            out[t] = inside * synthesized[t - lo] + (1.0 - inside) * x[t];
        }
    }
    out
}

/// Rescales `y` so its short-time energy follows that of `x`. Overlap-add
/// of weakly periodic material partly cancels; this restores its level.
fn match_energy(x: &[f64], mut y: Vec<f64>, sr: f64) -> Vec<f64> {
    let width = ((ENERGY_MATCH_S * sr).round() as usize).max(1);
    let (before, after) = (width / 2, width - width / 2);
    let ex = moving_average(&x.iter().map(|v| v * v).collect::<Vec<_>>(), before, after);
    let ey = moving_average(&y.iter().map(|v| v * v).collect::<Vec<_>>(), before, after);
    for ((v, a), b) in y.iter_mut().zip(&ex).zip(&ey) {
        if *b > 0.0 {
            *v *= (a / b).sqrt().clamp(1.0 / ENERGY_MATCH_LIMIT, ENERGY_MATCH_LIMIT);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prosody::{estimate_f0, mean_f0};
    use crate::synth;

    fn std_dev(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    }

    #[test]
    fn constant_tone_keeps_its_pitch() {
        let clip = synth::tone(200.0, 1.0, 0.5, 16_000).unwrap();
        let out = flatten_pitch(&clip, 200.0).unwrap();
        assert_eq!(out.len(), clip.len());
        let contour = estimate_f0(&out, &PitchConfig::default()).unwrap();
        assert!(contour.voiced_fraction() > 0.9);
        for f in contour.voiced() {
            assert!((f - 200.0).abs() <= 2.0, "f0 {f}");
        }
    }

    #[test]
    fn vibrato_is_flattened() {
        let clip = synth::vibrato(200.0, 20.0, 5.0, 1.0, 0.5, 16_000).unwrap();
        let input_mean = mean_f0(&estimate_f0(&clip, &PitchConfig::default()).unwrap()).unwrap();
        let out = flatten_pitch(&clip, input_mean).unwrap();
        assert_eq!(out.len(), clip.len());
        let voiced: Vec<f64> = estimate_f0(&out, &PitchConfig::default()).unwrap().voiced().collect();
        let mean = voiced.iter().sum::<f64>() / voiced.len() as f64;
        assert!(std_dev(&voiced) <= 5.0, "std {}", std_dev(&voiced));
        assert!((mean - input_mean).abs() <= 5.0, "mean {mean} vs {input_mean}");
    }

    #[test]
    fn fast_glides_are_flattened_through_tracker_dropouts() {
        let f0 = |t: f64| 119.0 + 17.5 * (2.0 * std::f64::consts::PI * 6.0 * t).sin();
        let clip = synth::speech_like(f0, 2.0, 0.3, 16_000).unwrap();
        let contour = estimate_f0(&clip, &PitchConfig::default()).unwrap();
        assert!(contour.voiced_fraction() < 0.6);
        let out = flatten_pitch(&clip, mean_f0(&contour).unwrap()).unwrap();
        let voiced: Vec<f64> = estimate_f0(&out, &PitchConfig::default()).unwrap().voiced().collect();
        assert!(std_dev(&voiced) <= 5.0, "std {}", std_dev(&voiced));
    }

    #[test]
    fn noise_gaps_are_not_bridged() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..16_000).map(|_| rng.random_range(-0.5..0.5)).collect();
        assert!(periodicity(&x, 8_000, 120.0) < GAP_PERIODICITY);
        let tone = synth::tone(133.0, 1.0, 0.5, 16_000).unwrap();
        assert!(periodicity(tone.samples(), 8_000, 120.3) > 0.99);
    }

    #[test]
    fn shifts_a_tone_to_the_target() {
        let clip = synth::tone(150.0, 0.8, 0.5, 16_000).unwrap();
        let out = flatten_pitch(&clip, 170.0).unwrap();
        let voiced: Vec<f64> = estimate_f0(&out, &PitchConfig::default()).unwrap().voiced().collect();
        let mean = voiced.iter().sum::<f64>() / voiced.len() as f64;
        assert!((mean - 170.0).abs() <= 2.0, "mean {mean}");
    }

    #[test]
    fn silence_passes_through() {
        let clip = AudioClip::silence(16_000, 16_000).unwrap();
        assert_eq!(flatten_pitch(&clip, 200.0).unwrap(), clip);
    }

    #[test]
    fn errors() {
        let clip = synth::tone(200.0, 0.5, 0.5, 16_000).unwrap();
        assert!(matches!(
            flatten_pitch(&clip, 1_000.0),
            Err(ConditionError::TargetOutOfRange { .. })
        ));
        // a DC offset is audible energy with no periodicity
        let dc = AudioClip::new(vec![0.25; 16_000], 16_000).unwrap();
        assert!(matches!(flatten_pitch(&dc, 200.0), Err(ConditionError::NoVoicedFrames)));
    }
}
