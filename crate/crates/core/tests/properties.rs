use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prosoqa::audio::{
    band_energy, read_wav, write_wav_as, AudioClip, FrameGrid, SampleFormat,
};
use prosoqa::condition::{apply_condition, low_pass, white_noise_like, ConditionSpec};
use prosoqa::eval::{aos, derangement, evaluate_set, ff1, shuffle_pairs, QAItem, SeedPredictions, TimeSpan};
use prosoqa::prosody::{estimate_f0, intensity_contour, IntensityConfig, PitchConfig};
use prosoqa::synth;
use prosoqa::units::{
    deduplicate, expand, quantize, squared_distance, train_kmeans_rows, Codebook, FeatureMatrix, KmeansConfig,
};

const SR: u32 = 16_000;

fn noise(seed: u64, secs: f64) -> AudioClip {
    white_noise_like(secs, SR, seed, -20.0).unwrap()
}

// absolute energy in [lo, hi)
fn energy(clip: &AudioClip, lo: f64, hi: f64) -> f64 {
    let total: f64 = clip.samples().iter().map(|v| v * v).sum();
    band_energy(clip, lo, hi).unwrap() * total
}

fn span() -> impl Strategy<Value = TimeSpan> {
    (0.0..100.0f64, 0.0..30.0f64).prop_map(|(s, d)| TimeSpan::new(s, s + d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wav_round_trip_is_lossless_at_stored_depth(
        raw in prop::collection::vec(-1.0f64..1.0, 1..2_000),
        float in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let format = if float { SampleFormat::Float32 } else { SampleFormat::Pcm16 };
        let stored: Vec<f64> = if float {
            raw.iter().map(|&v| v as f32 as f64).collect()
        } else {
            raw.iter().map(|&v| (v * 32_768.0).round().clamp(-32_768.0, 32_767.0) / 32_768.0).collect()
        };
        let clip = AudioClip::new(stored, SR).unwrap();
        write_wav_as(&clip, &path, format).unwrap();
        prop_assert_eq!(read_wav(&path).unwrap(), clip);
    }

    #[test]
    fn band_energies_of_a_cover_sum_to_one(seed in any::<u64>(), cuts in prop::collection::btree_set(1u32..7_999, 1..6)) {
        let clip = noise(seed, 0.25);
        let mut edges = vec![0.0];
        edges.extend(cuts.iter().map(|&c| c as f64));
        edges.push(8_000.0);
        let sum: f64 = edges.windows(2).map(|w| band_energy(&clip, w[0], w[1]).unwrap()).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-6, "sum {}", sum);
    }

    #[test]
    fn frame_grid_times_map_back(n in 400usize..50_000, hop_ms in 5u32..=25) {
        let grid = FrameGrid::new(0.025, hop_ms as f64 / 1_000.0, SR, n).unwrap();
        let frames = (n.saturating_sub(grid.window_len())) / grid.hop_len() + 1;
        for i in 0..frames {
            prop_assert_eq!(grid.frame_at_start(grid.frame_start_s(i)), Some(i));
        }
        prop_assert_eq!(grid.frame_at_start(grid.frame_start_s(frames)), None);
    }

    #[test]
    fn metric_bounds_and_symmetry(pred in span(), gold in span()) {
        let f = ff1(pred, &[gold]).unwrap().ff1;
        let a = aos(pred, &[gold]).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(a <= f + 1e-12 && f <= 1.0);
        prop_assert!((ff1(gold, &[pred]).unwrap().ff1 - f).abs() < 1e-12);
        prop_assert!((aos(gold, &[pred]).unwrap() - a).abs() < 1e-12);
        prop_assert_eq!(ff1(pred, &[pred]).unwrap().ff1, 1.0);
        prop_assert_eq!(aos(pred, &[pred]).unwrap(), 1.0);
        let later = TimeSpan::new(pred.end_s + 0.5, pred.end_s + 1.0).unwrap();
        prop_assert_eq!(ff1(pred, &[later]).unwrap().ff1, 0.0);
        prop_assert_eq!(aos(pred, &[later]).unwrap(), 0.0);
    }

    #[test]
    fn dedup_round_trips_and_is_idempotent(s in prop::collection::vec(0u32..6, 0..300)) {
        let d = deduplicate(&s);
        prop_assert_eq!(expand(&d), s.clone());
        prop_assert_eq!(d.run_lengths.iter().sum::<usize>(), s.len());
        prop_assert!(d.units.windows(2).all(|w| w[0] != w[1]));
        let again = deduplicate(&d.units);
        prop_assert_eq!(&again.units, &d.units);
        prop_assert!(again.run_lengths.iter().all(|&r| r == 1));
    }

    #[test]
    fn shuffle_pairs_has_no_fixed_points(n in 2usize..80, seed in any::<u64>()) {
        let perm = derangement(n, seed).unwrap();
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        prop_assert!(perm.iter().enumerate().all(|(i, &p)| i != p));
        prop_assert_eq!(derangement(n, seed).unwrap(), perm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lloyd_inertia_never_increases(seed in any::<u64>(), n in 20usize..300, k in 1usize..12, dim in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let cfg = KmeansConfig { k: k.min(n), seed, max_iters: 50, tol: 0.0 };
        let trace = train_kmeans_rows(&data, dim, &cfg).unwrap();
        for w in trace.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
        let again = train_kmeans_rows(&data, dim, &cfg).unwrap();
        prop_assert_eq!(again.codebook, trace.codebook);
    }

    #[test]
    fn quantize_picks_the_nearest_centroid(seed in any::<u64>(), k in 1usize..20, frames in 1usize..200) {
        let dim = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centroids: Vec<f64> = (0..k * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let codebook = Codebook::new(k, dim, 0, centroids, None).unwrap();
        let values: Vec<f64> = (0..frames * dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        let grid = FrameGrid::new(0.025, 0.020, SR, 400 + (frames - 1) * 320).unwrap();
        let feats = FeatureMatrix::new(grid, dim, values).unwrap();
        let units = quantize(&feats, &codebook).unwrap().units;
        for (row, &u) in feats.rows().zip(&units) {
            let best = (0..k)
                .map(|c| squared_distance(row, codebook.centroid(c)))
                .enumerate()
                .fold((0, f64::INFINITY), |b, (c, d)| if d < b.1 { (c, d) } else { b });
            prop_assert_eq!(u as usize, best.0);
        }
    }

    #[test]
    fn evaluate_set_ignores_item_order(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let items: Vec<QAItem> = (0..n)
            .map(|i| {
                let s = rng.random_range(0.0..50.0);
                QAItem {
                    id: format!("i{i}"),
                    question: format!("q{i}"),
                    document: format!("d{i}"),
                    gold_spans: vec![TimeSpan::new(s, s + rng.random_range(0.0..5.0)).unwrap()],
                    document_duration_s: 60.0,
                    gold_meaningful: true,
                }
            })
            .collect();
        let preds = vec![SeedPredictions {
            seed: 0,
            spans: items
                .iter()
                .map(|it| {
                    let s = rng.random_range(0.0..55.0);
                    (it.id.clone(), TimeSpan::new(s, s + 5.0).unwrap())
                })
                .collect(),
        }];
        let mut shuffled = items.clone();
        shuffled.reverse();
        shuffled.rotate_left(n / 3);
        prop_assert_eq!(evaluate_set(&items, &preds).unwrap(), evaluate_set(&shuffled, &preds).unwrap());
        if n >= 2 {
            let paired = shuffle_pairs(&items, seed).unwrap();
            prop_assert!(paired.iter().zip(&items).all(|(p, i)| p.document != i.document));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn low_pass_is_idempotent(seed in any::<u64>(), cutoff_ix in 0usize..11) {
        let cutoff = prosoqa::harness::DEFAULT_SWEEP_CUTOFFS_HZ[cutoff_ix];
        let once = low_pass(&noise(seed, 0.5), cutoff).unwrap();
        let twice = low_pass(&once, cutoff).unwrap();
        for (lo, hi) in [(0.0, cutoff / 2.0), (cutoff / 2.0, cutoff)] {
            let change = 10.0 * (energy(&twice, lo, hi) / energy(&once, lo, hi)).log10();
            prop_assert!(change.abs() <= 0.5, "[{}, {}) changed {:.3} dB", lo, hi, change);
        }
    }

    #[test]
    fn low_pass_is_monotone_in_cutoff(seed in any::<u64>(), a in 0usize..11, b in 0usize..11) {
        prop_assume!(a < b);
        let cutoffs = prosoqa::harness::DEFAULT_SWEEP_CUTOFFS_HZ;
        let (c1, c2) = (cutoffs[a], cutoffs[b]);
        let x = noise(seed, 0.5);
        let above = |clip: &AudioClip| energy(clip, c2, 8_000.0);
        let e1 = above(&low_pass(&x, c1).unwrap());
        let e2 = above(&low_pass(&x, c2).unwrap());
        prop_assert!(e1 <= e2 * 10f64.powf(0.1), "{} Hz: {:e}, {} Hz: {:e}", c1, e1, c2, e2);
    }

    #[test]
    fn conditions_keep_the_sample_count(seed in any::<u64>(), n in 2_000usize..20_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f0 = rng.random_range(90.0..250.0);
        let clip = synth::vibrato(f0, 10.0, 4.0, n as f64 / SR as f64, 0.4, SR).unwrap();
        let clip = clip.with_samples(clip.samples()[..n.min(clip.len())].to_vec()).unwrap();
        for spec in [
            ConditionSpec::Natural,
            ConditionSpec::Lexical,
            ConditionSpec::prosodic(300.0),
            ConditionSpec::noise(seed),
        ] {
            prop_assert_eq!(apply_condition(&clip, &spec).unwrap().len(), clip.len());
        }
    }

    #[test]
    fn pitch_is_deterministic_and_reverses(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        for _ in 0..4 {
            let tone = synth::tone(rng.random_range(100.0..250.0), rng.random_range(0.1..0.3), 0.5, SR).unwrap();
            samples.extend_from_slice(tone.samples());
            samples.extend(std::iter::repeat_n(0.0, rng.random_range(800..4_000)));
        }
        // whole hops past the first window, so reversed frames land on forward frames
        let hop = 160;
        let window = 640;
        samples.resize(window + (samples.len() - window).div_ceil(hop) * hop, 0.0);
        let clip = AudioClip::new(samples, SR).unwrap();
        let cfg = PitchConfig::default();
        let fwd = estimate_f0(&clip, &cfg).unwrap();
        prop_assert_eq!(&estimate_f0(&clip, &cfg).unwrap(), &fwd);
        let rev = estimate_f0(&clip.reversed(), &cfg).unwrap();
        let v: Vec<bool> = fwd.f0_hz.iter().map(Option::is_some).collect();
        let r: Vec<bool> = rev.f0_hz.iter().map(Option::is_some).collect();
        prop_assert_eq!(v.len(), r.len());
        let m = v.len();
        for i in 0..m {
            let mirror = m - 1 - i;
            let lo = mirror.saturating_sub(1);
            let hi = (mirror + 1).min(m - 1);
            prop_assert!((lo..=hi).any(|j| v[j] == r[i]), "frame {}", i);
        }
    }

    #[test]
    fn intensity_shifts_with_gain(seed in any::<u64>(), gain_db in -30.0f64..20.0) {
        let clip = noise(seed, 0.5);
        let cfg = IntensityConfig::default();
        let g = 10f64.powf(gain_db / 20.0);
        let base = intensity_contour(&clip, &cfg).unwrap();
        let scaled = intensity_contour(&clip.scaled(g), &cfg).unwrap();
        for (a, b) in base.level_db.iter().zip(&scaled.level_db) {
            if *a > base.floor_db && *b > scaled.floor_db {
                prop_assert!((b - a - gain_db).abs() <= 0.01, "{} -> {}", a, b);
            }
        }
    }
}
