//! Synthetic spoken QA corpora with planted answers.
//!
//! A vocabulary of stationary multi-tone "phones" is strung into questions
//! and documents; each document contains a copy of its question's phone
//! sequence at a phone boundary, and that copy is the gold span. Phone
//! durations are whole feature hops so repeated phones quantize alike.
//! Every phone also carries a shared 150 Hz voicing tone, so nothing below
//! 300 Hz tells phones apart.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{load_manifest, write_manifest, HarnessError, Manifest, ManifestRecord, Result, Split};
use crate::audio::{db_to_amplitude, write_wav, AudioClip};
use crate::eval::TimeSpan;

/// Where the phones differ from one another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    /// Three tones drawn from 300 to 3700 Hz.
    Wide,
    /// Two tones drawn from 700 to 1300 Hz.
    Narrow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpusConfig {
    pub n_items: usize,
    pub test_fraction: f64,
    pub vocab_size: usize,
    pub question_phones: usize,
    pub document_phones: usize,
    /// Phone durations in hops, inclusive.
    pub phone_hops: (usize, usize),
    pub hop_s: f64,
    pub band: Band,
    /// Level of the independent background noise in each clip, dBFS.
    pub noise_db: f64,
    pub sample_rate_hz: u32,
    pub seed: u64,
}

impl Default for SyntheticCorpusConfig {
    fn default() -> Self {
        Self {
            n_items: 200,
            test_fraction: 0.5,
            vocab_size: 20,
            question_phones: 12,
            document_phones: 60,
            phone_hops: (3, 6),
            hop_s: 0.020,
            band: Band::Wide,
            noise_db: -50.0,
            sample_rate_hz: 16_000,
            seed: 0,
        }
    }
}

const TONE_AMPLITUDE: f64 = 0.2;
const CARRIER_HZ: f64 = 150.0;
const RAMP_S: f64 = 0.003;

#[derive(Debug, Clone)]
struct Phone {
    tones: Vec<f64>,
}

fn vocabulary(cfg: &SyntheticCorpusConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Phone>> {
    let (grid, per_phone): (Vec<f64>, usize) = match cfg.band {
        Band::Wide => ((0..18).map(|i| 300.0 + 200.0 * i as f64).collect(), 3),
        Band::Narrow => ((0..7).map(|i| 700.0 + 100.0 * i as f64).collect(), 2),
    };
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut attempts = 0;
    while seen.len() < cfg.vocab_size {
        attempts += 1;
        if attempts > 100_000 {
            return Err(HarnessError::Config(format!(
                "cannot draw {} distinct phones for this band",
                cfg.vocab_size
            )));
        }
        let mut combo = sample(rng, grid.len(), per_phone).into_vec();
        combo.sort_unstable();
        if !seen.contains(&combo) {
            seen.push(combo);
        }
    }
    Ok(seen
        .into_iter()
        .map(|c| Phone {
            tones: c.into_iter().map(|i| grid[i]).collect(),
        })
        .collect())
}

fn render(phones: &[(usize, usize)], vocab: &[Phone], hop: usize, sr: f64, out: &mut Vec<f64>) {
    let ramp = (RAMP_S * sr).round() as usize;
    for &(p, hops) in phones {
        let n = hops * hop;
        let phone = &vocab[p];
        for t in 0..n {
            let time = t as f64 / sr;
            let v = (2.0 * PI * CARRIER_HZ * time).sin()
                + phone.tones.iter().map(|f| (2.0 * PI * f * time).sin()).sum::<f64>();
            let edge = t.min(n - 1 - t);
            let env = if edge < ramp {
                0.5 - 0.5 * (PI * edge as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            out.push(TONE_AMPLITUDE * env * v);
        }
    }
}

fn draw_phones(n: usize, cfg: &SyntheticCorpusConfig, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    (0..n)
        .map(|_| {
            (
                rng.random_range(0..cfg.vocab_size),
                rng.random_range(cfg.phone_hops.0..=cfg.phone_hops.1),
            )
        })
        .collect()
}

fn add_noise(x: &mut [f64], level_db: f64, rng: &mut ChaCha8Rng) {
    let scale = db_to_amplitude(level_db);
    for v in x {
        let z: f64 = StandardNormal.sample(rng);
        *v += scale * z;
    }
}

/// Writes `audio/` and `manifest.jsonl` under `dir` and returns the loaded manifest.
pub fn write_synthetic_corpus(dir: impl AsRef<Path>, cfg: &SyntheticCorpusConfig) -> Result<Manifest> {
    let dir = dir.as_ref();
    if cfg.question_phones == 0 || cfg.document_phones < cfg.question_phones {
        return Err(HarnessError::Config("document must be able to hold the question".into()));
    }
    if cfg.phone_hops.0 == 0 || cfg.phone_hops.0 > cfg.phone_hops.1 {
        return Err(HarnessError::Config(format!("phone duration range {:?}", cfg.phone_hops)));
    }
    if !(0.0..=1.0).contains(&cfg.test_fraction) {
        return Err(HarnessError::Config(format!("test fraction {}", cfg.test_fraction)));
    }
    let audio = dir.join("audio");
    fs::create_dir_all(&audio).map_err(|e| HarnessError::io(&audio, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = vocabulary(cfg, &mut rng)?;
    let sr = cfg.sample_rate_hz as f64;
    let hop = (cfg.hop_s * sr).round() as usize;
    let n_test = (cfg.test_fraction * cfg.n_items as f64).round() as usize;
    let n_train = cfg.n_items - n_test;

    let records = (0..cfg.n_items)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            let question = draw_phones(cfg.question_phones, cfg, &mut rng);
            let before = rng.random_range(0..=cfg.document_phones - cfg.question_phones);
            let pre = draw_phones(before, cfg, &mut rng);
            let post = draw_phones(cfg.document_phones - cfg.question_phones - before, cfg, &mut rng);

            let mut q = Vec::new();
            render(&question, &vocab, hop, sr, &mut q);
            let mut d = Vec::new();
            render(&pre, &vocab, hop, sr, &mut d);
            let start = d.len();
            d.extend_from_slice(&q);
            let end = d.len();
            render(&post, &vocab, hop, sr, &mut d);
            add_noise(&mut q, cfg.noise_db, &mut rng);
            add_noise(&mut d, cfg.noise_db, &mut rng);

            let id = format!("item{i:04}");
            let q_rel = PathBuf::from("audio").join(format!("{id}_q.wav"));
            let d_rel = PathBuf::from("audio").join(format!("{id}_d.wav"));
            for (rel, samples) in [(&q_rel, q), (&d_rel, d)] {
                let clip = AudioClip::new(samples, cfg.sample_rate_hz)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                write_wav(&clip, dir.join(rel)).map_err(|e| HarnessError::Config(e.to_string()))?;
            }
            Ok(ManifestRecord {
                id,
                question: q_rel,
                document: d_rel,
                gold_spans: vec![TimeSpan::new(start as f64 / sr, end as f64 / sr)
                    .map_err(|e| HarnessError::Config(e.to_string()))?],
                split: if i < n_train { Split::Train } else { Split::Test },
                condition: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let path = dir.join("manifest.jsonl");
    write_manifest(&Manifest::new(records)?, &path)?;
    load_manifest(path)
}
