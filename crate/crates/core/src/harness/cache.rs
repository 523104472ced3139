//! Content-addressed condition cache.
//!
//! An entry's key hashes the source audio bytes together with the full
//! condition spec, so renamed inputs hit the cache and any parameter change
//! misses it. Entries are written to a temporary file and renamed into
//! place; the sidecar JSON is written last and marks the entry complete.
//! Transformed audio is stored as 32-bit float.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use super::{HarnessError, Manifest, Result};
use crate::audio::{read_wav, to_canonical_rate, write_wav_as, SampleFormat, CANONICAL_SAMPLE_RATE_HZ};
use crate::condition::{apply_condition, ConditionSpec};

/// Environment variable naming the default cache directory.
pub const CACHE_ENV_VAR: &str = "PROSOQA_CACHE_DIR";

const KEY_DOMAIN: &[u8] = b"prosoqa-cache-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub key: String,
    pub source_sha256: String,
    pub spec: ConditionSpec,
    /// Per-clip seed actually used by the noise condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<u64>,
    /// Gain applied to keep the stored waveform within full scale.
    pub peak_gain: f64,
    pub sample_rate_hz: u32,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Materialized {
    pub manifest: Manifest,
    pub written: usize,
    pub reused: usize,
}

fn spec_json(spec: &ConditionSpec) -> String {
    serde_json::to_string(spec).expect("spec serializes")
}

pub fn cache_key(content: &[u8], spec: &ConditionSpec) -> String {
    let content_hash = Sha256::digest(content);
    let mut h = Sha256::new();
    h.update(KEY_DOMAIN);
    h.update([0]);
    h.update(content_hash);
    h.update(spec_json(spec).as_bytes());
    hex::encode(h.finalize())
}

/// Noise seed for one clip: the spec seed mixed with the clip's content hash,
/// so different clips never share a noise realization.
fn clip_noise_seed(seed: u64, content_hash: &[u8]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(content_hash);
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

fn persist(dir: &Path, target: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let tmp = NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    write(tmp.path())?;
    tmp.persist(target).map_err(|e| HarnessError::io(target, e.error))?;
    Ok(())
}

fn materialize_one(source: &Path, bytes: &[u8], spec: &ConditionSpec, dir: &Path) -> Result<(PathBuf, bool)> {
    let key = cache_key(bytes, spec);
    let wav_path = dir.join(format!("{key}.wav"));
    let sidecar_path = dir.join(format!("{key}.json"));
    if wav_path.is_file() && sidecar_path.is_file() {
        return Ok((wav_path, false));
    }
    let content_hash = Sha256::digest(bytes);
    let sidecar = match spec {
        ConditionSpec::Natural => {
            persist(dir, &wav_path, |p| fs::write(p, bytes).map_err(|e| HarnessError::io(p, e)))?;
            let clip = read_wav(source).map_err(|e| HarnessError::Config(e.to_string()))?;
            Sidecar {
                key: key.clone(),
                source_sha256: hex::encode(content_hash),
                spec: *spec,
                noise_seed: None,
                peak_gain: 1.0,
                sample_rate_hz: clip.sample_rate_hz(),
                n_samples: clip.len(),
            }
        }
        _ => {
            let clip = read_wav(source)
                .and_then(|c| to_canonical_rate(&c))
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let (effective, noise_seed) = match *spec {
                ConditionSpec::Noise {
                    noise_seed,
                    noise_level_db,
                } => {
                    let seed = clip_noise_seed(noise_seed, &content_hash);
                    (
                        ConditionSpec::Noise {
                            noise_seed: seed,
                            noise_level_db,
                        },
                        Some(seed),
                    )
                }
                other => (other, None),
            };
            let out = apply_condition(&clip, &effective).map_err(|e| HarnessError::Config(e.to_string()))?;
            let (out, peak_gain) = out.peak_normalized();
            persist(dir, &wav_path, |p| {
                write_wav_as(&out, p, SampleFormat::Float32).map_err(|e| HarnessError::Config(e.to_string()))
            })?;
            Sidecar {
                key: key.clone(),
                source_sha256: hex::encode(content_hash),
                spec: *spec,
                noise_seed,
                peak_gain,
                sample_rate_hz: out.sample_rate_hz(),
                n_samples: out.len(),
            }
        }
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    persist(dir, &sidecar_path, |p| fs::write(p, json).map_err(|e| HarnessError::io(p, e)))?;
    Ok((wav_path, true))
}

fn failure_message(err: HarnessError) -> String {
    match err {
        HarnessError::Config(m) => m,
        other => other.to_string(),
    }
}

/// Transforms each distinct clip once. Returns source → cached path plus
/// the numbers of entries written and reused.
pub fn materialize_clips(
    sources: &[PathBuf],
    spec: &ConditionSpec,
    cache_dir: &Path,
) -> Result<(BTreeMap<PathBuf, PathBuf>, usize, usize)> {
    spec.validate(CANONICAL_SAMPLE_RATE_HZ)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let dir = cache_dir.join(spec.label());
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;

    let mut unique: Vec<&PathBuf> = sources.iter().collect();
    unique.sort();
    unique.dedup();
    let outcomes: Vec<(PathBuf, Result<(PathBuf, bool)>)> = unique
        .par_iter()
        .map(|src| {
            let result = fs::read(src)
                .map_err(|e| HarnessError::io(src, e))
                .and_then(|bytes| materialize_one(src, &bytes, spec, &dir));
            ((*src).clone(), result)
        })
        .collect();

    let mut map = BTreeMap::new();
    let mut failures = Vec::new();
    let (mut written, mut reused) = (0, 0);
    for (src, outcome) in outcomes {
        match outcome {
            Ok((path, fresh)) => {
                if fresh {
                    written += 1;
                } else {
                    reused += 1;
                }
                map.insert(src, path);
            }
            Err(e) => failures.push((src, failure_message(e))),
        }
    }
    if !failures.is_empty() {
        return Err(HarnessError::Materialize {
            total: unique.len(),
            failures,
        });
    }
    Ok((map, written, reused))
}

/// Applies `spec` to every question and document of the manifest and
/// returns a copy pointing at the cached audio.
pub fn materialize_condition(manifest: &Manifest, spec: &ConditionSpec, cache_dir: &Path) -> Result<Materialized> {
    let sources: Vec<PathBuf> = manifest
        .records
        .iter()
        .flat_map(|r| [r.question.clone(), r.document.clone()])
        .collect();
    let (map, written, reused) = materialize_clips(&sources, spec, cache_dir)?;
    let label = spec.label();
    let records = manifest
        .records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.question = map[&r.question].clone();
            r.document = map[&r.document].clone();
            r.condition = Some(label.clone());
            r
        })
        .collect();
    Ok(Materialized {
        manifest: Manifest { records },
        written,
        reused,
    })
}
