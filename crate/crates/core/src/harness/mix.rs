use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{HarnessError, Manifest, Result, Split};
use crate::eval::derangement;

/// A manifest to draw from, the fraction of its records to take and the
/// label appended to sampled ids.
#[derive(Debug, Clone, Copy)]
pub struct MixSource<'a> {
    pub manifest: &'a Manifest,
    pub fraction: f64,
    pub label: &'a str,
}

/// `primary` followed by ⌊fraction·n⌋ records drawn uniformly without
/// replacement from each source, in source order. Sampled ids become
/// `{id}@{label}`.
pub fn mix_manifests(primary: &Manifest, others: &[MixSource<'_>], seed: u64) -> Result<Manifest> {
    let mut records = primary.records.clone();
    for (i, src) in others.iter().enumerate() {
        if !(0.0..=1.0).contains(&src.fraction) {
            return Err(HarnessError::Config(format!(
                "mix fraction {} outside [0, 1]",
                src.fraction
            )));
        }
        let n = src.manifest.len();
        let take = (src.fraction * n as f64).floor() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let mut picked = sample(&mut rng, n, take).into_vec();
        picked.sort_unstable();
        records.extend(picked.into_iter().map(|j| {
            let mut r = src.manifest.records[j].clone();
            r.id = format!("{}@{}", r.id, src.label);
            r
        }));
    }
    Manifest::new(records)
}

/// Re-pairs the records of one split: record `i` keeps its id and question
/// but takes the document and gold spans of record `perm[i]` for a seeded
/// derangement `perm`. Other splits are untouched.
pub fn shuffle_manifest_pairs(manifest: &Manifest, split: Split, seed: u64) -> Result<Manifest> {
    let idx: Vec<usize> = (0..manifest.len())
        .filter(|&i| manifest.records[i].split == split)
        .collect();
    let perm = derangement(idx.len(), seed).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut records = manifest.records.clone();
    for (slot, &p) in perm.iter().enumerate() {
        let donor = &manifest.records[idx[p]];
        records[idx[slot]].document = donor.document.clone();
        records[idx[slot]].gold_spans = donor.gold_spans.clone();
    }
    Manifest::new(records)
}
