use std::collections::{BTreeMap, BTreeSet};

use super::{aos, ff1, EvalError, QAItem, Result, TimeSpan};

/// Predicted spans of one seed, keyed by item id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeedPredictions {
    pub seed: u64,
    pub spans: BTreeMap<String, TimeSpan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemScore {
    pub id: String,
    pub ff1: f64,
    pub aos: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedScore {
    pub seed: u64,
    /// Ordered by item id.
    pub items: Vec<ItemScore>,
    pub mean_ff1: f64,
    pub mean_aos: f64,
}

/// Per-seed corpus means and their spread across seeds, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub per_seed: Vec<SeedScore>,
    pub mean_ff1_pct: f64,
    pub std_ff1_pct: f64,
    pub mean_aos_pct: f64,
    pub std_aos_pct: f64,
    pub n_items: usize,
    pub n_seeds: usize,
}

pub fn evaluate_set(items: &[QAItem], predictions: &[SeedPredictions]) -> Result<EvalResult> {
    if items.is_empty() {
        return Err(EvalError::EmptySet);
    }
    if predictions.is_empty() {
        return Err(EvalError::NoSeeds);
    }
    let mut ordered: Vec<&QAItem> = items.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    let mut ids = BTreeSet::new();
    for item in &ordered {
        if !ids.insert(item.id.as_str()) {
            return Err(EvalError::DuplicateId(item.id.clone()));
        }
    }

    let mut per_seed = Vec::with_capacity(predictions.len());
    for seed_preds in predictions {
        let mut scores = Vec::with_capacity(ordered.len());
        for item in &ordered {
            let pred = *seed_preds
                .spans
                .get(&item.id)
                .ok_or_else(|| EvalError::MissingPrediction {
                    id: item.id.clone(),
                    seed: seed_preds.seed,
                })?;
            let f = ff1(pred, &item.gold_spans)?;
            scores.push(ItemScore {
                id: item.id.clone(),
                ff1: f.ff1,
                aos: aos(pred, &item.gold_spans)?,
                precision: f.precision,
                recall: f.recall,
            });
        }
        let n = scores.len() as f64;
        per_seed.push(SeedScore {
            seed: seed_preds.seed,
            mean_ff1: scores.iter().map(|s| s.ff1).sum::<f64>() / n,
            mean_aos: scores.iter().map(|s| s.aos).sum::<f64>() / n,
            items: scores,
        });
    }

    let (mean_ff1_pct, std_ff1_pct) = mean_and_sample_std(per_seed.iter().map(|s| 100.0 * s.mean_ff1));
    let (mean_aos_pct, std_aos_pct) = mean_and_sample_std(per_seed.iter().map(|s| 100.0 * s.mean_aos));
    Ok(EvalResult {
        n_items: ordered.len(),
        n_seeds: per_seed.len(),
        per_seed,
        mean_ff1_pct,
        std_ff1_pct,
        mean_aos_pct,
        std_aos_pct,
    })
}

/// Mean and n-1 standard deviation; the deviation is 0 for a single value.
fn mean_and_sample_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
