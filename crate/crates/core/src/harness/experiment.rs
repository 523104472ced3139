use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{materialize_clips, HarnessError, Manifest, ManifestRecord, Result, Split, Stage};
use crate::audio::{read_wav, to_canonical_rate, CANONICAL_SAMPLE_RATE_HZ};
use crate::condition::{ConditionSpec, MIN_CUTOFF_HZ};
use crate::eval::{
    evaluate_set, predict_span, shuffle_pairs, EvalResult, Prediction, PredictorConfig, QAItem, ResultsRow,
    SeedPredictions,
};
use crate::units::{
    extract_features, quantize, train_kmeans_rows, Codebook, DedupUnitSequence, FeatureConfig, FeatureMatrix,
    KmeansConfig,
};

pub const DEFAULT_SWEEP_CUTOFFS_HZ: [f64; 11] =
    [50.0, 100.0, 200.0, 300.0, 400.0, 500.0, 800.0, 1200.0, 1800.0, 2400.0, 3000.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for CodebookParams {
    fn default() -> Self {
        let d = KmeansConfig::default();
        Self {
            k: d.k,
            seed: d.seed,
            max_iters: d.max_iters,
            tol: d.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train: ConditionSpec,
    pub test: ConditionSpec,
    pub codebook: CodebookParams,
    pub features: FeatureConfig,
    pub predictor: PredictorConfig,
    /// One codebook and one set of predictions per seed.
    pub seeds: Vec<u64>,
    pub cache_dir: PathBuf,
    /// Re-pairs test questions with other items' documents when set.
    pub shuffle_seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(train: ConditionSpec, test: ConditionSpec, cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            train,
            test,
            codebook: CodebookParams::default(),
            features: FeatureConfig::default(),
            predictor: PredictorConfig::default(),
            seeds: vec![0],
            cache_dir: cache_dir.into(),
            shuffle_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds list is empty".into()));
        }
        if self.codebook.k == 0 {
            return Err(HarnessError::Config("codebook k must be at least 1".into()));
        }
        for spec in [&self.train, &self.test] {
            spec.validate(CANONICAL_SAMPLE_RATE_HZ)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        self.predictor
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn kmeans(&self, run_seed: u64) -> KmeansConfig {
        KmeansConfig {
            k: self.codebook.k,
            seed: self.codebook.seed.wrapping_add(run_seed),
            max_iters: self.codebook.max_iters,
            tol: self.codebook.tol,
        }
    }

    fn test_label(&self) -> String {
        match self.shuffle_seed {
            Some(_) => format!("{}-shuffled", self.test.label()),
            None => self.test.label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub result: EvalResult,
    pub row: ResultsRow,
    /// Ordered by seed, then item id.
    pub predictions: Vec<Prediction>,
}

fn load_features(paths: &[&PathBuf], cfg: &FeatureConfig) -> Result<HashMap<PathBuf, FeatureMatrix>> {
    paths
        .par_iter()
        .map(|p| {
            let clip = read_wav(p)
                .and_then(|c| to_canonical_rate(&c))
                .map_err(|e| HarnessError::stage(Stage::Features, format!("{}: {e}", p.display())))?;
            let feats = extract_features(&clip, cfg)
                .map_err(|e| HarnessError::stage(Stage::Features, format!("{}: {e}", p.display())))?;
            Ok(((*p).clone(), feats))
        })
        .collect()
}

fn stack(features: &[&FeatureMatrix]) -> Result<(Vec<f64>, usize)> {
    let dim = features
        .first()
        .ok_or_else(|| HarnessError::stage(Stage::Codebook, "no train-split documents"))?
        .dim;
    Ok((features.iter().flat_map(|f| f.values().iter().copied()).collect(), dim))
}

fn units(codebook: &Codebook, feats: &FeatureMatrix) -> Result<DedupUnitSequence> {
    Ok(quantize(feats, codebook)
        .map_err(|e| HarnessError::stage(Stage::Quantize, e))?
        .deduplicated())
}

/// Materializes both conditions, trains one codebook per seed on the
/// train-split documents and scores span predictions on the test split.
pub fn run_experiment(config: &ExperimentConfig, manifest: &Manifest) -> Result<ExperimentOutcome> {
    config.validate()?;
    manifest.validate()?;
    let train: Vec<&ManifestRecord> = manifest.split(Split::Train).collect();
    let test: Vec<&ManifestRecord> = manifest.split(Split::Test).collect();
    if train.is_empty() || test.is_empty() {
        return Err(HarnessError::Config(format!(
            "need train and test items, got {} and {}",
            train.len(),
            test.len()
        )));
    }

    let train_sources: Vec<PathBuf> = train.iter().map(|r| r.document.clone()).collect();
    let test_sources: Vec<PathBuf> = test
        .iter()
        .flat_map(|r| [r.question.clone(), r.document.clone()])
        .collect();
    let stage = |e: HarnessError| match e {
        e @ HarnessError::Materialize { .. } => HarnessError::stage(Stage::Materialize, e),
        other => other,
    };
    let (train_map, _, _) = materialize_clips(&train_sources, &config.train, &config.cache_dir).map_err(stage)?;
    let (test_map, _, _) = materialize_clips(&test_sources, &config.test, &config.cache_dir).map_err(stage)?;

    let mut wanted: Vec<&PathBuf> = train_map.values().chain(test_map.values()).collect();
    wanted.sort();
    wanted.dedup();
    let features = load_features(&wanted, &config.features)?;
    let hop_s = features
        .values()
        .next()
        .map(|f| f.grid.hop_len() as f64 / f.grid.sample_rate_hz() as f64)
        .unwrap_or(config.features.hop_s);

    let mut items: Vec<QAItem> = test
        .iter()
        .map(|r| {
            let doc = &test_map[&r.document];
            let mut item = r.to_item(audio_duration_s(doc)?);
            item.question = test_map[&r.question].display().to_string();
            item.document = doc.display().to_string();
            item.validate().map_err(|e| HarnessError::stage(Stage::Evaluate, format!("{}: {e}", r.id)))?;
            Ok(item)
        })
        .collect::<Result<_>>()?;
    if let Some(seed) = config.shuffle_seed {
        items = shuffle_pairs(&items, seed).map_err(|e| HarnessError::stage(Stage::Evaluate, e))?;
    }

    let mut train_docs: Vec<&PathBuf> = train_map.values().collect();
    train_docs.sort();
    train_docs.dedup();
    let train_feats: Vec<&FeatureMatrix> = train_docs.iter().map(|p| &features[*p]).collect();
    let (stacked, dim) = stack(&train_feats)?;

    let mut test_paths: Vec<&PathBuf> = test_map.values().collect();
    test_paths.sort();
    test_paths.dedup();

    let mut seed_preds = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let codebook = train_kmeans_rows(&stacked, dim, &config.kmeans(seed))
            .map_err(|e| HarnessError::stage(Stage::Codebook, e))?
            .codebook;
        let sequences: HashMap<String, DedupUnitSequence> = test_paths
            .par_iter()
            .map(|p| Ok((p.display().to_string(), units(&codebook, &features[*p])?)))
            .collect::<Result<_>>()?;
        let spans = items
            .par_iter()
            .map(|item| {
                let span = predict_span(
                    &sequences[&item.question],
                    &sequences[&item.document],
                    hop_s,
                    &config.predictor,
                )
                .map_err(|e| HarnessError::stage(Stage::Predict, format!("{}: {e}", item.id)))?;
                Ok((item.id.clone(), span))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        seed_preds.push(SeedPredictions { seed, spans });
    }

    let result = evaluate_set(&items, &seed_preds).map_err(|e| HarnessError::stage(Stage::Evaluate, e))?;
    let predictions = seed_preds
        .iter()
        .flat_map(|sp| {
            sp.spans.iter().map(|(id, span)| Prediction {
                id: id.clone(),
                seed: sp.seed,
                span: *span,
            })
        })
        .collect();
    let row = ResultsRow::new(config.train.label(), config.test_label(), &result);
    Ok(ExperimentOutcome {
        result,
        row,
        predictions,
    })
}

fn audio_duration_s(path: &Path) -> Result<f64> {
    read_wav(path)
        .map(|c| c.duration_s())
        .map_err(|e| HarnessError::stage(Stage::Evaluate, format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub cutoffs_hz: Vec<f64>,
    pub base: ExperimentConfig,
}

impl SweepConfig {
    pub fn new(base: ExperimentConfig) -> Self {
        Self {
            cutoffs_hz: DEFAULT_SWEEP_CUTOFFS_HZ.to_vec(),
            base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoffs_hz.is_empty() {
            return Err(HarnessError::Config("cutoff list is empty".into()));
        }
        let nyquist = CANONICAL_SAMPLE_RATE_HZ as f64 / 2.0;
        for c in &self.cutoffs_hz {
            if !(MIN_CUTOFF_HZ..nyquist).contains(c) {
                return Err(HarnessError::Config(format!(
                    "cutoff {c} Hz outside [{MIN_CUTOFF_HZ}, {nyquist}) Hz"
                )));
            }
        }
        if self.cutoffs_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Config("cutoffs must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cutoff_hz: f64,
    pub outcome: std::result::Result<ResultsRow, String>,
}

/// One experiment per cutoff with the prosodic condition on both sides.
/// A failing cutoff yields a row carrying its error.
pub fn sweep_cutoff(config: &SweepConfig, manifest: &Manifest) -> Result<Vec<SweepRow>> {
    config.validate()?;
    config.base.validate()?;
    Ok(config
        .cutoffs_hz
        .iter()
        .map(|&cutoff_hz| {
            let mut cfg = config.base.clone();
            cfg.train = ConditionSpec::prosodic(cutoff_hz);
            cfg.test = cfg.train;
            SweepRow {
                cutoff_hz,
                outcome: run_experiment(&cfg, manifest).map(|o| o.row).map_err(|e| e.to_string()),
            }
        })
        .collect())
}

pub fn write_sweep_table<'a>(rows: impl IntoIterator<Item = &'a SweepRow>, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "cutoff_hz\tff1_mean\tff1_std\taos_mean\taos_std\terror")?;
    for row in rows {
        match &row.outcome {
            Ok(r) => writeln!(
                out,
                "{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t",
                row.cutoff_hz, r.ff1_mean, r.ff1_std, r.aos_mean, r.aos_std
            )?,
            Err(e) => writeln!(
                out,
                "{}\t\t\t\t\t{}",
                row.cutoff_hz,
                e.replace(['\t', '\n'], " ")
            )?,
        }
    }
    Ok(())
}
