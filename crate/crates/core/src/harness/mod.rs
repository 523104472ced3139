//! Manifest-driven corpus processing: condition materialization with a
//! content-addressed cache, training-set mixing, full experiment runs and
//! cutoff sweeps.

mod cache;
mod experiment;
mod manifest;
mod mix;
pub mod synthetic;

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use cache::{cache_key, materialize_clips, materialize_condition, Materialized, Sidecar, CACHE_ENV_VAR};
pub use experiment::{
    run_experiment, sweep_cutoff, write_sweep_table, CodebookParams, ExperimentConfig, ExperimentOutcome,
    SweepConfig, SweepRow, DEFAULT_SWEEP_CUTOFFS_HZ,
};
pub use manifest::{load_manifest, write_manifest, Manifest, ManifestRecord, Split};
pub use mix::{mix_manifests, shuffle_manifest_pairs, MixSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Materialize,
    Features,
    Codebook,
    Quantize,
    Predict,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Materialize => "materialize",
            Stage::Features => "features",
            Stage::Codebook => "codebook",
            Stage::Quantize => "quantize",
            Stage::Predict => "predict",
            Stage::Evaluate => "evaluate",
        })
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("item {id:?}: {message}")]
    InvalidRecord { id: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{} of {total} clips failed; first: {}: {}", failures.len(), failures[0].0.display(), failures[0].1)]
    Materialize { total: usize, failures: Vec<(PathBuf, String)> },
    #[error("{stage} stage: {message}")]
    Stage { stage: Stage, message: String },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn stage(stage: Stage, err: impl fmt::Display) -> Self {
        Self::Stage {
            stage,
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
