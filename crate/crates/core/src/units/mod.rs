//! Frame features, k-means codebooks, unit sequences and run-length
//! deduplication.

mod dedup;
mod features;
mod io;
mod kmeans;

use thiserror::Error;

pub use dedup::{deduplicate, expand, repetition_stats, DedupUnitSequence, RepetitionStats, UnitSequence};
pub use features::{
    extract_features, hz_to_mel, mel_filterbank, mel_to_hz, FeatureConfig, FeatureMatrix, LOG_FLOOR,
};
pub use io::{read_codebook, read_unit_lines, write_codebook, write_unit_lines, CODEBOOK_MAGIC, CODEBOOK_VERSION};
pub use kmeans::{
    quantize, squared_distance, train_kmeans, train_kmeans_rows, Codebook, KmeansConfig, KmeansTrace,
};

use crate::audio::AudioError;

#[derive(Debug, Error)]
pub enum UnitsError {
    #[error("clip of {duration_s:.3} s is shorter than one {window_s:.3} s window")]
    TooShort { duration_s: f64, window_s: f64 },
    #[error("need at least k = {k} rows, got {n}")]
    TooFewRows { n: usize, k: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty unit sequence")]
    EmptySequence,
    #[error("malformed codebook: {0}")]
    BadCodebook(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = UnitsError> = std::result::Result<T, E>;
