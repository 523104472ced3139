//! Span-level scoring (frame F1 and overlap score), seeded question and
//! document re-pairing, and a unit-overlap span predictor.

mod io;
mod metrics;
mod pairing;
mod predict;
mod set;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{read_predictions, read_results, write_predictions, write_results, Prediction, ResultsRow};
pub use metrics::{aos, ff1, overlap, SpanScore};
pub use pairing::{derangement, shuffle_pairs};
pub use predict::{predict_span, window_scores, PredictorConfig, WindowScore};
pub use set::{evaluate_set, EvalResult, ItemScore, SeedPredictions, SeedScore};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid span [{start_s}, {end_s}]")]
    InvalidSpan { start_s: f64, end_s: f64 },
    #[error("no gold spans")]
    NoGold,
    #[error("empty item set")]
    EmptySet,
    #[error("no seeds")]
    NoSeeds,
    #[error("seed {seed}: no prediction for item {id:?}")]
    MissingPrediction { id: String, seed: u64 },
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("need at least 2 items to re-pair, got {0}")]
    TooFewItems(usize),
    #[error("empty unit sequence")]
    EmptyUnits,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

/// A closed time interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeSpan {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self> {
        if !(start_s.is_finite() && end_s.is_finite() && 0.0 <= start_s && start_s <= end_s) {
            return Err(EvalError::InvalidSpan { start_s, end_s });
        }
        Ok(Self { start_s, end_s })
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// A question paired with a document and its answer spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub question: String,
    pub document: String,
    pub gold_spans: Vec<TimeSpan>,
    pub document_duration_s: f64,
    /// False once re-pairing has moved the gold spans away from the question they answer.
    #[serde(default = "default_true")]
    pub gold_meaningful: bool,
}

fn default_true() -> bool {
    true
}

impl QAItem {
    pub fn validate(&self) -> Result<()> {
        if self.gold_spans.is_empty() {
            return Err(EvalError::NoGold);
        }
        for s in &self.gold_spans {
            TimeSpan::new(s.start_s, s.end_s)?;
            if s.end_s > self.document_duration_s {
                return Err(EvalError::InvalidSpan {
                    start_s: s.start_s,
                    end_s: s.end_s,
                });
            }
        }
        Ok(())
    }
}
