use std::collections::HashMap;

use super::{EvalError, Result, TimeSpan};
use crate::units::DedupUnitSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub ngram_max: usize,
    /// Window lengths in deduplicated tokens.
    pub candidate_lengths: Vec<usize>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            ngram_max: 3,
            candidate_lengths: vec![10, 20, 40],
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_max == 0 {
            return Err(EvalError::InvalidParameter("ngram_max 0".into()));
        }
        if self.candidate_lengths.is_empty() || self.candidate_lengths.contains(&0) {
            return Err(EvalError::InvalidParameter(format!(
                "candidate lengths {:?}",
                self.candidate_lengths
            )));
        }
        Ok(())
    }

    /// Candidate lengths clipped to the document, deduplicated, ascending.
    fn lengths_for(&self, n_tokens: usize) -> Vec<usize> {
        let mut lengths: Vec<usize> = self.candidate_lengths.iter().map(|&l| l.min(n_tokens)).collect();
        lengths.sort_unstable();
        lengths.dedup();
        lengths
    }
}

/// Token window `[start, start + len)` and its overlap score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowScore {
    pub start: usize,
    pub len: usize,
    pub score: f64,
}

fn ngram_counts(tokens: &[u32], n: usize) -> HashMap<&[u32], usize> {
    let mut counts = HashMap::new();
    for g in tokens.windows(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

/// Scores every candidate window: sum over n of `n` times the number of
/// n-grams shared with the question, each capped by its question count.
pub fn window_scores(question: &[u32], document: &[u32], cfg: &PredictorConfig) -> Result<Vec<WindowScore>> {
    cfg.validate()?;
    if question.is_empty() || document.is_empty() {
        return Err(EvalError::EmptyUnits);
    }
    let question_counts: Vec<HashMap<&[u32], usize>> =
        (1..=cfg.ngram_max).map(|n| ngram_counts(question, n)).collect();
    let mut out = Vec::new();
    for len in cfg.lengths_for(document.len()) {
        for start in 0..=document.len() - len {
            let window = &document[start..start + len];
            let mut score = 0.0;
            for (n, q) in (1..=cfg.ngram_max).zip(&question_counts) {
                let shared: usize = ngram_counts(window, n)
                    .iter()
                    .map(|(g, &c)| c.min(q.get(g).copied().unwrap_or(0)))
                    .sum();
                score += (n * shared) as f64;
            }
            out.push(WindowScore { start, len, score });
        }
    }
    Ok(out)
}

/// Best-scoring window as a time span. Ties go to the shorter window, then
/// the earlier start; with no overlap at all the centered window of the
/// median candidate length is returned.
pub fn predict_span(
    question: &DedupUnitSequence,
    document: &DedupUnitSequence,
    hop_s: f64,
    cfg: &PredictorConfig,
) -> Result<TimeSpan> {
    let scores = window_scores(&question.units, &document.units, cfg)?;
    let best = scores
        .iter()
        .copied()
        .reduce(|best, w| {
            let better = w.score > best.score
                || (w.score == best.score && (w.len, w.start) < (best.len, best.start));
            if better {
                w
            } else {
                best
            }
        })
        .expect("at least one window");
    let (start, len) = if best.score > 0.0 {
        (best.start, best.len)
    } else {
        let mut lengths = cfg.candidate_lengths.clone();
        lengths.sort_unstable();
        let len = lengths[(lengths.len() - 1) / 2].min(document.len());
        ((document.len() - len) / 2, len)
    };
    let last = start + len - 1;
    TimeSpan::new(
        document.start_frames[start] as f64 * hop_s,
        (document.start_frames[last] + document.run_lengths[last]) as f64 * hop_s,
    )
}
