use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EvalError, QAItem, Result};

/// Seeded uniform permutation of `0..n` with no fixed points, by rejection.
pub fn derangement(n: usize, seed: u64) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(EvalError::TooFewItems(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(&mut rng);
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            return Ok(perm);
        }
        perm.sort_unstable();
    }
}

/// Gives item `i` the document (and gold spans) of item `perm[i]`.
pub fn shuffle_pairs(items: &[QAItem], seed: u64) -> Result<Vec<QAItem>> {
    let perm = derangement(items.len(), seed)?;
    Ok(items
        .iter()
        .zip(&perm)
        .map(|(item, &p)| {
            let donor = &items[p];
            QAItem {
                id: item.id.clone(),
                question: item.question.clone(),
                document: donor.document.clone(),
                gold_spans: donor.gold_spans.clone(),
                document_duration_s: donor.document_duration_s,
                gold_meaningful: false,
            }
        })
        .collect())
}
