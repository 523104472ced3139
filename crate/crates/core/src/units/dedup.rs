use std::collections::BTreeMap;

use super::{Result, UnitsError};
use crate::audio::FrameGrid;

/// One cluster id per feature frame.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSequence {
    pub grid: FrameGrid,
    pub units: Vec<u32>,
}

impl UnitSequence {
    pub fn deduplicated(&self) -> DedupUnitSequence {
        deduplicate(&self.units)
    }
}

/// Run-length collapsed units with the frame index where each run starts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DedupUnitSequence {
    pub units: Vec<u32>,
    pub run_lengths: Vec<usize>,
    pub start_frames: Vec<usize>,
}

impl DedupUnitSequence {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Frame count of the sequence this was collapsed from.
    pub fn n_frames(&self) -> usize {
        self.run_lengths.iter().sum()
    }
}

pub fn deduplicate(units: &[u32]) -> DedupUnitSequence {
    let mut out = DedupUnitSequence::default();
    for (i, &u) in units.iter().enumerate() {
        if out.units.last() == Some(&u) {
            *out.run_lengths.last_mut().unwrap() += 1;
        } else {
            out.units.push(u);
            out.run_lengths.push(1);
            out.start_frames.push(i);
        }
    }
    out
}

pub fn expand(dedup: &DedupUnitSequence) -> Vec<u32> {
    dedup
        .units
        .iter()
        .zip(&dedup.run_lengths)
        .flat_map(|(&u, &n)| std::iter::repeat_n(u, n))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionStats {
    /// Share of runs longer than three frames.
    pub fraction_runs_gt3: f64,
    /// Run length to number of runs.
    pub run_length_histogram: BTreeMap<usize, usize>,
}

pub fn repetition_stats(units: &[u32]) -> Result<RepetitionStats> {
    if units.is_empty() {
        return Err(UnitsError::EmptySequence);
    }
    let dedup = deduplicate(units);
    let mut histogram = BTreeMap::new();
    for &n in &dedup.run_lengths {
        *histogram.entry(n).or_insert(0) += 1;
    }
    let long = dedup.run_lengths.iter().filter(|&&n| n > 3).count();
    Ok(RepetitionStats {
        fraction_runs_gt3: long as f64 / dedup.len() as f64,
        run_length_histogram: histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapses_runs() {
        let d = deduplicate(&[3, 3, 3, 5, 5, 7]);
        assert_eq!(d.units, vec![3, 5, 7]);
        assert_eq!(d.run_lengths, vec![3, 2, 1]);
        assert_eq!(d.start_frames, vec![0, 3, 5]);
        assert_eq!(expand(&d), vec![3, 3, 3, 5, 5, 7]);
    }

    #[test]
    fn empty_and_distinct() {
        assert!(deduplicate(&[]).is_empty());
        let d = deduplicate(&[1, 2, 3]);
        assert_eq!(d.units, vec![1, 2, 3]);
        assert_eq!(d.run_lengths, vec![1, 1, 1]);
    }

    #[test]
    fn stats() {
        let s = repetition_stats(&[3, 3, 3, 3, 5]).unwrap();
        assert_eq!(s.fraction_runs_gt3, 0.5);
        assert_eq!(s.run_length_histogram, BTreeMap::from([(1, 1), (4, 1)]));
        assert_eq!(repetition_stats(&[1, 2, 1, 2]).unwrap().fraction_runs_gt3, 0.0);
        assert_eq!(repetition_stats(&[9; 10]).unwrap().fraction_runs_gt3, 1.0);
        assert!(matches!(repetition_stats(&[]), Err(UnitsError::EmptySequence)));
    }
}
