use super::{EvalError, Result, TimeSpan};

/// Length of the intersection of two spans.
pub fn overlap(a: TimeSpan, b: TimeSpan) -> f64 {
    (a.end_s.min(b.end_s) - a.start_s.max(b.start_s)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanScore {
    pub ff1: f64,
    pub precision: f64,
    pub recall: f64,
}

fn same_point(a: TimeSpan, b: TimeSpan) -> bool {
    a.duration_s() == 0.0 && b.duration_s() == 0.0 && a.start_s == b.start_s
}

fn ff1_single(pred: TimeSpan, gold: TimeSpan) -> SpanScore {
    if same_point(pred, gold) {
        return SpanScore {
            ff1: 1.0,
            precision: 1.0,
            recall: 1.0,
        };
    }
    let o = overlap(pred, gold);
    if o == 0.0 {
        return SpanScore {
            ff1: 0.0,
            precision: 0.0,
            recall: 0.0,
        };
    }
    let precision = o / pred.duration_s();
    let recall = o / gold.duration_s();
    SpanScore {
        ff1: 2.0 * precision * recall / (precision + recall),
        precision,
        recall,
    }
}

/// Frame F1 against the best-matching gold span.
pub fn ff1(pred: TimeSpan, golds: &[TimeSpan]) -> Result<SpanScore> {
    golds
        .iter()
        .map(|&g| ff1_single(pred, g))
        .reduce(|best, s| if s.ff1 > best.ff1 { s } else { best })
        .ok_or(EvalError::NoGold)
}

/// Intersection over union against the best-matching gold span.
pub fn aos(pred: TimeSpan, golds: &[TimeSpan]) -> Result<f64> {
    golds
        .iter()
        .map(|&g| {
            if same_point(pred, g) {
                return 1.0;
            }
            let o = overlap(pred, g);
            let union = pred.duration_s() + g.duration_s() - o;
            if o == 0.0 {
                0.0
            } else {
                o / union
            }
        })
        .reduce(f64::max)
        .ok_or(EvalError::NoGold)
}
