use std::io::{BufRead, Write};

use super::{EvalError, EvalResult, Result, TimeSpan};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub seed: u64,
    pub span: TimeSpan,
}

const PREDICTIONS_HEADER: &str = "item_id\tseed\tstart_s\tend_s";
const RESULTS_HEADER: &str = "condition_train\tcondition_test\tff1_mean\tff1_std\taos_mean\taos_std";

pub fn write_predictions<'a>(preds: impl IntoIterator<Item = &'a Prediction>, mut out: impl Write) -> Result<()> {
    writeln!(out, "{PREDICTIONS_HEADER}")?;
    for p in preds {
        writeln!(out, "{}\t{}\t{}\t{}", p.id, p.seed, p.span.start_s, p.span.end_s)?;
    }
    Ok(())
}

pub fn read_predictions(input: impl BufRead) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || (i == 0 && line == PREDICTIONS_HEADER) {
            continue;
        }
        let err = |message: String| EvalError::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, seed, start, end] = fields[..] else {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        out.push(Prediction {
            id: id.to_string(),
            seed: seed.parse().map_err(|e| err(format!("{seed:?}: {e}")))?,
            span: TimeSpan::new(num(start)?, num(end)?)?,
        });
    }
    Ok(out)
}

/// One row of the train-condition by test-condition results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub condition_train: String,
    pub condition_test: String,
    pub ff1_mean: f64,
    pub ff1_std: f64,
    pub aos_mean: f64,
    pub aos_std: f64,
}

impl ResultsRow {
    pub fn new(condition_train: impl Into<String>, condition_test: impl Into<String>, result: &EvalResult) -> Self {
        Self {
            condition_train: condition_train.into(),
            condition_test: condition_test.into(),
            ff1_mean: result.mean_ff1_pct,
            ff1_std: result.std_ff1_pct,
            aos_mean: result.mean_aos_pct,
            aos_std: result.std_aos_pct,
        }
    }
}

pub fn write_results<'a>(rows: impl IntoIterator<Item = &'a ResultsRow>, mut out: impl Write) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}",
            r.condition_train, r.condition_test, r.ff1_mean, r.ff1_std, r.aos_mean, r.aos_std
        )?;
    }
    Ok(())
}

pub fn read_results(input: impl BufRead) -> Result<Vec<ResultsRow>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || (i == 0 && line == RESULTS_HEADER) {
            continue;
        }
        let err = |message: String| EvalError::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        let [train, test, a, b, c, d] = fields[..] else {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        out.push(ResultsRow {
            condition_train: train.to_string(),
            condition_test: test.to_string(),
            ff1_mean: num(a)?,
            ff1_std: num(b)?,
            aos_mean: num(c)?,
            aos_std: num(d)?,
        });
    }
    Ok(out)
}
