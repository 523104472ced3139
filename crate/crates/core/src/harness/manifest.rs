use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::eval::{QAItem, TimeSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// One question/document pair. Relative audio paths are resolved against
/// the manifest's directory on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub question: PathBuf,
    pub document: PathBuf,
    pub gold_spans: Vec<TimeSpan>,
    pub split: Split,
    /// Condition label once the audio has been materialized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
}

impl ManifestRecord {
    pub fn to_item(&self, document_duration_s: f64) -> QAItem {
        QAItem {
            id: self.id.clone(),
            question: self.question.display().to_string(),
            document: self.document.display().to_string(),
            gold_spans: self.gold_spans.clone(),
            document_duration_s,
            gold_meaningful: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn new(records: Vec<ManifestRecord>) -> Result<Self> {
        let m = Self { records };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                return Err(HarnessError::DuplicateId(r.id.clone()));
            }
            check_spans(r)?;
        }
        Ok(())
    }
}

fn check_spans(r: &ManifestRecord) -> Result<()> {
    if r.gold_spans.is_empty() {
        return Err(HarnessError::InvalidRecord {
            id: r.id.clone(),
            message: "no gold spans".into(),
        });
    }
    for s in &r.gold_spans {
        TimeSpan::new(s.start_s, s.end_s).map_err(|e| HarnessError::InvalidRecord {
            id: r.id.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}

/// Reads one JSON record per line; blank lines are skipped.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: ManifestRecord = serde_json::from_str(&line).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        record.question = base.join(&record.question);
        record.document = base.join(&record.document);
        records.push(record);
    }
    Manifest::new(records)
}

pub fn write_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in &manifest.records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(out, "{line}").map_err(|e| HarnessError::io(path, e))?;
    }
    out.flush().map_err(|e| HarnessError::io(path, e))
}
