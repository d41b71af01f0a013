//! Dataset adapters. Every format is JSON lines or a single JSON array of
//! records; a malformed record is rejected on its own.
//!
//! `covidqa_like`: `{"id", "question", "context", "answers": [string], "title"?}`
//!
//! `debatepedia_like`: `{"id", "query", "document", "summary"}`
//!
//! `duc_like`: `{"id", "query", "documents": [{"doc_id", "text", "date"?}], "references": [string]}`

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    CovidqaLike,
    DebatepediaLike,
    DucLike,
}

impl DatasetFormat {
    pub fn name(self) -> &'static str {
        match self {
            Self::CovidqaLike => "covidqa_like",
            Self::DebatepediaLike => "debatepedia_like",
            Self::DucLike => "duc_like",
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "covidqa_like" | "covidqa" => Ok(Self::CovidqaLike),
            "debatepedia_like" | "debatepedia" => Ok(Self::DebatepediaLike),
            "duc_like" | "duc" => Ok(Self::DucLike),
            other => Err(format!(
                "unknown dataset format {other:?} (expected covidqa_like, debatepedia_like or duc_like)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaCase {
    pub id: String,
    pub question: String,
    pub context: String,
    pub answers: Vec<String>,
    #[serde(default)]
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCase {
    pub id: String,
    pub query: String,
    pub documents: Vec<SummaryDocument>,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "cases", rename_all = "snake_case")]
pub enum Cases {
    Qa(Vec<QaCase>),
    Summary(Vec<SummaryCase>),
}

impl Cases {
    pub fn len(&self) -> usize {
        match self {
            Cases::Qa(c) => c.len(),
            Cases::Summary(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordRejection {
    /// 1-based position of the record in the file.
    pub record: usize,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub format: DatasetFormat,
    pub n_records: usize,
    pub cases: Cases,
    pub rejections: Vec<RecordRejection>,
}

#[derive(Deserialize)]
struct DebateRecord {
    id: String,
    query: String,
    document: String,
    summary: String,
}

fn nonblank(field: &str, value: &str) -> Result<(), String> {
    if value.trim().is_empty() {
        Err(format!("field {field:?} is empty"))
    } else {
        Ok(())
    }
}

fn typed<T: DeserializeOwned>(value: serde_json::Value) -> Result<T, String> {
    serde_json::from_value(value).map_err(|e| format!("schema violation: {e}"))
}

fn qa_record(value: serde_json::Value) -> Result<QaCase, String> {
    let c: QaCase = typed(value)?;
    nonblank("id", &c.id)?;
    nonblank("question", &c.question)?;
    nonblank("context", &c.context)?;
    if c.answers.iter().all(|a| a.trim().is_empty()) {
        return Err("missing gold answer".into());
    }
    Ok(c)
}

fn debate_record(value: serde_json::Value) -> Result<SummaryCase, String> {
    let r: DebateRecord = typed(value)?;
    nonblank("id", &r.id)?;
    nonblank("query", &r.query)?;
    nonblank("document", &r.document)?;
    nonblank("summary", &r.summary).map_err(|_| "missing reference summary".to_string())?;
    Ok(SummaryCase {
        documents: vec![SummaryDocument {
            doc_id: r.id.clone(),
            text: r.document,
            date: None,
        }],
        id: r.id,
        query: r.query,
        references: vec![r.summary],
    })
}

fn duc_record(value: serde_json::Value) -> Result<SummaryCase, String> {
    let c: SummaryCase = typed(value)?;
    nonblank("id", &c.id)?;
    nonblank("query", &c.query)?;
    if c.documents.is_empty() {
        return Err("no documents".into());
    }
    for d in &c.documents {
        nonblank("doc_id", &d.doc_id)?;
        nonblank("text", &d.text).map_err(|e| format!("document {}: {e}", d.doc_id))?;
    }
    if c.references.iter().all(|r| r.trim().is_empty()) {
        return Err("missing reference summary".into());
    }
    Ok(c)
}

/// Splits the file into raw records: a JSON array, or one value per
/// non-blank line. A line that is not JSON becomes an error entry.
fn raw_records(text: &str) -> Result<Vec<Result<serde_json::Value, String>>, EvalError> {
    if text.trim_start().starts_with('[') {
        let values: Vec<serde_json::Value> =
            serde_json::from_str(text).map_err(|e| EvalError::Dataset(format!("invalid JSON array: {e}")))?;
        return Ok(values.into_iter().map(Ok).collect());
    }
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| format!("invalid JSON: {e}")))
        .collect())
}

pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<Dataset, EvalError> {
    let raw = raw_records(text)?;
    let n_records = raw.len();
    let mut rejections = Vec::new();
    let mut qa = Vec::new();
    let mut summary = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, r) in raw.into_iter().enumerate() {
        let id = r
            .as_ref()
            .ok()
            .and_then(|v| v.get("id"))
            .and_then(|v| v.as_str())
            .map(str::to_owned);
        let parsed = r.and_then(|v| match format {
            DatasetFormat::CovidqaLike => qa_record(v).map(|c| (c.id.clone(), Ok(c))),
            DatasetFormat::DebatepediaLike => debate_record(v).map(|c| (c.id.clone(), Err(c))),
            DatasetFormat::DucLike => duc_record(v).map(|c| (c.id.clone(), Err(c))),
        });
        let parsed = parsed.and_then(|(cid, c)| {
            if seen.insert(cid.clone()) {
                Ok(c)
            } else {
                Err(format!("duplicate id {cid:?}"))
            }
        });
        match parsed {
            Ok(Ok(c)) => qa.push(c),
            Ok(Err(c)) => summary.push(c),
            Err(reason) => rejections.push(RecordRejection { record: i + 1, id, reason }),
        }
    }
    let cases = match format {
        DatasetFormat::CovidqaLike => Cases::Qa(qa),
        _ => Cases::Summary(summary),
    };
    Ok(Dataset {
        format,
        n_records,
        cases,
        rejections,
    })
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset, EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EvalError::Dataset(format!("cannot read {}: {e}", path.display())))?;
    parse_dataset(&text, format)
}
