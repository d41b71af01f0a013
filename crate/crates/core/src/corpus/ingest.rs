//! Reading CORD-19 style JSON records into the store.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Utc};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::store::{write_json_atomic, StoreWriter, REJECTIONS_FILE};
use super::{paragraphs_for, CorpusError, CorpusManifest, Document, SplitterConfig};

#[derive(Debug, Deserialize)]
struct RawRecord {
    paper_id: String,
    metadata: RawMetadata,
    #[serde(rename = "abstract", default)]
    abstract_blocks: Vec<RawBlock>,
    body_text: Vec<RawBlock>,
}

#[derive(Debug, Deserialize)]
struct RawMetadata {
    title: String,
    #[serde(default)]
    publish_time: Option<String>,
    #[serde(default)]
    url: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawBlock {
    text: String,
}

/// A record that could not be ingested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub source: String,
    pub reason: String,
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    NaiveDate::parse_from_str(raw.get(..10).unwrap_or(raw), "%Y-%m-%d")
        .ok()
        .or_else(|| {
            raw.get(..4)
                .and_then(|y| y.parse::<i32>().ok())
                .and_then(|y| NaiveDate::from_ymd_opt(y, 1, 1))
        })
}

/// Parses one input record. Unknown fields are ignored.
pub fn parse_record(json: &str) -> Result<Document, String> {
    let raw: RawRecord = serde_json::from_str(json).map_err(|e| e.to_string())?;
    if raw.paper_id.trim().is_empty() {
        return Err("empty paper_id".into());
    }
    let publish_date = match raw.metadata.publish_time.as_deref() {
        Some(t) if !t.trim().is_empty() => {
            let d = parse_date(t);
            if d.is_none() {
                warn!("{}: unparseable publish_time {t:?}, treating as undated", raw.paper_id);
            }
            d
        }
        _ => None,
    };
    let abstract_text = raw
        .abstract_blocks
        .iter()
        .map(|b| b.text.trim())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(Document {
        doc_id: raw.paper_id,
        title: raw.metadata.title,
        abstract_text,
        body_paragraphs: raw.body_text.into_iter().map(|b| b.text).collect(),
        publish_date,
        source_uri: raw.metadata.url,
    })
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
    let meta = fs::metadata(path).map_err(|e| CorpusError::io(path, e))?;
    if meta.is_file() {
        out.push(path.to_owned());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| CorpusError::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for e in entries {
        if e.is_dir() {
            collect_files(&e, out)?;
        } else if matches!(e.extension().and_then(|x| x.to_str()), Some("json" | "jsonl")) {
            out.push(e);
        }
    }
    Ok(())
}

/// Raw records as `(source label, json text)`, in deterministic order.
/// Source label and either the raw record or a read error.
type SourceLine = (String, Result<String, String>);

fn read_records(source: &Path) -> Result<Vec<SourceLine>, CorpusError> {
    let mut files = Vec::new();
    collect_files(source, &mut files)?;
    let mut records = Vec::new();
    for f in files {
        let label = f.display().to_string();
        let bytes = fs::read(&f).map_err(|e| CorpusError::io(&f, e))?;
        let text = match String::from_utf8(bytes) {
            Ok(t) => t,
            Err(_) => {
                records.push((label, Err("file is not valid UTF-8".to_owned())));
                continue;
            }
        };
        if f.extension().and_then(|x| x.to_str()) == Some("jsonl") {
            for (n, line) in text.lines().enumerate() {
                if !line.trim().is_empty() {
                    records.push((format!("{label}:{}", n + 1), Ok(line.to_owned())));
                }
            }
        } else {
            records.push((label, Ok(text)));
        }
    }
    Ok(records)
}

/// Ingests every record under `source` into a new store at `out`.
///
/// Malformed or duplicate records are rejected individually (logged and
/// written to `rejections.jsonl`); a source with no valid document is an
/// error and nothing is written.
pub fn ingest(source: &Path, out: &Path, config: &SplitterConfig) -> Result<CorpusManifest, CorpusError> {
    let mut docs = Vec::new();
    let mut rejections = Vec::new();
    let mut seen = HashSet::new();
    for (label, raw) in read_records(source)? {
        let parsed = raw.and_then(|json| parse_record(&json));
        match parsed {
            Ok(doc) if !seen.insert(doc.doc_id.clone()) => rejections.push(Rejection {
                source: label,
                reason: format!("duplicate paper_id {}", doc.doc_id),
            }),
            Ok(doc) => docs.push(doc),
            Err(reason) => rejections.push(Rejection { source: label, reason }),
        }
    }
    for r in &rejections {
        warn!("rejected record {}: {}", r.source, r.reason);
    }
    if docs.is_empty() {
        return Err(CorpusError::Empty(source.display().to_string()));
    }

    let mut writer = StoreWriter::create(out)?;
    let mut hasher = Sha256::new();
    for doc in &docs {
        let paragraphs = paragraphs_for(doc, config.max_words);
        for p in &paragraphs {
            hasher.update(p.para_id.as_bytes());
            hasher.update([0u8]);
            hasher.update(p.text.as_bytes());
            hasher.update([0u8]);
        }
        writer.add(doc, &paragraphs)?;
    }
    let rej_path = out.join(REJECTIONS_FILE);
    let mut rej_file = fs::File::create(&rej_path).map_err(|e| CorpusError::io(&rej_path, e))?;
    for r in &rejections {
        let line = serde_json::to_string(r).expect("rejection serializes");
        writeln!(rej_file, "{line}").map_err(|e| CorpusError::io(&rej_path, e))?;
    }

    let digest = hasher.finalize();
    let corpus_id: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    let (n_documents, n_paragraphs) = writer.counts();
    let manifest = CorpusManifest {
        corpus_id,
        n_documents,
        n_paragraphs,
        n_rejected: rejections.len(),
        created_at: Utc::now(),
        splitter: config.clone(),
    };
    writer.finish(&manifest)?;
    info!(
        "ingested {} documents, {} paragraphs, {} rejected",
        n_documents, n_paragraphs, manifest.n_rejected
    );
    Ok(manifest)
}

/// Convenience for tests and tools: rewrite a manifest in place.
#[doc(hidden)]
pub fn rewrite_manifest(dir: &Path, manifest: &CorpusManifest) -> Result<(), CorpusError> {
    write_json_atomic(&dir.join(super::store::MANIFEST_FILE), manifest)
}
