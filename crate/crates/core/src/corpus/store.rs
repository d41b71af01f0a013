//! Append-only JSON-lines record files with sidecar offset indexes.
//!
//! Layout of a store directory:
//!
//! ```text
//! manifest.json
//! documents.jsonl   documents.idx
//! paragraphs.jsonl  paragraphs.idx
//! rejections.jsonl
//! ```
//!
//! Each `.idx` line is `{"id", "doc", "offset", "len"}` pointing at one
//! record in the matching `.jsonl` file. A finished store is never mutated.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{CorpusError, Document, Paragraph, SplitterConfig};

pub(crate) const MANIFEST_FILE: &str = "manifest.json";
const DOCS_FILE: &str = "documents.jsonl";
const DOCS_IDX: &str = "documents.idx";
const PARAS_FILE: &str = "paragraphs.jsonl";
const PARAS_IDX: &str = "paragraphs.idx";
pub(crate) const REJECTIONS_FILE: &str = "rejections.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub corpus_id: String,
    pub n_documents: usize,
    pub n_paragraphs: usize,
    pub n_rejected: usize,
    pub created_at: DateTime<Utc>,
    pub splitter: SplitterConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IdxEntry {
    id: String,
    doc: String,
    offset: u64,
    len: u64,
}

struct RecordWriter {
    data: BufWriter<File>,
    idx: BufWriter<File>,
    offset: u64,
    data_path: PathBuf,
}

impl RecordWriter {
    fn create(dir: &Path, data: &str, idx: &str) -> Result<Self, CorpusError> {
        let data_path = dir.join(data);
        let idx_path = dir.join(idx);
        let d = File::create(&data_path).map_err(|e| CorpusError::io(&data_path, e))?;
        let i = File::create(&idx_path).map_err(|e| CorpusError::io(&idx_path, e))?;
        Ok(Self {
            data: BufWriter::new(d),
            idx: BufWriter::new(i),
            offset: 0,
            data_path,
        })
    }

    fn append<T: Serialize>(&mut self, id: &str, doc: &str, record: &T) -> Result<(), CorpusError> {
        let mut line = serde_json::to_vec(record).expect("records serialize");
        line.push(b'\n');
        self.data
            .write_all(&line)
            .map_err(|e| CorpusError::io(&self.data_path, e))?;
        let entry = IdxEntry {
            id: id.to_owned(),
            doc: doc.to_owned(),
            offset: self.offset,
            len: line.len() as u64 - 1,
        };
        let mut idx_line = serde_json::to_vec(&entry).expect("index entries serialize");
        idx_line.push(b'\n');
        self.idx
            .write_all(&idx_line)
            .map_err(|e| CorpusError::io(&self.data_path, e))?;
        self.offset += line.len() as u64;
        Ok(())
    }

    fn finish(mut self) -> Result<(), CorpusError> {
        self.data.flush().map_err(|e| CorpusError::io(&self.data_path, e))?;
        self.idx.flush().map_err(|e| CorpusError::io(&self.data_path, e))
    }
}

/// Single-writer builder used by ingest.
pub(crate) struct StoreWriter {
    dir: PathBuf,
    docs: RecordWriter,
    paras: RecordWriter,
    n_documents: usize,
    n_paragraphs: usize,
}

impl StoreWriter {
    pub(crate) fn create(dir: &Path) -> Result<Self, CorpusError> {
        if dir.join(MANIFEST_FILE).exists() {
            return Err(CorpusError::AlreadyExists(dir.display().to_string()));
        }
        fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_owned(),
            docs: RecordWriter::create(dir, DOCS_FILE, DOCS_IDX)?,
            paras: RecordWriter::create(dir, PARAS_FILE, PARAS_IDX)?,
            n_documents: 0,
            n_paragraphs: 0,
        })
    }

    pub(crate) fn add(&mut self, doc: &Document, paragraphs: &[Paragraph]) -> Result<(), CorpusError> {
        self.docs.append(&doc.doc_id, &doc.doc_id, doc)?;
        self.n_documents += 1;
        for p in paragraphs {
            self.paras.append(&p.para_id, &p.doc_id, p)?;
            self.n_paragraphs += 1;
        }
        Ok(())
    }

    pub(crate) fn counts(&self) -> (usize, usize) {
        (self.n_documents, self.n_paragraphs)
    }

    pub(crate) fn finish(self, manifest: &CorpusManifest) -> Result<(), CorpusError> {
        self.docs.finish()?;
        self.paras.finish()?;
        write_json_atomic(&self.dir.join(MANIFEST_FILE), manifest)
    }
}

pub(crate) fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), CorpusError> {
    let tmp = path.with_extension("tmp");
    let body = serde_json::to_vec_pretty(value).expect("value serializes");
    fs::write(&tmp, body).map_err(|e| CorpusError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CorpusError::io(path, e))
}

fn read_index(path: &Path) -> Result<Vec<IdxEntry>, CorpusError> {
    let f = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: IdxEntry = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Corrupt(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

/// Read-only view of an ingested corpus. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct CorpusStore {
    dir: PathBuf,
    manifest: CorpusManifest,
    docs: Vec<IdxEntry>,
    doc_pos: HashMap<String, usize>,
    paras: Vec<IdxEntry>,
    para_pos: HashMap<String, usize>,
    doc_paras: HashMap<String, Vec<usize>>,
}

impl CorpusStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let dir = dir.as_ref().to_owned();
        let manifest_path = dir.join(MANIFEST_FILE);
        if !manifest_path.exists() {
            return Err(CorpusError::NotFound(format!("corpus manifest in {}", dir.display())));
        }
        let raw = fs::read(&manifest_path).map_err(|e| CorpusError::io(&manifest_path, e))?;
        let manifest: CorpusManifest = serde_json::from_slice(&raw)
            .map_err(|e| CorpusError::Corrupt(format!("manifest: {e}")))?;
        let docs = read_index(&dir.join(DOCS_IDX))?;
        let paras = read_index(&dir.join(PARAS_IDX))?;
        if docs.len() != manifest.n_documents || paras.len() != manifest.n_paragraphs {
            return Err(CorpusError::Corrupt(format!(
                "manifest counts ({}, {}) disagree with stored records ({}, {})",
                manifest.n_documents,
                manifest.n_paragraphs,
                docs.len(),
                paras.len()
            )));
        }
        let doc_pos = docs.iter().enumerate().map(|(i, e)| (e.id.clone(), i)).collect();
        let para_pos = paras.iter().enumerate().map(|(i, e)| (e.id.clone(), i)).collect();
        let mut doc_paras: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in paras.iter().enumerate() {
            doc_paras.entry(e.doc.clone()).or_default().push(i);
        }
        Ok(Self {
            dir,
            manifest,
            docs,
            doc_pos,
            paras,
            para_pos,
            doc_paras,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &CorpusManifest {
        &self.manifest
    }

    fn read_record<T: for<'de> Deserialize<'de>>(&self, file: &str, e: &IdxEntry) -> Result<T, CorpusError> {
        let path = self.dir.join(file);
        let mut f = File::open(&path).map_err(|err| CorpusError::io(&path, err))?;
        f.seek(SeekFrom::Start(e.offset)).map_err(|err| CorpusError::io(&path, err))?;
        let mut buf = vec![0u8; e.len as usize];
        f.read_exact(&mut buf).map_err(|err| CorpusError::io(&path, err))?;
        serde_json::from_slice(&buf).map_err(|err| CorpusError::Corrupt(format!("record {}: {err}", e.id)))
    }

    pub fn get_paragraph(&self, para_id: &str) -> Result<Paragraph, CorpusError> {
        let pos = self
            .para_pos
            .get(para_id)
            .ok_or_else(|| CorpusError::NotFound(format!("paragraph {para_id}")))?;
        self.read_record(PARAS_FILE, &self.paras[*pos])
    }

    pub fn get_document(&self, doc_id: &str) -> Result<Document, CorpusError> {
        let pos = self
            .doc_pos
            .get(doc_id)
            .ok_or_else(|| CorpusError::NotFound(format!("document {doc_id}")))?;
        self.read_record(DOCS_FILE, &self.docs[*pos])
    }

    /// Paragraphs of one document in ingest order.
    pub fn list_paragraphs(&self, doc_id: &str) -> Result<Vec<Paragraph>, CorpusError> {
        if !self.doc_pos.contains_key(doc_id) {
            return Err(CorpusError::NotFound(format!("document {doc_id}")));
        }
        self.doc_paras
            .get(doc_id)
            .map(|ids| ids.iter().map(|&i| self.read_record(PARAS_FILE, &self.paras[i])).collect())
            .unwrap_or_else(|| Ok(Vec::new()))
    }

    /// Every paragraph, in ingest order.
    pub fn paragraphs(&self) -> Result<Vec<Paragraph>, CorpusError> {
        read_all(&self.dir.join(PARAS_FILE))
    }

    /// Every document, in ingest order.
    pub fn documents(&self) -> Result<Vec<Document>, CorpusError> {
        read_all(&self.dir.join(DOCS_FILE))
    }

    /// Copies the store's files into `dest`.
    pub fn copy_to(&self, dest: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dest).map_err(|e| CorpusError::io(dest, e))?;
        for f in [MANIFEST_FILE, DOCS_FILE, DOCS_IDX, PARAS_FILE, PARAS_IDX, REJECTIONS_FILE] {
            let src = self.dir.join(f);
            if src.exists() {
                fs::copy(&src, dest.join(f)).map_err(|e| CorpusError::io(&src, e))?;
            }
        }
        Ok(())
    }
}

fn read_all<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let f = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CorpusError::Corrupt(format!("{}:{}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(out)
}
