//! Paragraph-level inverted index with field-weighted BM25.
//!
//! Every paragraph is indexed with three fields: its own body text and the
//! title and abstract of the document it came from. A query's score is the
//! weighted sum of per-field BM25 scores over its distinct terms.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, CorpusManifest, CorpusStore, Document, Paragraph};
use crate::par::{self, Execution};
use crate::text::tokenize_normalize;

pub const INDEX_FORMAT: &str = "litrank-index";
pub const INDEX_VERSION: u32 = 1;
const HEADER_FILE: &str = "header.json";
const POSTINGS_FILE: &str = "postings.json";
pub const CORPUS_SUBDIR: &str = "corpus";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldWeights {
    pub body: f64,
    pub title: f64,
    #[serde(rename = "abstract")]
    pub abstract_: f64,
}

impl Default for FieldWeights {
    fn default() -> Self {
        Self {
            body: 1.0,
            title: 0.5,
            abstract_: 0.5,
        }
    }
}

impl FieldWeights {
    pub fn get(&self, field: Field) -> f64 {
        match field {
            Field::Body => self.body,
            Field::Title => self.title,
            Field::Abstract => self.abstract_,
        }
    }

    /// Parses `"body,title,abstract"`, e.g. `"1.0,0.5,0.5"`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match parts.as_slice() {
            [body, title, abstract_] if parts.iter().all(|w| w.is_finite() && *w >= 0.0) => Ok(Self {
                body: *body,
                title: *title,
                abstract_: *abstract_,
            }),
            _ => Err(format!("expected three non-negative weights, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IndexConfig {
    pub bm25: Bm25Params,
    pub field_weights: FieldWeights,
    #[serde(default)]
    pub stemming: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Body,
    Title,
    Abstract,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Body, Field::Title, Field::Abstract];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the paragraph in the index's para_id-sorted table.
    pub para: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostingList {
    pub term: String,
    pub entries: Vec<Posting>,
    pub document_frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FieldIndex {
    postings: BTreeMap<String, PostingList>,
    lengths: Vec<u32>,
}

impl FieldIndex {
    fn avg_len(&self) -> f64 {
        if self.lengths.is_empty() {
            return 0.0;
        }
        self.lengths.iter().map(|&l| l as f64).sum::<f64>() / self.lengths.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub n_paragraphs: usize,
    pub avg_body_len: f64,
    pub avg_title_len: f64,
    pub avg_abstract_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub para_id: String,
    pub bm25_score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexHeader {
    format: String,
    version: u32,
    config: IndexConfig,
    stats: IndexStats,
    corpus: CorpusManifest,
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("paragraph {0} references unknown document {1}")]
    DanglingParagraph(String, String),
    #[error("unsupported index format {format:?} version {version}")]
    Version { format: String, version: u32 },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> IndexError {
    IndexError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Normalized index terms for `text`, optionally stemmed.
pub fn analyze(text: &str, stemming: bool) -> Vec<String> {
    let tokens = tokenize_normalize(text);
    if !stemming {
        return tokens;
    }
    let stemmer = Stemmer::create(Algorithm::English);
    tokens.into_iter().map(|t| stemmer.stem(&t).into_owned()).collect()
}

/// Distinct terms in first-occurrence order.
pub fn query_terms(query: &str, stemming: bool) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    analyze(query, stemming)
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// Lucene-style BM25 idf; always positive.
pub fn bm25_idf(n_docs: usize, df: usize) -> f64 {
    let n = n_docs as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Saturated term-frequency part of BM25 for one field.
pub fn bm25_tf(tf: f64, len: f64, avg_len: f64, params: Bm25Params) -> f64 {
    let norm = if avg_len > 0.0 {
        1.0 - params.b + params.b * len / avg_len
    } else {
        1.0
    };
    tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

/// Immutable, shareable paragraph index.
#[derive(Debug, Clone)]
pub struct ParagraphIndex {
    config: IndexConfig,
    para_ids: Vec<String>,
    fields: Vec<FieldIndex>,
    avg_lens: [f64; 3],
    stats: IndexStats,
    corpus: CorpusManifest,
}

impl ParagraphIndex {
    /// Indexes paragraphs together with their parent documents' title and abstract.
    pub fn build(
        manifest: &CorpusManifest,
        documents: &[Document],
        paragraphs: &[Paragraph],
        config: IndexConfig,
    ) -> Result<Self, IndexError> {
        if paragraphs.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let docs: std::collections::HashMap<&str, &Document> =
            documents.iter().map(|d| (d.doc_id.as_str(), d)).collect();
        let mut order: Vec<&Paragraph> = paragraphs.iter().collect();
        order.sort_by(|a, b| a.para_id.cmp(&b.para_id));

        let mut fields: Vec<FieldIndex> = (0..3)
            .map(|_| FieldIndex {
                postings: BTreeMap::new(),
                lengths: Vec::with_capacity(order.len()),
            })
            .collect();
        for (pos, p) in order.iter().enumerate() {
            let doc = docs
                .get(p.doc_id.as_str())
                .ok_or_else(|| IndexError::DanglingParagraph(p.para_id.clone(), p.doc_id.clone()))?;
            let texts = [p.text.as_str(), doc.title.as_str(), doc.abstract_text.as_str()];
            for (fi, text) in texts.iter().enumerate() {
                let terms = analyze(text, config.stemming);
                fields[fi].lengths.push(terms.len() as u32);
                let mut tfs: BTreeMap<String, u32> = BTreeMap::new();
                for t in terms {
                    *tfs.entry(t).or_default() += 1;
                }
                for (term, tf) in tfs {
                    let list = fields[fi].postings.entry(term.clone()).or_insert_with(|| PostingList {
                        term,
                        entries: Vec::new(),
                        document_frequency: 0,
                    });
                    list.entries.push(Posting { para: pos as u32, tf });
                    list.document_frequency += 1;
                }
            }
        }
        let avg_lens = [fields[0].avg_len(), fields[1].avg_len(), fields[2].avg_len()];
        let stats = IndexStats {
            n_paragraphs: order.len(),
            avg_body_len: avg_lens[0],
            avg_title_len: avg_lens[1],
            avg_abstract_len: avg_lens[2],
        };
        Ok(Self {
            config,
            para_ids: order.iter().map(|p| p.para_id.clone()).collect(),
            fields,
            avg_lens,
            stats,
            corpus: manifest.clone(),
        })
    }

    pub fn build_from_store(store: &CorpusStore, config: IndexConfig) -> Result<Self, IndexError> {
        let paragraphs = store.paragraphs()?;
        let documents = store.documents()?;
        Self::build(store.manifest(), &documents, &paragraphs, config)
    }

    pub fn stats(&self) -> IndexStats {
        self.stats
    }

    pub fn config(&self) -> IndexConfig {
        self.config
    }

    pub fn corpus_manifest(&self) -> &CorpusManifest {
        &self.corpus
    }

    /// Same postings, different scoring parameters (BM25 and field weights
    /// only affect query time).
    pub fn with_scoring(mut self, bm25: Bm25Params, field_weights: FieldWeights) -> Self {
        self.config.bm25 = bm25;
        self.config.field_weights = field_weights;
        self
    }

    pub fn posting_list(&self, field: Field, term: &str) -> Option<&PostingList> {
        self.fields[field as usize].postings.get(term)
    }

    /// Top `n` paragraphs by BM25. Ties go to the smaller para_id.
    /// A query with no indexed terms yields an empty list.
    pub fn search(&self, query: &str, n: usize) -> Vec<RetrievalHit> {
        let terms = query_terms(query, self.config.stemming);
        if terms.is_empty() || n == 0 {
            return Vec::new();
        }
        let n_docs = self.para_ids.len();
        let mut scores = vec![0.0f64; n_docs];
        let mut touched = vec![false; n_docs];
        for term in &terms {
            for field in Field::ALL {
                let weight = self.config.field_weights.get(field);
                if weight == 0.0 {
                    continue;
                }
                let fi = &self.fields[field as usize];
                let Some(list) = fi.postings.get(term) else { continue };
                let idf = bm25_idf(n_docs, list.document_frequency);
                let avg = self.avg_lens[field as usize];
                for e in &list.entries {
                    let len = fi.lengths[e.para as usize] as f64;
                    let s = idf * bm25_tf(e.tf as f64, len, avg, self.config.bm25);
                    scores[e.para as usize] += weight * s;
                    touched[e.para as usize] = true;
                }
            }
        }
        let mut hits: Vec<(usize, f64)> = (0..n_docs).filter(|&i| touched[i]).map(|i| (i, scores[i])).collect();
        // para_ids are sorted, so position order is para_id order.
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hits.truncate(n);
        hits.into_iter()
            .enumerate()
            .map(|(r, (pos, score))| RetrievalHit {
                para_id: self.para_ids[pos].clone(),
                bm25_score: score,
                rank: r + 1,
            })
            .collect()
    }

    pub fn search_batch(&self, queries: &[String], n: usize, exec: Execution) -> Vec<Vec<RetrievalHit>> {
        par::map(exec, queries, |q| self.search(q, n))
    }

    /// Writes `header.json` and `postings.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), IndexError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let header = IndexHeader {
            format: INDEX_FORMAT.to_owned(),
            version: INDEX_VERSION,
            config: self.config,
            stats: self.stats,
            corpus: self.corpus.clone(),
        };
        let hp = dir.join(HEADER_FILE);
        fs::write(&hp, serde_json::to_vec_pretty(&header).expect("header serializes")).map_err(|e| io_err(&hp, e))?;
        let body = PostingsFile {
            para_ids: self.para_ids.clone(),
            fields: self.fields.clone(),
        };
        let pp = dir.join(POSTINGS_FILE);
        fs::write(&pp, serde_json::to_vec(&body).expect("postings serialize")).map_err(|e| io_err(&pp, e))
    }

    pub fn load(dir: &Path) -> Result<Self, IndexError> {
        let hp = dir.join(HEADER_FILE);
        let raw = fs::read(&hp).map_err(|e| io_err(&hp, e))?;
        let header: IndexHeader = serde_json::from_slice(&raw).map_err(|e| IndexError::Corrupt(e.to_string()))?;
        if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
            return Err(IndexError::Version {
                format: header.format,
                version: header.version,
            });
        }
        let pp = dir.join(POSTINGS_FILE);
        let raw = fs::read(&pp).map_err(|e| io_err(&pp, e))?;
        let body: PostingsFile = serde_json::from_slice(&raw).map_err(|e| IndexError::Corrupt(e.to_string()))?;
        if body.fields.len() != 3 || body.para_ids.len() != header.stats.n_paragraphs {
            return Err(IndexError::Corrupt("postings disagree with header".into()));
        }
        let avg_lens = [body.fields[0].avg_len(), body.fields[1].avg_len(), body.fields[2].avg_len()];
        Ok(Self {
            config: header.config,
            para_ids: body.para_ids,
            fields: body.fields,
            avg_lens,
            stats: header.stats,
            corpus: header.corpus,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PostingsFile {
    para_ids: Vec<String>,
    fields: Vec<FieldIndex>,
}

/// Builds an index from the corpus at `corpus_dir` and writes a
/// self-contained index directory (postings plus a copy of the corpus).
pub fn build_index_dir(corpus_dir: &Path, out: &Path, config: IndexConfig) -> Result<IndexStats, IndexError> {
    let store = CorpusStore::open(corpus_dir)?;
    let index = ParagraphIndex::build_from_store(&store, config)?;
    index.save(out)?;
    store.copy_to(&out.join(CORPUS_SUBDIR))?;
    Ok(index.stats())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{paragraphs_for, SplitterConfig};
    use chrono::Utc;

    fn manifest() -> CorpusManifest {
        CorpusManifest {
            corpus_id: "t".into(),
            n_documents: 0,
            n_paragraphs: 0,
            n_rejected: 0,
            created_at: Utc::now(),
            splitter: SplitterConfig::default(),
        }
    }

    fn doc(id: &str, title: &str, body: &[&str]) -> Document {
        Document {
            doc_id: id.into(),
            title: title.into(),
            abstract_text: String::new(),
            body_paragraphs: body.iter().map(|s| s.to_string()).collect(),
            publish_date: None,
            source_uri: None,
        }
    }

    fn fixture() -> (Vec<Document>, Vec<Paragraph>) {
        let docs = vec![
            doc("a", "Masks and transmission", &["Masks reduce spread.", "Hand hygiene helps."]),
            doc("b", "Vaccine trials", &["The incubation period is five days."]),
        ];
        let paras = docs.iter().flat_map(|d| paragraphs_for(d, 400)).collect();
        (docs, paras)
    }

    #[test]
    fn builds_stats() {
        let (docs, paras) = fixture();
        let idx = ParagraphIndex::build(&manifest(), &docs, &paras, IndexConfig::default()).unwrap();
        assert_eq!(idx.stats().n_paragraphs, 3);
        assert!((idx.stats().avg_title_len - 8.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let r = ParagraphIndex::build(&manifest(), &[], &[], IndexConfig::default());
        assert!(matches!(r, Err(IndexError::EmptyCorpus)));
    }

    #[test]
    fn unique_term_ranks_first() {
        let (docs, paras) = fixture();
        let idx = ParagraphIndex::build(&manifest(), &docs, &paras, IndexConfig::default()).unwrap();
        let hits = idx.search("incubation", 10);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].para_id, "b#00000");
        assert_eq!(hits[0].rank, 1);
    }

    #[test]
    fn shared_title_retrieves_both_paragraphs() {
        let (docs, paras) = fixture();
        let idx = ParagraphIndex::build(&manifest(), &docs, &paras, IndexConfig::default()).unwrap();
        let hits = idx.search("transmission", 10);
        let ids: Vec<_> = hits.iter().map(|h| h.para_id.as_str()).collect();
        assert_eq!(ids, vec!["a#00000", "a#00001"]);
        // identical title contribution, tie broken by para_id
        assert!(hits[0].bm25_score > 0.0);
    }

    #[test]
    fn absent_terms_give_empty_result() {
        let (docs, paras) = fixture();
        let idx = ParagraphIndex::build(&manifest(), &docs, &paras, IndexConfig::default()).unwrap();
        assert!(idx.search("zebra quokka", 10).is_empty());
        assert!(idx.search("?!", 10).is_empty());
        assert!(idx.search("masks", 0).is_empty());
    }

    #[test]
    fn posting_lists_sorted_with_consistent_df() {
        let (docs, paras) = fixture();
        let idx = ParagraphIndex::build(&manifest(), &docs, &paras, IndexConfig::default()).unwrap();
        for f in Field::ALL {
            for list in idx.fields[f as usize].postings.values() {
                assert_eq!(list.document_frequency, list.entries.len());
                assert!(list.entries.windows(2).all(|w| w[0].para < w[1].para));
            }
        }
        assert_eq!(idx.posting_list(Field::Title, "masks").unwrap().document_frequency, 2);
    }

    #[test]
    fn stemming_toggle() {
        assert_eq!(analyze("infections infected", false), vec!["infections", "infected"]);
        assert_eq!(analyze("infections infection", true), vec!["infect", "infect"]);
    }

    #[test]
    fn field_weight_parsing() {
        assert_eq!(FieldWeights::parse("1,0.5,0.5").unwrap(), FieldWeights::default());
        assert!(FieldWeights::parse("1,2").is_err());
        assert!(FieldWeights::parse("1,-1,0").is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let (docs, paras) = fixture();
        let idx = ParagraphIndex::build(&manifest(), &docs, &paras, IndexConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path()).unwrap();
        let loaded = ParagraphIndex::load(dir.path()).unwrap();
        assert_eq!(loaded.search("masks spread", 5), idx.search("masks spread", 5));
        assert_eq!(loaded.stats(), idx.stats());
    }

    #[test]
    fn rejects_unknown_version() {
        let (docs, paras) = fixture();
        let idx = ParagraphIndex::build(&manifest(), &docs, &paras, IndexConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path()).unwrap();
        let hp = dir.path().join(HEADER_FILE);
        let text = fs::read_to_string(&hp).unwrap().replace("\"version\": 1", "\"version\": 99");
        fs::write(&hp, text).unwrap();
        assert!(matches!(ParagraphIndex::load(dir.path()), Err(IndexError::Version { .. })));
    }
}
