//! Document ingestion, paragraph splitting and the on-disk paragraph store.

mod ingest;
mod splitter;
mod store;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use ingest::{ingest, parse_record, rewrite_manifest, Rejection};
pub use splitter::{pack_sentences, split_sentences, SplitterConfig, DEFAULT_MAX_WORDS, SPLITTER_VERSION};
pub use store::{CorpusManifest, CorpusStore};

use crate::text::{char_slice, word_count};

/// Half-open code-point span `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn intersects(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub body_paragraphs: Vec<String>,
    pub publish_date: Option<NaiveDate>,
    pub source_uri: Option<String>,
}

/// The retrieval unit. `word_count` is the paragraph length used by the
/// keyword matching score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub para_id: String,
    pub doc_id: String,
    pub ordinal: u32,
    pub text: String,
    pub word_count: usize,
    pub sentences: Vec<CharSpan>,
}

impl Paragraph {
    /// Builds a paragraph from already-trimmed text, splitting its sentences.
    pub fn new(doc_id: &str, ordinal: u32, text: String) -> Self {
        let sentences = split_sentences(&text);
        Self {
            para_id: paragraph_id(doc_id, ordinal),
            doc_id: doc_id.to_owned(),
            ordinal,
            word_count: word_count(&text),
            text,
            sentences,
        }
    }

    pub fn sentence_text(&self, idx: usize) -> Option<&str> {
        let s = self.sentences.get(idx)?;
        char_slice(&self.text, s.start, s.end)
    }
}

/// Stable identifier: document id plus zero-padded ordinal, so that string
/// order matches ordinal order within a document.
pub fn paragraph_id(doc_id: &str, ordinal: u32) -> String {
    format!("{doc_id}#{ordinal:05}")
}

/// Splits one raw text block into paragraphs of at most `max_words` words
/// without breaking sentences. Returned texts are slices of `block` from
/// the first sentence start to the last sentence end.
pub fn split_block(block: &str, max_words: usize) -> Vec<String> {
    let sentences = split_sentences(block);
    pack_sentences(block, &sentences, max_words)
        .into_iter()
        .filter_map(|g| {
            let first = sentences[g.start];
            let last = sentences[g.end - 1];
            char_slice(block, first.start, last.end).map(str::to_owned)
        })
        .collect()
}

/// Paragraphs for a document: every body block split and packed, or the
/// abstract when the body is empty.
pub fn paragraphs_for(doc: &Document, max_words: usize) -> Vec<Paragraph> {
    let mut texts: Vec<String> = doc
        .body_paragraphs
        .iter()
        .flat_map(|b| split_block(b, max_words))
        .collect();
    if texts.is_empty() && !doc.abstract_text.trim().is_empty() {
        texts = split_block(&doc.abstract_text, max_words);
    }
    texts
        .into_iter()
        .enumerate()
        .map(|(i, t)| Paragraph::new(&doc.doc_id, i as u32, t))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus source {0} contains no valid documents")]
    Empty(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("corrupt corpus store: {0}")]
    Corrupt(String),
    #[error("output directory {0} already contains a corpus")]
    AlreadyExists(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
