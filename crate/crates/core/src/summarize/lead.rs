use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::SummarizeError;
use crate::corpus::{split_sentences, Document};
use crate::text::{char_slice, word_count};

pub const DEFAULT_WORD_BUDGET: usize = 250;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadDocument {
    pub doc_id: String,
    pub publish_date: Option<NaiveDate>,
    pub sentences: Vec<String>,
}

impl LeadDocument {
    /// Sentences of the body in order, or of the abstract when the body is empty.
    pub fn from_document(doc: &Document) -> Self {
        let split = |t: &str| -> Vec<String> {
            split_sentences(t)
                .iter()
                .filter_map(|s| char_slice(t, s.start, s.end).map(str::to_owned))
                .collect()
        };
        let mut sentences: Vec<String> = doc.body_paragraphs.iter().flat_map(|b| split(b)).collect();
        if sentences.is_empty() {
            sentences = split(&doc.abstract_text);
        }
        Self {
            doc_id: doc.doc_id.clone(),
            publish_date: doc.publish_date,
            sentences,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadSummary {
    pub doc_id: String,
    pub sentences: Vec<String>,
    pub words: usize,
}

impl LeadSummary {
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Leading sentences of the most recent document, stopping before the
/// sentence that would push the total past `budget` words. The first
/// sentence is always included. Undated documents rank below dated ones;
/// remaining ties go to the smaller doc_id.
pub fn lead_baseline(documents: &[LeadDocument], budget: usize) -> Result<LeadSummary, SummarizeError> {
    let doc = documents
        .iter()
        .min_by(|a, b| b.publish_date.cmp(&a.publish_date).then_with(|| a.doc_id.cmp(&b.doc_id)))
        .ok_or(SummarizeError::EmptyCollection)?;
    let mut sentences = Vec::new();
    let mut words = 0;
    for s in &doc.sentences {
        let w = word_count(s);
        if !sentences.is_empty() && words + w > budget {
            break;
        }
        words += w;
        sentences.push(s.clone());
    }
    Ok(LeadSummary {
        doc_id: doc.doc_id.clone(),
        sentences,
        words,
    })
}
