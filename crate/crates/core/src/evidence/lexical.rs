//! Deterministic keyword-coverage QA backend.

use std::collections::{HashMap, HashSet};

use super::{BackendRole, EvidenceError, QaBackend, RawSpan};
use crate::corpus::{split_sentences, CharSpan};
use crate::lexicon::is_content_word;
use crate::text::{char_slice, tokenize_normalize, tokenize_with_offsets, Token};

/// Distinct content words of the query, in first-occurrence order.
pub fn query_content_words(query: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    tokenize_normalize(query)
        .into_iter()
        .filter(|t| is_content_word(t) && seen.insert(t.clone()))
        .collect()
}

/// Shortest token window `[i, j]` of `tokens` containing every word in
/// `required`; ties go to the earliest window. `None` if some word is absent.
pub fn minimal_window(tokens: &[&Token], required: &HashSet<&str>) -> Option<(usize, usize)> {
    if required.is_empty() {
        return None;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut covered = 0;
    let mut best: Option<(usize, usize)> = None;
    let mut left = 0;
    for right in 0..tokens.len() {
        let w = tokens[right].text.as_str();
        if required.contains(w) {
            let c = counts.entry(w).or_default();
            if *c == 0 {
                covered += 1;
            }
            *c += 1;
        }
        while covered == required.len() {
            if best.is_none_or(|(bi, bj)| right - left < bj - bi) {
                best = Some((left, right));
            }
            let lw = tokens[left].text.as_str();
            if let Some(c) = counts.get_mut(lw) {
                *c -= 1;
                if *c == 0 {
                    covered -= 1;
                }
            }
            left += 1;
        }
    }
    best
}

/// The builtin backend's prediction for `text` split into `sentences`.
///
/// Each sentence scores the fraction of distinct query content words it
/// contains. The best sentence (earliest on ties) yields one span: the
/// minimal token window covering its matched words. Nothing is emitted when
/// no content word matches.
pub fn lexical_oracle_with_sentences(query: &str, text: &str, sentences: &[CharSpan]) -> Vec<RawSpan> {
    let words = query_content_words(query);
    if words.is_empty() {
        return Vec::new();
    }
    let tokens = tokenize_with_offsets(text);
    let mut best: Option<(usize, Vec<&Token>, HashSet<&str>)> = None;
    for s in sentences {
        let sent_tokens: Vec<&Token> = tokens.iter().filter(|t| t.start >= s.start && t.end <= s.end).collect();
        let present: HashSet<&str> = words
            .iter()
            .map(String::as_str)
            .filter(|w| sent_tokens.iter().any(|t| t.text == *w))
            .collect();
        if present.len() > best.as_ref().map_or(0, |b| b.0) {
            best = Some((present.len(), sent_tokens, present));
        }
    }
    let Some((hits, sent_tokens, present)) = best else {
        return Vec::new();
    };
    let (i, j) = minimal_window(&sent_tokens, &present).expect("present words occur in the sentence");
    let (start, end) = (sent_tokens[i].start, sent_tokens[j].end);
    vec![RawSpan {
        start,
        end,
        text: char_slice(text, start, end).unwrap_or_default().to_owned(),
        score: hits as f64 / words.len() as f64,
    }]
}

/// [`lexical_oracle_with_sentences`] using the crate's sentence splitter.
pub fn lexical_oracle(query: &str, text: &str) -> Vec<RawSpan> {
    lexical_oracle_with_sentences(query, text, &split_sentences(text))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalBackend;

impl QaBackend for LexicalBackend {
    fn answer(&self, _role: BackendRole, query: &str, context: &str) -> Result<Vec<RawSpan>, EvidenceError> {
        Ok(lexical_oracle(query, context))
    }
}
