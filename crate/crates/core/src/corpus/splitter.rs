//! Rule-based sentence splitting and greedy sentence packing.

use serde::{Deserialize, Serialize};

use super::CharSpan;
use crate::text::{char_slice, word_count};

/// Bumped whenever splitting rules change; recorded in the corpus manifest.
pub const SPLITTER_VERSION: &str = "rules-1";

pub const DEFAULT_MAX_WORDS: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitterConfig {
    pub max_words: usize,
    pub splitter_version: String,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        Self {
            max_words: DEFAULT_MAX_WORDS,
            splitter_version: SPLITTER_VERSION.to_owned(),
        }
    }
}

/// Lowercased tokens (without the final period) that do not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "dr", "mr", "mrs", "ms", "prof", "vs", "al", "fig", "figs", "eq", "eqs",
    "approx", "cf", "ca", "no", "vol", "st", "jr", "sr", "inc", "ltd", "resp", "viz", "ref",
    "refs", "sp", "spp",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’' | '»')
}

/// Word immediately before position `dot` (exclusive), stopping at whitespace or an opener.
fn word_before(chars: &[char], dot: usize) -> String {
    let mut i = dot;
    while i > 0 {
        let c = chars[i - 1];
        if c.is_whitespace() || matches!(c, '(' | '[' | '"' | '“') {
            break;
        }
        i -= 1;
    }
    chars[i..dot].iter().collect()
}

fn is_abbreviation(word: &str) -> bool {
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    // Single capital initial, as in "J. Smith".
    let mut it = word.chars();
    matches!((it.next(), it.next()), (Some(c), None) if c.is_uppercase())
}

/// Splits `text` into sentence spans (code-point offsets).
///
/// A sentence ends at `.`, `!` or `?` (plus trailing quotes/brackets) that is
/// followed by whitespace or end of text, outside any parentheses, not after
/// a known abbreviation or initial, and not followed by a lowercase word.
/// Spans never include leading or trailing whitespace.
pub fn split_sentences(text: &str) -> Vec<CharSpan> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut depth: usize = 0;
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if start.is_none() {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            start = Some(i);
        }
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth = depth.saturating_sub(1),
            _ => {}
        }
        if depth == 0 && is_terminal(c) {
            let mut j = i + 1;
            while j < n && (is_terminal(chars[j]) || is_closer(chars[j])) {
                j += 1;
            }
            if j == n || chars[j].is_whitespace() {
                let abbrev = c == '.' && is_abbreviation(&word_before(&chars, i));
                let mut k = j;
                while k < n && chars[k].is_whitespace() {
                    k += 1;
                }
                let lower_next = k < n && chars[k].is_lowercase();
                if !abbrev && !lower_next {
                    spans.push(CharSpan::new(start.take().unwrap_or(i), j));
                    i = j;
                    continue;
                }
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if let Some(s) = start {
        let mut end = n;
        while end > s && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end > s {
            spans.push(CharSpan::new(s, end));
        }
    }
    spans
}

/// Groups consecutive sentences greedily so each group has at most
/// `max_words` whitespace words. A sentence longer than the limit forms its
/// own group. Returns groups as index ranges into `sentences`.
pub fn pack_sentences(
    text: &str,
    sentences: &[CharSpan],
    max_words: usize,
) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut group_start = 0;
    let mut words = 0;
    for (idx, s) in sentences.iter().enumerate() {
        let w = char_slice(text, s.start, s.end).map(word_count).unwrap_or(0);
        if idx > group_start && words + w > max_words {
            groups.push(group_start..idx);
            group_start = idx;
            words = 0;
        }
        words += w;
    }
    if group_start < sentences.len() {
        groups.push(group_start..sentences.len());
    }
    groups
}
