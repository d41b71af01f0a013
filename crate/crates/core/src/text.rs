//! Tokenization and character-offset helpers shared by every stage.
//!
//! All offsets exposed by this crate are Unicode code-point offsets,
//! half-open `[start, end)`.

use unicode_normalization::UnicodeNormalization;

/// Lowercased, NFKC-normalized alphanumeric tokens.
pub fn tokenize_normalize(text: &str) -> Vec<String> {
    let normalized: String = text.nfkc().collect::<String>().to_lowercase();
    normalized
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// A normalized token together with the code-point span it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Tokenizes while keeping offsets into the original text.
///
/// Segmentation runs on the raw characters first; each alphanumeric run is
/// then normalized. A run whose normalized form splits further (e.g. some
/// compatibility ligatures) yields several tokens sharing the run's span.
pub fn tokenize_with_offsets(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    let mut run = String::new();
    let mut pos = 0;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(pos);
            }
            run.push(ch);
        } else if let Some(start) = run_start.take() {
            push_run(&mut out, &run, start, pos);
            run.clear();
        }
        pos += 1;
    }
    if let Some(start) = run_start {
        push_run(&mut out, &run, start, pos);
    }
    out
}

fn push_run(out: &mut Vec<Token>, run: &str, start: usize, end: usize) {
    for piece in tokenize_normalize(run) {
        out.push(Token {
            text: piece,
            start,
            end,
        });
    }
}

/// Number of whitespace-delimited words.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Byte offset of the `idx`-th code point (or `text.len()` at the end).
pub fn byte_offset(text: &str, idx: usize) -> Option<usize> {
    if idx == 0 {
        return Some(0);
    }
    match text.char_indices().nth(idx) {
        Some((b, _)) => Some(b),
        None if char_len(text) == idx => Some(text.len()),
        None => None,
    }
}

/// Slices `text` by code-point offsets. `None` when out of bounds or reversed.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let b0 = byte_offset(text, start)?;
    let b1 = byte_offset(text, end)?;
    Some(&text[b0..b1])
}
