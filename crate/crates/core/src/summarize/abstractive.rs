//! Summarizer input construction and multi-paragraph orchestration.

use std::fmt;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};

use super::SummarizeError;
use crate::corpus::split_sentences;
use crate::par::{self, Execution};
use crate::remote::{JsonClient, RemoteFailure};
use crate::text::{char_slice, word_count};

pub const DEFAULT_SEPARATOR: &str = " | ";

/// Which parts go into the summarizer input, and in what order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SummaryVariant {
    /// Paragraph only.
    C,
    /// Paragraph, then query.
    CQ,
    /// Query, then paragraph.
    QC,
    /// Answer sentences, then query.
    AQ,
    /// Query, then answer sentences.
    #[serde(rename = "QA")]
    QA_,
    /// Paragraph, answer spans, query.
    #[default]
    CAQ,
    /// Paragraph only, consumed in retrieval order instead of re-ranked order.
    #[serde(rename = "C_nr")]
    CNr,
}

impl SummaryVariant {
    pub const ALL: [SummaryVariant; 7] = [
        SummaryVariant::C,
        SummaryVariant::CQ,
        SummaryVariant::QC,
        SummaryVariant::AQ,
        SummaryVariant::QA_,
        SummaryVariant::CAQ,
        SummaryVariant::CNr,
    ];

    pub fn parts(self) -> &'static [InputPart] {
        use InputPart::*;
        match self {
            SummaryVariant::C | SummaryVariant::CNr => &[Paragraph],
            SummaryVariant::CQ => &[Paragraph, Query],
            SummaryVariant::QC => &[Query, Paragraph],
            SummaryVariant::AQ => &[Answers, Query],
            SummaryVariant::QA_ => &[Query, Answers],
            SummaryVariant::CAQ => &[Paragraph, Answers, Query],
        }
    }

    pub fn uses_answers(self) -> bool {
        self.parts().contains(&InputPart::Answers)
    }

    /// True for variants whose answer part is whole answer sentences rather
    /// than answer spans.
    pub fn uses_answer_sentences(self) -> bool {
        matches!(self, SummaryVariant::AQ | SummaryVariant::QA_)
    }

    pub fn name(self) -> &'static str {
        match self {
            SummaryVariant::C => "C",
            SummaryVariant::CQ => "CQ",
            SummaryVariant::QC => "QC",
            SummaryVariant::AQ => "AQ",
            SummaryVariant::QA_ => "QA",
            SummaryVariant::CAQ => "CAQ",
            SummaryVariant::CNr => "C_nr",
        }
    }
}

impl fmt::Display for SummaryVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SummaryVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SummaryVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown summary variant {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputPart {
    Paragraph,
    Answers,
    Query,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizationInput {
    pub variant: SummaryVariant,
    pub parts: Vec<InputPart>,
    pub text: String,
    pub source: String,
}

/// Assembles the summarizer input for one paragraph. Answer texts are
/// joined with single spaces; parts are joined with `separator`.
pub fn build_input(
    variant: SummaryVariant,
    source: &str,
    paragraph: &str,
    answers: &[String],
    query: &str,
    separator: &str,
) -> Result<SummarizationInput, SummarizeError> {
    let answer_text = answers.iter().map(|a| a.trim()).filter(|a| !a.is_empty()).collect::<Vec<_>>().join(" ");
    if variant.uses_answers() && answer_text.is_empty() {
        return Err(SummarizeError::MissingAnswers(variant));
    }
    let pieces: Vec<&str> = variant
        .parts()
        .iter()
        .map(|p| match p {
            InputPart::Paragraph => paragraph,
            InputPart::Answers => answer_text.as_str(),
            InputPart::Query => query,
        })
        .collect();
    Ok(SummarizationInput {
        variant,
        parts: variant.parts().to_vec(),
        text: pieces.join(separator),
        source: source.to_owned(),
    })
}

/// A text-to-summary model.
pub trait SummarizerBackend: Send + Sync {
    fn summarize(&self, text: &str, max_words: usize) -> Result<String, SummarizeError>;
}

/// Builtin stand-in: the first two sentences of the input.
#[derive(Debug, Clone, Copy, Default)]
pub struct TruncationStub;

impl SummarizerBackend for TruncationStub {
    fn summarize(&self, text: &str, _max_words: usize) -> Result<String, SummarizeError> {
        let sentences = split_sentences(text);
        let Some(first) = sentences.first() else {
            return Ok(String::new());
        };
        let last = sentences[sentences.len().min(2) - 1];
        Ok(char_slice(text, first.start, last.end).unwrap_or_default().to_owned())
    }
}

#[derive(Serialize)]
struct SummarizeRequest<'a> {
    text: &'a str,
    max_words: usize,
}

#[derive(Deserialize)]
struct SummarizeResponse {
    summary: String,
}

/// Client for a summarizer served over `POST /summarize`.
#[derive(Debug, Clone)]
pub struct RemoteSummarizer {
    client: JsonClient,
}

impl RemoteSummarizer {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        Self {
            client: JsonClient::new(endpoint, "/summarize", timeout),
        }
    }
}

impl SummarizerBackend for RemoteSummarizer {
    fn summarize(&self, text: &str, max_words: usize) -> Result<String, SummarizeError> {
        self.client
            .post::<_, SummarizeResponse>(&SummarizeRequest { text, max_words })
            .map(|r| r.summary)
            .map_err(|f| match f {
                RemoteFailure::Unavailable(m) => SummarizeError::Unavailable(m),
                RemoteFailure::Protocol(m) => SummarizeError::Protocol(m),
            })
    }
}

/// One paragraph offered to the summarizer with both of its rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryParagraph {
    pub para_id: String,
    pub text: String,
    pub answer_spans: Vec<String>,
    pub answer_sentences: Vec<String>,
    /// 0-based position in the retriever's list.
    pub retrieval_rank: usize,
    /// 0-based position after answer re-ranking.
    pub rerank_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractiveSegment {
    pub para_id: String,
    pub text: String,
    pub words: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedParagraph {
    pub para_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractiveSummary {
    pub variant: SummaryVariant,
    pub text: String,
    /// Output segments in consumption order; each maps to one paragraph.
    pub segments: Vec<AbstractiveSegment>,
    pub skipped: Vec<SkippedParagraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractiveOptions {
    pub k: usize,
    pub variant: SummaryVariant,
    /// When set, paragraphs are consumed until the output reaches this many words.
    pub word_budget: Option<usize>,
    pub separator: String,
    /// Length hint passed to the summarizer for each paragraph.
    pub max_words: usize,
}

impl Default for AbstractiveOptions {
    fn default() -> Self {
        Self {
            k: 3,
            variant: SummaryVariant::CAQ,
            word_budget: None,
            separator: DEFAULT_SEPARATOR.to_owned(),
            max_words: 120,
        }
    }
}

fn summarize_one(
    query: &str,
    p: &SummaryParagraph,
    opts: &AbstractiveOptions,
    backend: &dyn SummarizerBackend,
) -> Result<AbstractiveSegment, SkippedParagraph> {
    let answers = if opts.variant.uses_answer_sentences() {
        &p.answer_sentences
    } else {
        &p.answer_spans
    };
    let skip = |reason: String| SkippedParagraph {
        para_id: p.para_id.clone(),
        reason,
    };
    let input = build_input(opts.variant, &p.para_id, &p.text, answers, query, &opts.separator)
        .map_err(|e| skip(e.to_string()))?;
    let text = backend
        .summarize(&input.text, opts.max_words)
        .map_err(|e| skip(e.to_string()))?;
    Ok(AbstractiveSegment {
        para_id: p.para_id.clone(),
        words: word_count(&text),
        text,
    })
}

/// Summarizes paragraphs one by one and concatenates the summaries in
/// consumption order (re-ranked order, or retrieval order for `C_nr`).
///
/// Without a budget the first `k` paragraphs are consumed. With a budget,
/// paragraphs are consumed until the cumulative summary length first
/// reaches it. A paragraph whose input cannot be built or whose backend
/// call fails is skipped with a note; if nothing succeeds it is an error.
pub fn abstractive_summary(
    query: &str,
    paragraphs: &[SummaryParagraph],
    opts: &AbstractiveOptions,
    backend: &dyn SummarizerBackend,
    exec: Execution,
) -> Result<AbstractiveSummary, SummarizeError> {
    let mut ordered: Vec<&SummaryParagraph> = paragraphs.iter().collect();
    if opts.variant == SummaryVariant::CNr {
        ordered.sort_by_key(|p| p.retrieval_rank);
    } else {
        ordered.sort_by_key(|p| p.rerank_rank);
    }

    let mut segments = Vec::new();
    let mut skipped = Vec::new();
    match opts.word_budget {
        None => {
            ordered.truncate(opts.k);
            for r in par::map(exec, &ordered, |p| summarize_one(query, p, opts, backend)) {
                match r {
                    Ok(s) => segments.push(s),
                    Err(s) => skipped.push(s),
                }
            }
        }
        Some(budget) => {
            let mut total = 0;
            for p in ordered {
                if total >= budget {
                    break;
                }
                match summarize_one(query, p, opts, backend) {
                    Ok(s) => {
                        total += s.words;
                        segments.push(s);
                    }
                    Err(s) => skipped.push(s),
                }
            }
        }
    }
    for s in &skipped {
        warn!("summary skipped {}: {}", s.para_id, s.reason);
    }
    if segments.is_empty() && !skipped.is_empty() {
        return Err(SummarizeError::AllFailed(skipped));
    }
    Ok(AbstractiveSummary {
        variant: opts.variant,
        text: segments.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" "),
        segments,
        skipped,
    })
}
