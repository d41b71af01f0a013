//! Query-focused multi-document summarization.

mod abstractive;
mod embed;
mod extractive;
mod lead;

use serde::{Deserialize, Serialize};

pub use abstractive::{
    abstractive_summary, build_input, AbstractiveOptions, AbstractiveSegment, AbstractiveSummary, InputPart,
    RemoteSummarizer, SkippedParagraph, SummarizationInput, SummarizerBackend, SummaryParagraph,
    SummaryVariant, TruncationStub, DEFAULT_SEPARATOR,
};
pub use embed::{cosine, embed_sentence, EmbeddingBackend, HashEmbedder, RemoteEmbedder, SentenceEmbedding, TokenMatrix};
pub use extractive::{
    extractive_summary, select_top, AnswerSentence, ExtractiveSentence, ExtractiveSummary, EXTRACTIVE_TOP_K,
};
pub use lead::{lead_baseline, LeadDocument, LeadSummary, DEFAULT_WORD_BUDGET};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SummarizeError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sentence embedding needs at least one token vector")]
    NoTokens,
    #[error("variant {0} needs answer text but none was given")]
    MissingAnswers(SummaryVariant),
    #[error("no candidate sentences to rank")]
    NoCandidates,
    #[error("no documents for the LEAD baseline")]
    EmptyCollection,
    #[error("summarizer backend unavailable: {0}")]
    Unavailable(String),
    #[error("summarizer backend protocol error: {0}")]
    Protocol(String),
    #[error("every paragraph failed to summarize")]
    AllFailed(Vec<SkippedParagraph>),
}

/// Extractive and abstractive output for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryBundle {
    pub query: String,
    pub extractive: Option<ExtractiveSummary>,
    pub abstractive: Option<AbstractiveSummary>,
    pub k: usize,
    pub word_budget: Option<usize>,
}
