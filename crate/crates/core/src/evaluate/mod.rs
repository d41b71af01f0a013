//! Ranking and summarization evaluation.

mod dataset;
mod harness;
mod ranking;
mod rouge;

pub use dataset::{
    load_dataset, parse_dataset, Cases, Dataset, DatasetFormat, QaCase, RecordRejection, SummaryCase,
    SummaryDocument,
};
pub use harness::{
    build_ranking_case, evaluate_dataset, evaluate_summary_case, parse_metrics, CaseRank, CaseRejection,
    EvalReport, MeanRouge, Metric, RankingSetup, SystemRouge, SUMMARY_SYSTEMS,
};
pub use ranking::{
    contains_answer, mrr, p_at_1, r_at_3, ranking_metrics, CaseCandidate, RankingCase, RankingMetrics, SentenceRef,
};
pub use rouge::{
    lcs_len, rouge_l, rouge_l_tokens, rouge_n, rouge_n_tokens, rouge_report, rouge_su4, rouge_su4_tokens,
    rouge_tokens, RougeMetric, RougeOptions, RougeReport, RougeScore, SU4_MAX_SKIP,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no cases to evaluate")]
    NoCases,
    #[error("at least one reference is required")]
    NoReferences,
    #[error("n-gram order must be positive, got {0}")]
    InvalidOrder(usize),
    #[error("case {0}: {1}")]
    InvalidCase(String, String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("metric: {0}")]
    Metric(String),
    #[error("backend failure: {0}")]
    Backend(String),
}
