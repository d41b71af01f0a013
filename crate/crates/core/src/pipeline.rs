//! The full query pipeline: retrieve, gather evidence, re-rank, summarize.
//!
//! [`Engine`] is immutable once built and is shared by the HTTP service and
//! the CLI, so both produce identical responses for identical requests.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{BackendsConfig, EngineConfig};
use crate::corpus::{CharSpan, CorpusError, CorpusManifest, CorpusStore, Document, Paragraph};
use crate::evidence::{BackendRole, Ensemble, BUILTIN_ENDPOINT, EnsembleConfigError, EvidenceError, FusedSpan};
use crate::index::{Bm25Params, FieldWeights, IndexError, ParagraphIndex, RetrievalHit, CORPUS_SUBDIR, INDEX_VERSION};
use crate::par;
use crate::rank::{rerank, KeywordTagger, LexiconTagger, RankedSnippet, ScoringConfig};
use crate::summarize::{
    abstractive_summary, extractive_summary, AbstractiveOptions, AnswerSentence, EmbeddingBackend, HashEmbedder,
    RemoteEmbedder, RemoteSummarizer, SummarizeError, SummarizerBackend, SummaryBundle, SummaryParagraph,
    SummaryVariant, TruncationStub, EXTRACTIVE_TOP_K,
};
use crate::text::char_slice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IncludeFlags {
    pub snippets: bool,
    pub extractive: bool,
    pub abstractive: bool,
}

impl Default for IncludeFlags {
    fn default() -> Self {
        Self {
            snippets: true,
            extractive: true,
            abstractive: true,
        }
    }
}

impl IncludeFlags {
    pub fn any(&self) -> bool {
        self.snippets || self.extractive || self.abstractive
    }

    pub fn summaries(&self) -> bool {
        self.extractive || self.abstractive
    }
}

/// One query request. Omitted fields fall back to the engine configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    /// Caller-supplied sub-queries, each processed independently.
    pub queries: Vec<String>,
    #[serde(default)]
    pub top_n: Option<usize>,
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub variant: Option<SummaryVariant>,
    #[serde(default)]
    pub word_budget: Option<usize>,
    #[serde(default)]
    pub include: IncludeFlags,
}

impl QueryRequest {
    pub fn new<S: Into<String>>(queries: impl IntoIterator<Item = S>) -> Self {
        Self {
            queries: queries.into_iter().map(Into::into).collect(),
            top_n: None,
            top_k: None,
            variant: None,
            word_budget: None,
            include: IncludeFlags::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetView {
    pub rank: usize,
    pub para_id: String,
    pub doc_id: String,
    pub title: String,
    pub source_uri: Option<String>,
    /// Paragraph text exactly as stored.
    pub text: String,
    pub retrieval_rank: usize,
    pub bm25_score: f64,
    pub s_m: Option<f64>,
    pub s_b: Option<f64>,
    pub s_conf: f64,
    pub s_match: f64,
    pub score_rerank: f64,
    pub answer_spans: Vec<FusedSpan>,
    pub evidence_sentences: Vec<usize>,
    /// Code-point offsets into `text` to highlight.
    pub highlights: Vec<CharSpan>,
    pub degraded: Vec<BackendRole>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub retrieval_ms: f64,
    pub evidence_ms: f64,
    pub rerank_ms: f64,
    pub summarize_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubQueryResult {
    pub query: String,
    pub snippets: Option<Vec<SnippetView>>,
    pub summary: Option<SummaryBundle>,
    pub degradation: Vec<String>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub scoring: ScoringConfig,
    pub bm25: Bm25Params,
    pub field_weights: FieldWeights,
    pub stemming: bool,
    pub top_n: usize,
    pub top_k: usize,
    pub variant: SummaryVariant,
    pub word_budget: Option<usize>,
    pub index_version: u32,
    pub corpus_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub results: Vec<SubQueryResult>,
    pub config: ConfigEcho,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("{component} backend unavailable: {message}")]
    BackendUnavailable { component: String, message: String },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleConfigError),
}

#[derive(Debug, Clone)]
struct DocMeta {
    title: String,
    source_uri: Option<String>,
}

/// Retrieval hits, re-ranked snippets and degradation notes for one query.
pub type RankedQuery = (Vec<RetrievalHit>, Vec<RankedSnippet>, Vec<String>);

/// The three pluggable backend slots.
#[derive(Clone)]
pub struct Backends {
    pub ensemble: Ensemble,
    pub embedder: Arc<dyn EmbeddingBackend>,
    pub summarizer: Arc<dyn SummarizerBackend>,
}

impl Backends {
    pub fn builtin() -> Self {
        Self {
            ensemble: Ensemble::lexical(),
            embedder: Arc::new(HashEmbedder::default()),
            summarizer: Arc::new(TruncationStub),
        }
    }

    pub fn from_config(config: &BackendsConfig) -> Result<Self, EnsembleConfigError> {
        let timeout = std::time::Duration::from_millis(config.timeout_ms);
        let ensemble = Ensemble::from_descriptors(&config.qa)?;
        let embedder: Arc<dyn EmbeddingBackend> = if config.embedder == BUILTIN_ENDPOINT {
            Arc::new(HashEmbedder::default())
        } else {
            Arc::new(RemoteEmbedder::new(&config.embedder, timeout))
        };
        let summarizer: Arc<dyn SummarizerBackend> = if config.summarizer == BUILTIN_ENDPOINT {
            Arc::new(TruncationStub)
        } else {
            Arc::new(RemoteSummarizer::new(&config.summarizer, timeout))
        };
        Ok(Self {
            ensemble,
            embedder,
            summarizer,
        })
    }
}

/// Loaded index, corpus and backends.
#[derive(Clone)]
pub struct Engine {
    index: ParagraphIndex,
    paragraphs: HashMap<String, Paragraph>,
    documents: HashMap<String, DocMeta>,
    ensemble: Ensemble,
    embedder: Arc<dyn EmbeddingBackend>,
    summarizer: Arc<dyn SummarizerBackend>,
    tagger: Arc<dyn KeywordTagger>,
    config: EngineConfig,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("n_paragraphs", &self.paragraphs.len())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

impl Engine {
    /// Opens a self-contained index directory written by `build_index_dir`.
    pub fn open(index_dir: &Path, config: EngineConfig) -> Result<Self, PipelineError> {
        let index = ParagraphIndex::load(index_dir)?;
        let store = CorpusStore::open(index_dir.join(CORPUS_SUBDIR))?;
        let documents = store.documents()?;
        let paragraphs = store.paragraphs()?;
        Self::from_parts(index, &documents, paragraphs, config)
    }

    /// Builds an engine around an in-memory index. Backends come from the
    /// configuration; override them with the `with_*` methods.
    pub fn from_parts(
        index: ParagraphIndex,
        documents: &[Document],
        paragraphs: Vec<Paragraph>,
        config: EngineConfig,
    ) -> Result<Self, PipelineError> {
        let mut index = index;
        let idx_cfg = index.config();
        index = index.with_scoring(
            config.retrieval.bm25.unwrap_or(idx_cfg.bm25),
            config.retrieval.field_weights.unwrap_or(idx_cfg.field_weights),
        );
        let Backends {
            ensemble,
            embedder,
            summarizer,
        } = Backends::from_config(&config.backends)?;
        Ok(Self {
            index,
            paragraphs: paragraphs.into_iter().map(|p| (p.para_id.clone(), p)).collect(),
            documents: documents
                .iter()
                .map(|d| {
                    (
                        d.doc_id.clone(),
                        DocMeta {
                            title: d.title.clone(),
                            source_uri: d.source_uri.clone(),
                        },
                    )
                })
                .collect(),
            ensemble,
            embedder,
            summarizer,
            tagger: Arc::new(LexiconTagger),
            config,
        })
    }

    pub fn with_backends(self, backends: Backends) -> Self {
        self.with_ensemble(backends.ensemble)
            .with_embedder(backends.embedder)
            .with_summarizer(backends.summarizer)
    }

    pub fn with_ensemble(mut self, ensemble: Ensemble) -> Self {
        self.ensemble = ensemble;
        self
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn EmbeddingBackend>) -> Self {
        self.embedder = embedder;
        self
    }

    pub fn with_summarizer(mut self, summarizer: Arc<dyn SummarizerBackend>) -> Self {
        self.summarizer = summarizer;
        self
    }

    pub fn with_tagger(mut self, tagger: Arc<dyn KeywordTagger>) -> Self {
        self.tagger = tagger;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn index(&self) -> &ParagraphIndex {
        &self.index
    }

    pub fn manifest(&self) -> &CorpusManifest {
        self.index.corpus_manifest()
    }

    pub fn paragraph(&self, para_id: &str) -> Option<&Paragraph> {
        self.paragraphs.get(para_id)
    }

    fn resolve(&self, req: &QueryRequest) -> Result<(usize, usize, SummaryVariant, Option<usize>), PipelineError> {
        if req.queries.is_empty() {
            return Err(PipelineError::InvalidRequest("queries must not be empty".into()));
        }
        if req.queries.iter().any(|q| q.trim().is_empty()) {
            return Err(PipelineError::InvalidRequest("queries must not be blank".into()));
        }
        if !req.include.any() {
            return Err(PipelineError::InvalidRequest("at least one include flag must be set".into()));
        }
        let top_n = req.top_n.unwrap_or(self.config.retrieval.top_n);
        let top_k = req.top_k.unwrap_or(self.config.summary.top_k);
        if top_k < 1 || top_k > top_n {
            return Err(PipelineError::InvalidRequest(format!(
                "need 1 <= top_k <= top_n, got top_k={top_k}, top_n={top_n}"
            )));
        }
        Ok((
            top_n,
            top_k,
            req.variant.unwrap_or(self.config.summary.variant),
            req.word_budget.or(self.config.summary.word_budget),
        ))
    }

    pub fn config_echo(&self, top_n: usize, top_k: usize, variant: SummaryVariant, budget: Option<usize>) -> ConfigEcho {
        let ic = self.index.config();
        ConfigEcho {
            scoring: self.config.scoring,
            bm25: ic.bm25,
            field_weights: ic.field_weights,
            stemming: ic.stemming,
            top_n,
            top_k,
            variant,
            word_budget: budget,
            index_version: INDEX_VERSION,
            corpus_id: self.manifest().corpus_id.clone(),
        }
    }

    pub fn run(&self, req: &QueryRequest) -> Result<QueryResponse, PipelineError> {
        let (top_n, top_k, variant, budget) = self.resolve(req)?;
        let exec = self.config.execution;
        let results = par::map(exec, &req.queries, |q| self.run_one(q, req.include, top_n, top_k, variant, budget));
        Ok(QueryResponse {
            results: results.into_iter().collect::<Result<_, _>>()?,
            config: self.config_echo(top_n, top_k, variant, budget),
        })
    }

    /// Retrieval, evidence and re-ranking for one query.
    pub fn rank_query(
        &self,
        query: &str,
        top_n: usize,
    ) -> Result<RankedQuery, PipelineError> {
        Ok(self.rank_query_timed(query, top_n)?.0)
    }

    fn rank_query_timed(
        &self,
        query: &str,
        top_n: usize,
    ) -> Result<(RankedQuery, StageTimings), PipelineError> {
        let exec = self.config.execution;
        let mut timings = StageTimings::default();
        let t = Instant::now();
        let hits = self.index.search(query, top_n);
        let paragraphs: Vec<&Paragraph> = hits
            .iter()
            .map(|h| {
                self.paragraphs
                    .get(&h.para_id)
                    .ok_or_else(|| PipelineError::Corpus(CorpusError::NotFound(h.para_id.clone())))
            })
            .collect::<Result<_, _>>()?;
        timings.retrieval_ms = ms_since(t);

        let t = Instant::now();
        let outcomes = par::map(exec, &paragraphs, |p| self.ensemble.evidence(query, p, exec));
        timings.evidence_ms = ms_since(t);
        let notes = check_failures(outcomes.iter().map(|o| o.failures.as_slice()))?;

        let t = Instant::now();
        let candidates: Vec<(Paragraph, _)> = paragraphs
            .iter()
            .zip(outcomes)
            .map(|(p, o)| ((*p).clone(), o.candidate))
            .collect();
        let ranked = rerank(&candidates, query, &self.config.scoring, self.tagger.as_ref(), exec);
        timings.rerank_ms = ms_since(t);
        Ok(((hits, ranked, notes), timings))
    }

    fn run_one(
        &self,
        query: &str,
        include: IncludeFlags,
        top_n: usize,
        top_k: usize,
        variant: SummaryVariant,
        budget: Option<usize>,
    ) -> Result<SubQueryResult, PipelineError> {
        let ((hits, ranked, mut degradation), mut timings) = self.rank_query_timed(query, top_n)?;
        let retrieval_rank: HashMap<&str, usize> = hits.iter().map(|h| (h.para_id.as_str(), h.rank - 1)).collect();

        let summary = if include.summaries() {
            let t = Instant::now();
            let s = self.summarize(query, &ranked, &retrieval_rank, include, top_k, variant, budget, &mut degradation)?;
            timings.summarize_ms = ms_since(t);
            Some(s)
        } else {
            None
        };

        let snippets = include.snippets.then(|| {
            ranked
                .iter()
                .enumerate()
                .map(|(i, r)| self.snippet_view(i, r, &hits, &retrieval_rank))
                .collect()
        });
        Ok(SubQueryResult {
            query: query.to_owned(),
            snippets,
            summary,
            degradation,
            timings,
        })
    }

    fn snippet_view(
        &self,
        i: usize,
        r: &RankedSnippet,
        hits: &[RetrievalHit],
        retrieval_rank: &HashMap<&str, usize>,
    ) -> SnippetView {
        let p = &self.paragraphs[&r.paragraph];
        let meta = self.documents.get(&p.doc_id);
        let rr = retrieval_rank[r.paragraph.as_str()];
        SnippetView {
            rank: i + 1,
            para_id: p.para_id.clone(),
            doc_id: p.doc_id.clone(),
            title: meta.map(|m| m.title.clone()).unwrap_or_default(),
            source_uri: meta.and_then(|m| m.source_uri.clone()),
            text: p.text.clone(),
            retrieval_rank: rr + 1,
            bm25_score: hits[rr].bm25_score,
            s_m: r.evidence.s_m,
            s_b: r.evidence.s_b,
            s_conf: r.s_conf,
            s_match: r.s_match,
            score_rerank: r.score_rerank,
            answer_spans: r.evidence.spans.clone(),
            evidence_sentences: r.evidence.evidence_sentences.clone(),
            highlights: r.highlight_spans.clone(),
            degraded: r.degraded.clone(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn summarize(
        &self,
        query: &str,
        ranked: &[RankedSnippet],
        retrieval_rank: &HashMap<&str, usize>,
        include: IncludeFlags,
        top_k: usize,
        variant: SummaryVariant,
        budget: Option<usize>,
        notes: &mut Vec<String>,
    ) -> Result<SummaryBundle, PipelineError> {
        let exec = self.config.execution;
        let mut bundle = SummaryBundle {
            query: query.to_owned(),
            extractive: None,
            abstractive: None,
            k: top_k,
            word_budget: budget,
        };
        if ranked.is_empty() {
            notes.push("no paragraphs retrieved; nothing to summarize".into());
            return Ok(bundle);
        }

        let mut answer_sentences = Vec::new();
        let mut summary_paras = Vec::new();
        for (rank, r) in ranked.iter().enumerate() {
            let p = &self.paragraphs[&r.paragraph];
            let sentences: Vec<(usize, String)> = r
                .evidence
                .evidence_sentences
                .iter()
                .filter_map(|&i| p.sentence_text(i).map(|t| (i, t.to_owned())))
                .collect();
            answer_sentences.extend(sentences.iter().map(|(i, t)| AnswerSentence {
                para_id: p.para_id.clone(),
                para_rank: rank,
                sentence_index: *i,
                text: t.clone(),
            }));
            summary_paras.push(SummaryParagraph {
                para_id: p.para_id.clone(),
                text: p.text.clone(),
                answer_spans: r
                    .evidence
                    .spans
                    .iter()
                    .filter_map(|s| char_slice(&p.text, s.start, s.end).map(str::to_owned))
                    .collect(),
                answer_sentences: sentences.into_iter().map(|(_, t)| t).collect(),
                retrieval_rank: retrieval_rank[r.paragraph.as_str()],
                rerank_rank: rank,
            });
        }

        if include.extractive {
            if answer_sentences.is_empty() {
                notes.push("no answer sentences; extractive summary omitted".into());
            } else {
                match extractive_summary(query, &answer_sentences, self.embedder.as_ref(), EXTRACTIVE_TOP_K) {
                    Ok(s) => bundle.extractive = Some(s),
                    Err(e @ (SummarizeError::Unavailable(_) | SummarizeError::Protocol(_))) => {
                        return Err(PipelineError::BackendUnavailable {
                            component: "embedder".into(),
                            message: e.to_string(),
                        })
                    }
                    Err(e) => notes.push(format!("extractive summary omitted: {e}")),
                }
            }
        }

        if include.abstractive {
            let opts = AbstractiveOptions {
                k: top_k,
                variant,
                word_budget: budget,
                separator: self.config.summary.separator.clone(),
                max_words: self.config.summary.max_words,
            };
            match abstractive_summary(query, &summary_paras, &opts, self.summarizer.as_ref(), exec) {
                Ok(s) => {
                    for sk in &s.skipped {
                        notes.push(format!("abstractive: skipped {}: {}", sk.para_id, sk.reason));
                    }
                    bundle.abstractive = Some(s);
                }
                Err(SummarizeError::AllFailed(skipped)) => {
                    if skipped.iter().all(|s| s.reason.contains("unavailable")) {
                        return Err(PipelineError::BackendUnavailable {
                            component: "summarizer".into(),
                            message: skipped[0].reason.clone(),
                        });
                    }
                    notes.push(format!(
                        "abstractive summary omitted: no paragraph could be summarized ({})",
                        skipped[0].reason
                    ));
                }
                Err(e) => notes.push(format!("abstractive summary omitted: {e}")),
            }
        }
        Ok(bundle)
    }
}

/// A reader failing on some paragraph degrades the confidence score; both
/// readers failing on the same paragraph makes the request fail.
fn check_failures<'a>(failures: impl Iterator<Item = &'a [EvidenceError]>) -> Result<Vec<String>, PipelineError> {
    let mut per_role: Vec<(BackendRole, usize, String)> = Vec::new();
    for fs in failures {
        if fs.len() >= 2 {
            return Err(PipelineError::BackendUnavailable {
                component: fs[0].role().map(|r| r.to_string()).unwrap_or_else(|| "qa".into()),
                message: fs[0].to_string(),
            });
        }
        for f in fs {
            let role = f.role().unwrap_or(BackendRole::Lexical);
            match per_role.iter_mut().find(|(r, _, _)| *r == role) {
                Some(entry) => entry.1 += 1,
                None => per_role.push((role, 1, f.to_string())),
            }
        }
    }
    per_role.sort_by_key(|(r, _, _)| *r);
    Ok(per_role
        .into_iter()
        .map(|(role, n, first)| {
            format!("{role} backend failed on {n} paragraph(s), confidence uses the other reader alone: {first}")
        })
        .collect())
}

/// Health report for the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub index_version: Option<u32>,
    pub n_paragraphs: Option<usize>,
    pub corpus_id: Option<String>,
    pub backends: Option<Vec<String>>,
}

impl Health {
    pub fn degraded(reason: &str) -> Self {
        Self {
            status: format!("degraded: {reason}"),
            index_version: None,
            n_paragraphs: None,
            corpus_id: None,
            backends: None,
        }
    }
}

impl Engine {
    pub fn health(&self) -> Health {
        let mut backends: Vec<String> = self
            .config
            .backends
            .qa
            .iter()
            .map(|d| format!("{}={}", d.role, d.endpoint))
            .collect();
        backends.push(format!("embedder={}", self.config.backends.embedder));
        backends.push(format!("summarizer={}", self.config.backends.summarizer));
        Health {
            status: "ok".into(),
            index_version: Some(INDEX_VERSION),
            n_paragraphs: Some(self.index.stats().n_paragraphs),
            corpus_id: Some(self.manifest().corpus_id.clone()),
            backends: Some(backends),
        }
    }
}
