//! Runs a dataset through the pipeline and scores the output.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use super::dataset::{Cases, Dataset, DatasetFormat, QaCase, RecordRejection, SummaryCase};
use super::ranking::{contains_answer, ranking_metrics, CaseCandidate, RankingCase, RankingMetrics, SentenceRef};
use super::rouge::{rouge_report, RougeMetric, RougeOptions, RougeReport, RougeScore};
use super::EvalError;
use crate::config::EngineConfig;
use crate::corpus::{paragraphs_for, CorpusManifest, Document, Paragraph, SplitterConfig, DEFAULT_MAX_WORDS};
use crate::evidence::{Ensemble, FusedSpan};
use crate::index::{IndexConfig, ParagraphIndex};
use crate::par::{self, Execution};
use crate::pipeline::{Backends, Engine, IncludeFlags, PipelineError, QueryRequest};
use crate::rank::{rerank, KeywordTagger, LexiconTagger, ScoringConfig};
use crate::summarize::{lead_baseline, LeadDocument, DEFAULT_WORD_BUDGET};

pub const SUMMARY_SYSTEMS: [&str; 3] = ["abstractive", "extractive", "lead"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Mrr,
    PAt1,
    RAt3,
    Rouge(RougeMetric),
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Mrr => "mrr",
            Metric::PAt1 => "p@1",
            Metric::RAt3 => "r@3",
            Metric::Rouge(m) => m.name(),
        }
    }

    pub fn is_ranking(self) -> bool {
        !matches!(self, Metric::Rouge(_))
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match k.as_str() {
            "mrr" => Metric::Mrr,
            "p@1" | "p-at-1" | "p1" => Metric::PAt1,
            "r@3" | "r-at-3" | "r3" => Metric::RAt3,
            "rouge-1" | "rouge1" => Metric::Rouge(RougeMetric::Rouge1),
            "rouge-2" | "rouge2" => Metric::Rouge(RougeMetric::Rouge2),
            "rouge-l" | "rougel" => Metric::Rouge(RougeMetric::RougeL),
            "rouge-su4" | "rougesu4" => Metric::Rouge(RougeMetric::RougeSu4),
            _ => return Err(format!("unknown metric {s:?}")),
        })
    }
}

/// Parses a comma-separated metric list; an empty list selects every
/// metric that applies to `format`.
pub fn parse_metrics(list: &str, format: DatasetFormat) -> Result<Vec<Metric>, EvalError> {
    let ranking = format == DatasetFormat::CovidqaLike;
    let mut out: Vec<Metric> = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Metric = part.parse().map_err(EvalError::Metric)?;
        if m.is_ranking() != ranking {
            return Err(EvalError::Metric(format!("{} does not apply to {format}", m.name())));
        }
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        out = if ranking {
            vec![Metric::Mrr, Metric::PAt1, Metric::RAt3]
        } else {
            RougeMetric::ALL.iter().map(|&m| Metric::Rouge(m)).collect()
        };
    }
    Ok(out)
}

/// Everything a ranking case needs besides the case itself.
pub struct RankingSetup<'a> {
    pub ensemble: &'a Ensemble,
    pub tagger: &'a dyn KeywordTagger,
    pub scoring: &'a ScoringConfig,
    pub paragraph_words: usize,
    pub exec: Execution,
}

fn article_paragraphs(id: &str, text: &str, max_words: usize) -> Vec<Paragraph> {
    let doc = Document {
        doc_id: id.to_owned(),
        title: String::new(),
        abstract_text: String::new(),
        body_paragraphs: text
            .split("\n\n")
            .filter(|b| !b.trim().is_empty())
            .map(str::to_owned)
            .collect(),
        publish_date: None,
        source_uri: None,
    };
    paragraphs_for(&doc, max_words)
}

fn top_span(spans: &[FusedSpan]) -> Option<&FusedSpan> {
    spans
        .iter()
        .min_by(|a, b| b.score.total_cmp(&a.score).then(a.start.cmp(&b.start)))
}

/// Splits the article, picks one sentence per paragraph (the one holding
/// the strongest answer span, else the first) and orders the picks by the
/// paragraph re-rank score. A case whose answer never occurs in the
/// article is rejected.
pub fn build_ranking_case(case: &QaCase, setup: &RankingSetup<'_>) -> Result<Result<RankingCase, String>, EvalError> {
    let paragraphs = article_paragraphs(&case.id, &case.context, setup.paragraph_words);
    let mut gold = Vec::new();
    for (pi, p) in paragraphs.iter().enumerate() {
        for si in 0..p.sentences.len() {
            let text = p.sentence_text(si).unwrap_or_default();
            if case.answers.iter().any(|a| contains_answer(text, a)) {
                gold.push(SentenceRef { paragraph: pi, sentence: si });
            }
        }
    }
    if gold.is_empty() {
        return Ok(Err("gold answer not found in context".into()));
    }

    let mut candidates = Vec::with_capacity(paragraphs.len());
    for p in &paragraphs {
        let outcome = setup.ensemble.evidence(&case.question, p, setup.exec);
        if outcome.failures.len() >= 2 {
            return Err(EvalError::Backend(outcome.failures[0].to_string()));
        }
        candidates.push((p.clone(), outcome.candidate));
    }
    let ranked = rerank(&candidates, &case.question, setup.scoring, setup.tagger, setup.exec);
    let position: std::collections::HashMap<&str, usize> =
        paragraphs.iter().enumerate().map(|(i, p)| (p.para_id.as_str(), i)).collect();
    let picks = ranked
        .iter()
        .map(|r| {
            let pi = position[r.paragraph.as_str()];
            let p = &paragraphs[pi];
            let si = top_span(&r.evidence.spans)
                .and_then(|s| p.sentences.iter().position(|sent| sent.start <= s.start && s.start < sent.end))
                .unwrap_or(0);
            CaseCandidate {
                sentence: SentenceRef { paragraph: pi, sentence: si },
                text: p.sentence_text(si).unwrap_or_default().to_owned(),
                score: r.score_rerank,
            }
        })
        .collect();
    Ok(RankingCase::new(&case.id, &case.question, paragraphs.len(), picks, gold).map_err(|e| e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRank {
    pub case_id: String,
    pub n_paragraphs: usize,
    pub first_golden_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRejection {
    pub case_id: String,
    pub reason: String,
}

/// Per-metric means over cases.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanRouge {
    pub rouge_1: RougeScore,
    pub rouge_2: RougeScore,
    pub rouge_l: RougeScore,
    pub rouge_su4: RougeScore,
}

impl MeanRouge {
    pub fn of(reports: &[RougeReport]) -> Self {
        let n = reports.len().max(1) as f64;
        let mean = |m: RougeMetric| {
            let (r, p, f) = reports.iter().map(|x| x.get(m)).fold((0.0, 0.0, 0.0), |acc, s| {
                (acc.0 + s.recall, acc.1 + s.precision, acc.2 + s.f1)
            });
            RougeScore {
                recall: r / n,
                precision: p / n,
                f1: f / n,
            }
        };
        Self {
            rouge_1: mean(RougeMetric::Rouge1),
            rouge_2: mean(RougeMetric::Rouge2),
            rouge_l: mean(RougeMetric::RougeL),
            rouge_su4: mean(RougeMetric::RougeSu4),
        }
    }

    pub fn get(&self, metric: RougeMetric) -> RougeScore {
        match metric {
            RougeMetric::Rouge1 => self.rouge_1,
            RougeMetric::Rouge2 => self.rouge_2,
            RougeMetric::RougeL => self.rouge_l,
            RougeMetric::RougeSu4 => self.rouge_su4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRouge {
    pub system: String,
    pub n_cases: usize,
    /// Cases where the system produced no text; they score zero.
    pub n_empty: usize,
    pub mean: MeanRouge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: DatasetFormat,
    pub n_records: usize,
    pub n_cases: usize,
    pub rejections: Vec<RecordRejection>,
    pub case_rejections: Vec<CaseRejection>,
    pub paragraph_words: usize,
    pub scoring: ScoringConfig,
    pub rouge_options: RougeOptions,
    pub word_budget: Option<usize>,
    pub ranking: Option<RankingMetrics>,
    pub case_ranks: Vec<CaseRank>,
    pub summarization: Option<Vec<SystemRouge>>,
}

impl EvalReport {
    pub fn rejected(&self) -> usize {
        self.rejections.len() + self.case_rejections.len()
    }

    /// Aligned plain-text table of the selected metrics.
    pub fn to_table(&self, metrics: &[Metric]) -> String {
        let mut rows: Vec<[String; 5]> = Vec::new();
        if let Some(r) = &self.ranking {
            rows.push(["metric".into(), "value".into(), String::new(), String::new(), String::new()]);
            for m in metrics {
                let v = match m {
                    Metric::Mrr => r.mrr,
                    Metric::PAt1 => r.p_at_1,
                    Metric::RAt3 => r.r_at_3,
                    Metric::Rouge(_) => continue,
                };
                rows.push([m.name().into(), format!("{v:.4}"), String::new(), String::new(), String::new()]);
            }
        }
        if let Some(systems) = &self.summarization {
            rows.push(["system".into(), "metric".into(), "recall".into(), "precision".into(), "f1".into()]);
            for s in systems {
                for m in metrics {
                    let Metric::Rouge(rm) = m else { continue };
                    let v = s.mean.get(*rm);
                    rows.push([
                        s.system.clone(),
                        rm.name().into(),
                        format!("{:.4}", v.recall),
                        format!("{:.4}", v.precision),
                        format!("{:.4}", v.f1),
                    ]);
                }
            }
        }
        let mut widths = [0usize; 5];
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        for r in &rows {
            let cells: Vec<String> = r
                .iter()
                .zip(widths)
                .filter(|(_, w)| *w > 0)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        let _ = writeln!(
            out,
            "cases={} records={} rejected={} paragraph_words={}",
            self.n_cases,
            self.n_records,
            self.rejected(),
            self.paragraph_words
        );
        out
    }
}

/// Scores the three summary systems for one case. The case's documents
/// become a private in-memory index queried with the case query.
pub fn evaluate_summary_case(
    case: &SummaryCase,
    config: &EngineConfig,
    backends: &Backends,
    word_budget: Option<usize>,
    rouge: RougeOptions,
) -> Result<Vec<(RougeReport, bool)>, EvalError> {
    let documents: Vec<Document> = case
        .documents
        .iter()
        .map(|d| Document {
            doc_id: d.doc_id.clone(),
            title: String::new(),
            abstract_text: String::new(),
            body_paragraphs: d
                .text
                .split("\n\n")
                .filter(|b| !b.trim().is_empty())
                .map(str::to_owned)
                .collect(),
            publish_date: d.date,
            source_uri: None,
        })
        .collect();
    let paragraphs: Vec<Paragraph> = documents
        .iter()
        .flat_map(|d| paragraphs_for(d, DEFAULT_MAX_WORDS))
        .collect();
    let references: Vec<&str> = case.references.iter().map(String::as_str).collect();
    let lead_docs: Vec<LeadDocument> = documents.iter().map(LeadDocument::from_document).collect();
    let lead = lead_baseline(&lead_docs, DEFAULT_WORD_BUDGET)
        .map(|l| l.text())
        .unwrap_or_default();

    let (abstractive, extractive) = if paragraphs.is_empty() {
        (String::new(), String::new())
    } else {
        let manifest = CorpusManifest {
            corpus_id: case.id.clone(),
            n_documents: documents.len(),
            n_paragraphs: paragraphs.len(),
            n_rejected: 0,
            created_at: DateTime::UNIX_EPOCH,
            splitter: SplitterConfig::default(),
        };
        let index = ParagraphIndex::build(&manifest, &documents, &paragraphs, IndexConfig::default())
            .map_err(|e| EvalError::InvalidCase(case.id.clone(), e.to_string()))?;
        let mut cfg = config.clone();
        cfg.execution = Execution::Sequential;
        let engine = Engine::from_parts(index, &documents, paragraphs, cfg)
            .map_err(|e| EvalError::Backend(e.to_string()))?
            .with_backends(backends.clone());
        let top_n = config.retrieval.top_n.max(config.summary.top_k);
        let mut req = QueryRequest::new([case.query.clone()]);
        req.top_n = Some(top_n);
        req.word_budget = word_budget;
        req.include = IncludeFlags {
            snippets: false,
            extractive: true,
            abstractive: true,
        };
        let resp = engine.run(&req).map_err(|e| match e {
            PipelineError::BackendUnavailable { .. } => EvalError::Backend(e.to_string()),
            other => EvalError::InvalidCase(case.id.clone(), other.to_string()),
        })?;
        let bundle = resp.results.into_iter().next().and_then(|r| r.summary);
        let a = bundle
            .as_ref()
            .and_then(|b| b.abstractive.as_ref())
            .map(|s| s.text.clone())
            .unwrap_or_default();
        let e = bundle
            .as_ref()
            .and_then(|b| b.extractive.as_ref())
            .map(|s| s.text.clone())
            .unwrap_or_default();
        (a, e)
    };

    [abstractive, extractive, lead]
        .iter()
        .map(|text| Ok((rouge_report(text, &references, rouge)?, text.trim().is_empty())))
        .collect()
}

/// Scores every case of `dataset`. Cases run in parallel under
/// `config.execution` and are reduced in dataset order.
pub fn evaluate_dataset(
    dataset: &Dataset,
    config: &EngineConfig,
    backends: &Backends,
    tagger: Option<Arc<dyn KeywordTagger>>,
) -> Result<EvalReport, EvalError> {
    let exec = config.execution;
    let mut report = EvalReport {
        format: dataset.format,
        n_records: dataset.n_records,
        n_cases: 0,
        rejections: dataset.rejections.clone(),
        case_rejections: Vec::new(),
        paragraph_words: config.eval.paragraph_words,
        scoring: config.scoring,
        rouge_options: config.eval.rouge,
        word_budget: None,
        ranking: None,
        case_ranks: Vec::new(),
        summarization: None,
    };
    match &dataset.cases {
        Cases::Qa(cases) => {
            let tagger = tagger.unwrap_or_else(|| Arc::new(LexiconTagger));
            let setup = RankingSetup {
                ensemble: &backends.ensemble,
                tagger: tagger.as_ref(),
                scoring: &config.scoring,
                paragraph_words: config.eval.paragraph_words,
                exec: Execution::Sequential,
            };
            let built = par::map(exec, cases, |c| build_ranking_case(c, &setup));
            let mut ranked = Vec::new();
            for (c, b) in cases.iter().zip(built) {
                match b? {
                    Ok(rc) => ranked.push(rc),
                    Err(reason) => report.case_rejections.push(CaseRejection {
                        case_id: c.id.clone(),
                        reason,
                    }),
                }
            }
            report.ranking = Some(ranking_metrics(&ranked)?);
            report.n_cases = ranked.len();
            report.case_ranks = ranked
                .iter()
                .map(|c| CaseRank {
                    case_id: c.case_id.clone(),
                    n_paragraphs: c.n_paragraphs,
                    first_golden_rank: c.first_golden_rank(),
                })
                .collect();
        }
        Cases::Summary(cases) => {
            if cases.is_empty() {
                return Err(EvalError::NoCases);
            }
            let budget = match dataset.format {
                DatasetFormat::DucLike => Some(config.summary.word_budget.unwrap_or(DEFAULT_WORD_BUDGET)),
                _ => config.summary.word_budget,
            };
            report.word_budget = budget;
            let scored = par::map(exec, cases, |c| {
                evaluate_summary_case(c, config, backends, budget, config.eval.rouge)
            });
            let mut per_system: Vec<Vec<RougeReport>> = vec![Vec::new(); SUMMARY_SYSTEMS.len()];
            let mut empties = [0usize; 3];
            for s in scored {
                for (i, (r, empty)) in s?.into_iter().enumerate() {
                    per_system[i].push(r);
                    empties[i] += usize::from(empty);
                }
            }
            report.n_cases = cases.len();
            report.summarization = Some(
                SUMMARY_SYSTEMS
                    .iter()
                    .zip(per_system)
                    .zip(empties)
                    .map(|((name, reps), n_empty)| SystemRouge {
                        system: (*name).to_owned(),
                        n_cases: reps.len(),
                        n_empty,
                        mean: MeanRouge::of(&reps),
                    })
                    .collect(),
            );
        }
    }
    Ok(report)
}
