//! Answer re-ranking: ensemble confidence, keyword matching with a sigmoid
//! length penalty, and the combined re-rank score.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{CharSpan, Paragraph};
use crate::evidence::{BackendRole, EvidenceCandidate};
use crate::lexicon::is_closed_class;
use crate::par::{self, Execution};
use crate::text::tokenize_normalize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Higher `s_conf` first, then ascending para_id.
    #[default]
    ConfidenceThenParaId,
    /// Ascending para_id only.
    ParaId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Length constraint in whitespace words.
    pub l_c: usize,
    pub alpha: f64,
    pub tie_break: TieBreak,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.2,
            lambda2: 10.0,
            l_c: 50,
            alpha: 0.5,
            tie_break: TieBreak::default(),
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("alpha", self.alpha)] {
            if !v.is_finite() {
                return Err(format!("{name} must be finite, got {v}"));
            }
        }
        Ok(())
    }
}

/// Picks the query words that count for keyword matching.
pub trait KeywordTagger: Send + Sync {
    fn keywords(&self, query: &str) -> Vec<String>;
}

/// Default tagger: keeps normalized tokens outside the closed-class lexicon,
/// approximating a noun/verb/adjective filter.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconTagger;

impl KeywordTagger for LexiconTagger {
    fn keywords(&self, query: &str) -> Vec<String> {
        let mut seen = HashSet::new();
        tokenize_normalize(query)
            .into_iter()
            .filter(|t| !is_closed_class(t) && seen.insert(t.clone()))
            .collect()
    }
}

pub fn extract_keywords(query: &str) -> Vec<String> {
    LexiconTagger.keywords(query)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordStats {
    pub keywords: Vec<String>,
    /// Summed term frequency of all keywords in the paragraph.
    pub s_freq: f64,
    /// Number of distinct keywords present.
    pub s_num: usize,
}

pub fn keyword_stats(keywords: &[String], paragraph_text: &str) -> KeywordStats {
    let mut tf: HashMap<String, usize> = HashMap::new();
    for t in tokenize_normalize(paragraph_text) {
        *tf.entry(t).or_default() += 1;
    }
    let counts: Vec<usize> = keywords.iter().map(|k| tf.get(k).copied().unwrap_or(0)).collect();
    KeywordStats {
        keywords: keywords.to_vec(),
        s_freq: counts.iter().sum::<usize>() as f64,
        s_num: counts.iter().filter(|&&c| c > 0).count(),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `lambda1 * s_freq * sigmoid(l - l_c) + lambda2 * s_num`.
pub fn matching_score(stats: &KeywordStats, l: usize, config: &ScoringConfig) -> f64 {
    let penalty = sigmoid(l as f64 - config.l_c as f64);
    config.lambda1 * stats.s_freq * penalty + config.lambda2 * stats.s_num as f64
}

/// Ensemble confidence of two reader scores.
///
/// When both are negative: `0.5 * min(|s_m|, |s_b|) - max(|s_m|, |s_b|)`.
/// Otherwise (mixed signs included): `s_m + s_b`.
pub fn confidence_score(s_m: f64, s_b: f64) -> f64 {
    if s_m < 0.0 && s_b < 0.0 {
        let (a, b) = (s_m.abs(), s_b.abs());
        0.5 * a.min(b) - a.max(b)
    } else {
        s_m + s_b
    }
}

/// Confidence plus the readers that were missing when it was computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    pub value: f64,
    pub missing: Vec<BackendRole>,
}

/// Like [`confidence_score`], degrading to the one present score when a
/// reader is missing (0 when both are).
pub fn ensemble_confidence(s_m: Option<f64>, s_b: Option<f64>) -> Confidence {
    match (s_m, s_b) {
        (Some(m), Some(b)) => Confidence {
            value: confidence_score(m, b),
            missing: vec![],
        },
        (Some(m), None) => Confidence {
            value: m,
            missing: vec![BackendRole::DomainExpert],
        },
        (None, Some(b)) => Confidence {
            value: b,
            missing: vec![BackendRole::Generalist],
        },
        (None, None) => Confidence {
            value: 0.0,
            missing: vec![BackendRole::Generalist, BackendRole::DomainExpert],
        },
    }
}

pub fn rerank_score(s_match: f64, s_conf: f64, alpha: f64) -> f64 {
    s_match + alpha * s_conf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSnippet {
    pub paragraph: String,
    pub evidence: EvidenceCandidate,
    pub keyword_stats: KeywordStats,
    pub s_conf: f64,
    pub s_match: f64,
    pub score_rerank: f64,
    /// Evidence sentence offsets into the paragraph text, for display.
    pub highlight_spans: Vec<CharSpan>,
    /// Readers whose score was missing for this paragraph.
    pub degraded: Vec<BackendRole>,
}

pub fn score_candidate(
    paragraph: &Paragraph,
    evidence: &EvidenceCandidate,
    keywords: &[String],
    config: &ScoringConfig,
) -> RankedSnippet {
    let stats = keyword_stats(keywords, &paragraph.text);
    let s_match = matching_score(&stats, paragraph.word_count, config);
    let conf = ensemble_confidence(evidence.s_m, evidence.s_b);
    if !conf.missing.is_empty() {
        warn!("{}: confidence degraded, missing {:?}", paragraph.para_id, conf.missing);
    }
    let highlight_spans = evidence
        .evidence_sentences
        .iter()
        .filter_map(|&i| paragraph.sentences.get(i).copied())
        .collect();
    RankedSnippet {
        paragraph: paragraph.para_id.clone(),
        evidence: evidence.clone(),
        keyword_stats: stats,
        s_conf: conf.value,
        s_match,
        score_rerank: rerank_score(s_match, conf.value, config.alpha),
        highlight_spans,
        degraded: conf.missing,
    }
}

pub fn compare_snippets(a: &RankedSnippet, b: &RankedSnippet, tie_break: TieBreak) -> Ordering {
    let by_score = b.score_rerank.total_cmp(&a.score_rerank);
    match tie_break {
        TieBreak::ConfidenceThenParaId => by_score
            .then_with(|| b.s_conf.total_cmp(&a.s_conf))
            .then_with(|| a.paragraph.cmp(&b.paragraph)),
        TieBreak::ParaId => by_score.then_with(|| a.paragraph.cmp(&b.paragraph)),
    }
}

/// Scores every candidate and sorts by re-rank score (descending) under the
/// configured tie-break. Output does not depend on input order.
pub fn rerank(
    candidates: &[(Paragraph, EvidenceCandidate)],
    query: &str,
    config: &ScoringConfig,
    tagger: &dyn KeywordTagger,
    exec: Execution,
) -> Vec<RankedSnippet> {
    let keywords = tagger.keywords(query);
    let mut out = par::map(exec, candidates, |(p, e)| score_candidate(p, e, &keywords, config));
    out.sort_by(|a, b| compare_snippets(a, b, config.tie_break));
    out
}
