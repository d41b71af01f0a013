//! Answer evidence: the QA backend contract, the builtin lexical backend,
//! fusion of two backends' spans, and expansion of spans to sentences.

mod fusion;
mod lexical;
mod remote;

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use fusion::{expand_to_sentences, fuse_answers, FusedSpan};
pub use lexical::{lexical_oracle, minimal_window, LexicalBackend};
pub use remote::RemoteQaBackend;

use crate::corpus::{CharSpan, Paragraph};
use crate::par::{self, Execution};
use crate::text::{char_len, char_slice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendRole {
    /// Broad-coverage reader; its confidence is `s_m`.
    Generalist,
    /// Domain-tuned reader; its confidence is `s_b`.
    DomainExpert,
    /// The builtin keyword-coverage backend standing in for both readers.
    Lexical,
}

impl fmt::Display for BackendRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendRole::Generalist => "generalist",
            BackendRole::DomainExpert => "domain_expert",
            BackendRole::Lexical => "lexical",
        })
    }
}

pub const BUILTIN_ENDPOINT: &str = "builtin";

fn default_timeout_ms() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub role: BackendRole,
    /// Base URI of a remote backend, or `"builtin"`.
    pub endpoint: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl BackendDescriptor {
    pub fn builtin(role: BackendRole) -> Self {
        Self {
            role,
            endpoint: BUILTIN_ENDPOINT.to_owned(),
            timeout_ms: default_timeout_ms(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn is_builtin(&self) -> bool {
        self.endpoint == BUILTIN_ENDPOINT
    }
}

/// A predicted answer span with the backend's confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSpan {
    pub start: usize,
    pub end: usize,
    /// Optional on the wire; always rewritten from the offsets.
    #[serde(default)]
    pub text: String,
    pub score: f64,
}

impl RawSpan {
    pub fn span(&self) -> CharSpan {
        CharSpan::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvidenceError {
    #[error("{role} backend unavailable: {message}")]
    Unavailable { role: BackendRole, message: String },
    #[error("{role} backend protocol error: {message}")]
    Protocol { role: BackendRole, message: String },
    #[error("span [{start}, {end}) out of bounds for text of length {len}")]
    OutOfBounds { start: usize, end: usize, len: usize },
}

impl EvidenceError {
    pub fn role(&self) -> Option<BackendRole> {
        match self {
            EvidenceError::Unavailable { role, .. } | EvidenceError::Protocol { role, .. } => Some(*role),
            EvidenceError::OutOfBounds { .. } => None,
        }
    }
}

/// A QA reader: given a query and a context, predict answer spans.
pub trait QaBackend: Send + Sync {
    fn answer(&self, role: BackendRole, query: &str, context: &str) -> Result<Vec<RawSpan>, EvidenceError>;
}

/// Checks `0 <= start < end <= len` and rewrites `text` from the offsets.
pub fn validate_span(span: &RawSpan, text: &str) -> Result<RawSpan, EvidenceError> {
    let len = char_len(text);
    let oob = EvidenceError::OutOfBounds {
        start: span.start,
        end: span.end,
        len,
    };
    if span.start >= span.end || span.end > len || !span.score.is_finite() {
        return Err(oob);
    }
    let slice = char_slice(text, span.start, span.end).ok_or(oob)?;
    Ok(RawSpan {
        text: slice.to_owned(),
        ..span.clone()
    })
}

/// Queries one backend and validates every returned span against the
/// paragraph. An invalid span is a protocol error of that backend.
pub fn query_backend(
    backend: &dyn QaBackend,
    role: BackendRole,
    query: &str,
    paragraph: &Paragraph,
) -> Result<Vec<RawSpan>, EvidenceError> {
    let spans = backend.answer(role, query, &paragraph.text)?;
    spans
        .iter()
        .map(|s| {
            validate_span(s, &paragraph.text).map_err(|e| EvidenceError::Protocol {
                role,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Answer evidence for one paragraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceCandidate {
    pub paragraph: String,
    pub spans: Vec<FusedSpan>,
    pub evidence_sentences: Vec<usize>,
    /// Generalist confidence: the maximum span score, 0 when it found no
    /// span, `None` when the backend failed.
    pub s_m: Option<f64>,
    /// Domain-expert confidence, same conventions as `s_m`.
    pub s_b: Option<f64>,
}

/// Evidence plus any backend failures met while producing it.
#[derive(Debug, Clone)]
pub struct EvidenceOutcome {
    pub candidate: EvidenceCandidate,
    pub failures: Vec<EvidenceError>,
}

fn max_score(spans: &[RawSpan]) -> f64 {
    spans.iter().map(|s| s.score).fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s)))).unwrap_or(0.0)
}

/// Two readers whose predictions are fused.
#[derive(Clone)]
pub struct Ensemble {
    generalist: Arc<dyn QaBackend>,
    domain_expert: Arc<dyn QaBackend>,
}

impl fmt::Debug for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ensemble").finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid backend ensemble: {0}")]
pub struct EnsembleConfigError(pub String);

impl Ensemble {
    pub fn new(generalist: Arc<dyn QaBackend>, domain_expert: Arc<dyn QaBackend>) -> Self {
        Self {
            generalist,
            domain_expert,
        }
    }

    /// Both slots filled by the builtin lexical backend.
    pub fn lexical() -> Self {
        let b: Arc<dyn QaBackend> = Arc::new(LexicalBackend);
        Self::new(b.clone(), b)
    }

    /// Builds an ensemble from descriptors: exactly one generalist and one
    /// domain expert, or a single lexical descriptor filling both slots.
    pub fn from_descriptors(descriptors: &[BackendDescriptor]) -> Result<Self, EnsembleConfigError> {
        let make = |d: &BackendDescriptor| -> Arc<dyn QaBackend> {
            if d.is_builtin() {
                Arc::new(LexicalBackend)
            } else {
                Arc::new(RemoteQaBackend::new(&d.endpoint, d.timeout()))
            }
        };
        if let [only] = descriptors {
            if only.role == BackendRole::Lexical {
                let b = make(only);
                return Ok(Self::new(b.clone(), b));
            }
        }
        let pick = |role: BackendRole| -> Result<&BackendDescriptor, EnsembleConfigError> {
            let found: Vec<_> = descriptors.iter().filter(|d| d.role == role).collect();
            match found.as_slice() {
                [one] => Ok(one),
                _ => Err(EnsembleConfigError(format!("expected exactly one {role} backend, got {}", found.len()))),
            }
        };
        let g = pick(BackendRole::Generalist)?;
        let b = pick(BackendRole::DomainExpert)?;
        if descriptors.len() != 2 {
            return Err(EnsembleConfigError("unexpected extra backends".into()));
        }
        Ok(Self::new(make(g), make(b)))
    }

    /// Queries both readers (concurrently when available), fuses their spans
    /// and expands them to evidence sentences. A failing reader contributes
    /// no spans and a `None` score.
    pub fn evidence(&self, query: &str, paragraph: &Paragraph, exec: Execution) -> EvidenceOutcome {
        let (m, b) = par::join(
            exec,
            || query_backend(self.generalist.as_ref(), BackendRole::Generalist, query, paragraph),
            || query_backend(self.domain_expert.as_ref(), BackendRole::DomainExpert, query, paragraph),
        );
        let mut failures = Vec::new();
        let mut take = |r: Result<Vec<RawSpan>, EvidenceError>| match r {
            Ok(spans) => (Some(max_score(&spans)), spans),
            Err(e) => {
                failures.push(e);
                (None, Vec::new())
            }
        };
        let (s_m, spans_m) = take(m);
        let (s_b, spans_b) = take(b);
        let spans = fuse_answers(&spans_m, &spans_b, &paragraph.text)
            .expect("spans were validated against this paragraph");
        let evidence_sentences = expand_to_sentences(&spans, &paragraph.sentences);
        EvidenceOutcome {
            candidate: EvidenceCandidate {
                paragraph: paragraph.para_id.clone(),
                spans,
                evidence_sentences,
                s_m,
                s_b,
            },
            failures,
        }
    }
}
