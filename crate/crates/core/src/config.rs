//! Engine configuration: a TOML file with environment overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evidence::{BackendDescriptor, BackendRole, BUILTIN_ENDPOINT};
use crate::evaluate::RougeOptions;
use crate::index::{Bm25Params, FieldWeights};
use crate::par::Execution;
use crate::rank::ScoringConfig;
use crate::summarize::{SummaryVariant, DEFAULT_SEPARATOR};

pub const ENV_CONFIG: &str = "LITRANK_CONFIG";
pub const ENV_INDEX_DIR: &str = "LITRANK_INDEX_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub top_n: usize,
    /// Overrides the BM25 parameters stored with the index.
    pub bm25: Option<Bm25Params>,
    /// Overrides the field weights stored with the index.
    pub field_weights: Option<FieldWeights>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            top_n: 30,
            bm25: None,
            field_weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryConfig {
    pub top_k: usize,
    pub variant: SummaryVariant,
    pub separator: String,
    /// Length hint sent to the summarizer per paragraph.
    pub max_words: usize,
    pub word_budget: Option<usize>,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self {
            top_k: 3,
            variant: SummaryVariant::CAQ,
            separator: DEFAULT_SEPARATOR.to_owned(),
            max_words: 120,
            word_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendsConfig {
    pub qa: Vec<BackendDescriptor>,
    /// `"builtin"` or the base URI of an `/embed` server.
    pub embedder: String,
    /// `"builtin"` or the base URI of a `/summarize` server.
    pub summarizer: String,
    pub timeout_ms: u64,
}

impl Default for BackendsConfig {
    fn default() -> Self {
        Self {
            qa: vec![BackendDescriptor::builtin(BackendRole::Lexical)],
            embedder: BUILTIN_ENDPOINT.to_owned(),
            summarizer: BUILTIN_ENDPOINT.to_owned(),
            timeout_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Maximum words per paragraph when splitting an evaluation article.
    pub paragraph_words: usize,
    pub rouge: RougeOptions,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            paragraph_words: 100,
            rouge: RougeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub retrieval: RetrievalConfig,
    pub scoring: ScoringConfig,
    pub summary: SummaryConfig,
    pub backends: BackendsConfig,
    pub eval: EvalConfig,
    pub execution: Execution,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl EngineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s).map_err(|e| ConfigError::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// An explicit path wins; otherwise `LITRANK_CONFIG`; otherwise defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(ENV_CONFIG) {
                Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scoring.validate().map_err(ConfigError::Invalid)?;
        if self.retrieval.top_n == 0 {
            return Err(ConfigError::Invalid("retrieval.top_n must be positive".into()));
        }
        if self.summary.top_k == 0 {
            return Err(ConfigError::Invalid("summary.top_k must be positive".into()));
        }
        if let Some(b) = self.retrieval.bm25 {
            if !(b.k1.is_finite() && b.k1 >= 0.0 && (0.0..=1.0).contains(&b.b)) {
                return Err(ConfigError::Invalid(format!("bad BM25 parameters {b:?}")));
            }
        }
        Ok(())
    }
}

/// Index directory: explicit argument, else `LITRANK_INDEX_DIR`.
pub fn resolve_index_dir(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit
        .map(Path::to_owned)
        .or_else(|| std::env::var_os(ENV_INDEX_DIR).filter(|v| !v.is_empty()).map(PathBuf::from))
}
