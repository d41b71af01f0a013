//! The `litrank` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 backend failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use litrank::config::{resolve_index_dir, EngineConfig};
use litrank::corpus::{ingest, SplitterConfig};
use litrank::evaluate::{evaluate_dataset, load_dataset, parse_metrics, DatasetFormat, EvalError};
use litrank::index::{build_index_dir, Bm25Params, FieldWeights, IndexConfig};
use litrank::pipeline::{Backends, Engine, IncludeFlags, PipelineError, QueryRequest, QueryResponse};
use litrank::summarize::SummaryVariant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "litrank", version, about = "Query-focused literature search, re-ranking and summarization")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a CORD-19 style JSON/JSONL source into a corpus store.
    Ingest {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Maximum words per paragraph.
        #[arg(long, default_value_t = litrank::corpus::DEFAULT_MAX_WORDS)]
        max_words: usize,
    },
    /// Build a BM25 paragraph index from a corpus store.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stemming: bool,
        #[command(flatten)]
        retrieval: RetrievalFlags,
    },
    /// Run the pipeline for one or more sub-queries.
    Query {
        /// Index directory; defaults to LITRANK_INDEX_DIR.
        #[arg(long)]
        index: Option<PathBuf>,
        /// A sub-query; repeat for several.
        #[arg(long = "q", required = true)]
        queries: Vec<String>,
        #[arg(long)]
        top_n: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Summarizer input variant: C, CQ, QC, AQ, QA, CAQ or C_nr.
        #[arg(long, value_parser = parse_variant)]
        variant: Option<SummaryVariant>,
        #[arg(long)]
        word_budget: Option<usize>,
        /// Comma-separated subset of snippets,extractive,abstractive.
        #[arg(long, value_parser = parse_include)]
        include: Option<IncludeFlags>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// Score a labelled dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// covidqa, debatepedia or duc.
        #[arg(long)]
        format: DatasetFormat,
        /// Comma-separated metrics, e.g. mrr,p@1,r@3 or rouge-1,rouge-l. Empty selects all.
        #[arg(long, default_value = "")]
        metrics: String,
        /// Words per paragraph when splitting evaluation articles.
        #[arg(long)]
        paragraph_words: Option<usize>,
        /// Report rejected records without failing.
        #[arg(long)]
        lenient: bool,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[command(flatten)]
        engine: EngineFlags,
    },
}

#[derive(Debug, Args)]
struct RetrievalFlags {
    #[arg(long)]
    bm25_k1: Option<f64>,
    #[arg(long)]
    bm25_b: Option<f64>,
    /// body,title,abstract weights, e.g. 1.0,0.5,0.5.
    #[arg(long, value_parser = FieldWeights::parse)]
    field_weights: Option<FieldWeights>,
}

#[derive(Debug, Args)]
struct EngineFlags {
    /// TOML config file; defaults to LITRANK_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Length constraint in words.
    #[arg(long)]
    lc: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    retrieval: RetrievalFlags,
}

fn parse_variant(s: &str) -> Result<SummaryVariant, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| format!("unknown variant {s:?}"))
}

fn parse_include(s: &str) -> Result<IncludeFlags, String> {
    let mut f = IncludeFlags {
        snippets: false,
        extractive: false,
        abstractive: false,
    };
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "snippets" => f.snippets = true,
            "extractive" => f.extractive = true,
            "abstractive" => f.abstractive = true,
            other => return Err(format!("unknown include flag {other:?}")),
        }
    }
    Ok(f)
}

impl RetrievalFlags {
    fn bm25(&self, base: Bm25Params) -> Option<Bm25Params> {
        if self.bm25_k1.is_none() && self.bm25_b.is_none() {
            return None;
        }
        Some(Bm25Params {
            k1: self.bm25_k1.unwrap_or(base.k1),
            b: self.bm25_b.unwrap_or(base.b),
        })
    }
}

impl EngineFlags {
    fn config(&self) -> Result<EngineConfig, Failure> {
        let mut cfg = EngineConfig::load(self.config.as_deref()).map_err(|e| Failure::usage(e.to_string()))?;
        let s = &mut cfg.scoring;
        if let Some(v) = self.lambda1 {
            s.lambda1 = v;
        }
        if let Some(v) = self.lambda2 {
            s.lambda2 = v;
        }
        if let Some(v) = self.lc {
            s.l_c = v;
        }
        if let Some(v) = self.alpha {
            s.alpha = v;
        }
        let base = cfg.retrieval.bm25.unwrap_or_default();
        if let Some(b) = self.retrieval.bm25(base) {
            cfg.retrieval.bm25 = Some(b);
        }
        if let Some(w) = self.retrieval.field_weights {
            cfg.retrieval.field_weights = Some(w);
        }
        cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(cfg)
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl ToString) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::InvalidRequest(_) => EXIT_USAGE,
            PipelineError::BackendUnavailable { .. } | PipelineError::Ensemble(_) => EXIT_BACKEND,
            PipelineError::Index(_) | PipelineError::Corpus(_) => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let code = match e {
            EvalError::Backend(_) => EXIT_BACKEND,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::data(e)
    }
}

/// Parses `argv` (program name first) and runs the command, writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Ingest { src, out: dest, max_words } => {
            let cfg = SplitterConfig {
                max_words,
                ..SplitterConfig::default()
            };
            let m = ingest(&src, &dest, &cfg).map_err(Failure::data)?;
            writeln!(
                out,
                "corpus {}: {} documents, {} paragraphs, {} rejected",
                m.corpus_id, m.n_documents, m.n_paragraphs, m.n_rejected
            )?;
            Ok(())
        }
        Command::Index {
            corpus,
            out: dest,
            stemming,
            retrieval,
        } => {
            let defaults = IndexConfig::default();
            let cfg = IndexConfig {
                bm25: retrieval.bm25(defaults.bm25).unwrap_or(defaults.bm25),
                field_weights: retrieval.field_weights.unwrap_or(defaults.field_weights),
                stemming,
            };
            let s = build_index_dir(&corpus, &dest, cfg).map_err(Failure::data)?;
            writeln!(
                out,
                "index {}: {} paragraphs, mean body length {:.1}",
                dest.display(),
                s.n_paragraphs,
                s.avg_body_len
            )?;
            Ok(())
        }
        Command::Query {
            index,
            queries,
            top_n,
            top_k,
            variant,
            word_budget,
            include,
            json,
            engine,
        } => {
            let cfg = engine.config()?;
            let dir = index_dir(index.as_deref())?;
            let engine = Engine::open(&dir, cfg)?;
            let req = QueryRequest {
                queries,
                top_n,
                top_k,
                variant,
                word_budget,
                include: include.unwrap_or_default(),
            };
            let resp = engine.run(&req)?;
            if json {
                out.write_all(&serde_json::to_vec(&resp).map_err(Failure::data)?)?;
                writeln!(out)?;
            } else {
                render_response(&resp, out)?;
            }
            Ok(())
        }
        Command::Eval {
            dataset,
            format,
            metrics,
            paragraph_words,
            lenient,
            json,
            engine,
        } => {
            let mut cfg = engine.config()?;
            if let Some(n) = paragraph_words {
                cfg.eval.paragraph_words = n;
            }
            let metrics = parse_metrics(&metrics, format).map_err(|e| Failure::usage(e.to_string()))?;
            let data = load_dataset(&dataset, format)?;
            let backends = Backends::from_config(&cfg.backends).map_err(|e| Failure {
                code: EXIT_BACKEND,
                message: e.to_string(),
            })?;
            let report = evaluate_dataset(&data, &cfg, &backends, None)?;
            if json {
                out.write_all(&serde_json::to_vec(&report).map_err(Failure::data)?)?;
                writeln!(out)?;
            } else {
                write!(out, "{}", report.to_table(&metrics))?;
            }
            for r in &report.rejections {
                writeln!(err, "rejected record {} ({}): {}", r.record, r.id.as_deref().unwrap_or("-"), r.reason)?;
            }
            for r in &report.case_rejections {
                writeln!(err, "rejected case {}: {}", r.case_id, r.reason)?;
            }
            if report.rejected() > 0 && !lenient {
                return Err(Failure::data(format!(
                    "{} record(s) rejected; pass --lenient to accept",
                    report.rejected()
                )));
            }
            Ok(())
        }
        Command::Serve { index, port, engine } => {
            let cfg = engine.config()?;
            let state = match index_dir(index.as_deref()) {
                Ok(dir) => match Engine::open(&dir, cfg) {
                    Ok(e) => litrank_server::AppState::ready(e),
                    Err(e) => {
                        writeln!(err, "warning: serving without an index: {e}")?;
                        litrank_server::AppState::unloaded(e.to_string())
                    }
                },
                Err(f) => {
                    writeln!(err, "warning: serving without an index: {}", f.message)?;
                    litrank_server::AppState::unloaded(f.message)
                }
            };
            litrank_server::init_logging();
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = litrank_server::bind(port).await?;
                litrank_server::serve(listener, state).await
            })?;
            Ok(())
        }
    }
}

fn index_dir(explicit: Option<&Path>) -> Result<PathBuf, Failure> {
    resolve_index_dir(explicit).ok_or_else(|| Failure::usage("no index given; pass --index or set LITRANK_INDEX_DIR"))
}

fn render_response(resp: &QueryResponse, out: &mut dyn Write) -> std::io::Result<()> {
    for r in &resp.results {
        writeln!(out, "query: {}", r.query)?;
        for note in &r.degradation {
            writeln!(out, "  note: {note}")?;
        }
        if let Some(snippets) = &r.snippets {
            for s in snippets {
                writeln!(
                    out,
                    "  {:>2}. {}  score={:.4}  bm25={:.4}  {}",
                    s.rank, s.para_id, s.score_rerank, s.bm25_score, s.title
                )?;
                for h in &s.highlights {
                    let text: String = s.text.chars().skip(h.start).take(h.end - h.start).collect();
                    writeln!(out, "      > {text}")?;
                }
            }
        }
        if let Some(b) = &r.summary {
            if let Some(e) = &b.extractive {
                writeln!(out, "  extractive: {}", e.text)?;
            }
            if let Some(a) = &b.abstractive {
                writeln!(out, "  abstractive: {}", a.text)?;
            }
        }
    }
    Ok(())
}
