//! HTTP front end for the litrank pipeline.
//!
//! Endpoints live under `/v1`:
//!
//! * `POST /v1/query` runs the pipeline on a `QueryRequest` body.
//! * `GET /v1/health` reports whether an index is loaded.
//! * `GET /v1/corpus` returns the corpus manifest.
//!
//! Errors are JSON objects with an `error` field; backend failures add
//! `component`.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use tokio::net::TcpListener;

use litrank::config::{resolve_index_dir, EngineConfig};
use litrank::pipeline::{Engine, Health, PipelineError, QueryRequest};

/// Shared, immutable service state. Each request only reads it.
#[derive(Clone)]
pub struct AppState {
    engine: Option<Arc<Engine>>,
    load_error: Option<String>,
}

impl AppState {
    pub fn ready(engine: Engine) -> Self {
        Self {
            engine: Some(Arc::new(engine)),
            load_error: None,
        }
    }

    /// A state that answers health checks but rejects queries.
    pub fn unloaded(reason: impl Into<String>) -> Self {
        Self {
            engine: None,
            load_error: Some(reason.into()),
        }
    }

    /// Resolves the index directory (argument, then `LITRANK_INDEX_DIR`) and
    /// config file (argument, then `LITRANK_CONFIG`). Failures leave the
    /// service up in the degraded state.
    pub fn load(index_dir: Option<&Path>, config_path: Option<&Path>) -> Self {
        let config = match EngineConfig::load(config_path) {
            Ok(c) => c,
            Err(e) => return Self::unloaded(e.to_string()),
        };
        let Some(dir) = resolve_index_dir(index_dir) else {
            return Self::unloaded("no index directory configured");
        };
        match Engine::open(&dir, config) {
            Ok(engine) => Self::ready(engine),
            Err(e) => Self::unloaded(e.to_string()),
        }
    }

    pub fn engine(&self) -> Option<&Arc<Engine>> {
        self.engine.as_ref()
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    component: Option<String>,
}

fn error(status: StatusCode, message: impl Into<String>, component: Option<String>) -> Response {
    let body = ErrorBody {
        error: message.into(),
        component,
    };
    (status, Json(body)).into_response()
}

fn not_loaded(state: &AppState) -> Response {
    let reason = state.load_error.as_deref().unwrap_or("index not loaded");
    error(StatusCode::SERVICE_UNAVAILABLE, reason, Some("index".into()))
}

/// Maps a pipeline error to its HTTP status and JSON body.
pub fn error_response(e: &PipelineError) -> Response {
    match e {
        PipelineError::InvalidRequest(m) => error(StatusCode::BAD_REQUEST, m.clone(), None),
        PipelineError::BackendUnavailable { component, .. } => {
            error(StatusCode::SERVICE_UNAVAILABLE, e.to_string(), Some(component.clone()))
        }
        other => error(StatusCode::INTERNAL_SERVER_ERROR, other.to_string(), None),
    }
}

async fn query(State(state): State<AppState>, body: Bytes) -> Response {
    let Some(engine) = state.engine.clone() else {
        return not_loaded(&state);
    };
    let req: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid request body: {e}"), None),
    };
    match tokio::task::spawn_blocking(move || engine.run(&req)).await {
        Ok(Ok(resp)) => json_bytes(&resp),
        Ok(Err(e)) => error_response(&e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("pipeline task failed: {e}"), None),
    }
}

/// Serializes with `serde_json::to_vec` so bodies match the CLI's `--json`
/// output byte for byte.
fn json_bytes<T: Serialize>(value: &T) -> Response {
    match serde_json::to_vec(value) {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None),
    }
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    match &state.engine {
        Some(engine) => Json(engine.health()),
        None => Json(Health::degraded(state.load_error.as_deref().unwrap_or("index not loaded"))),
    }
}

async fn corpus(State(state): State<AppState>) -> Response {
    match &state.engine {
        Some(engine) => json_bytes(engine.manifest()),
        None => not_loaded(&state),
    }
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "no such endpoint", None)
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().to_string();
    let path = req.uri().path().to_owned();
    let start = Instant::now();
    let resp = next.run(req).await;
    tracing::info!(
        target: "litrank::request",
        method = %method,
        path = %path,
        status = resp.status().as_u16(),
        latency_ms = start.elapsed().as_secs_f64() * 1e3,
        "request"
    );
    resp
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/query", post(query))
        .route("/v1/health", get(health))
        .route("/v1/corpus", get(corpus))
        .fallback(not_found)
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

/// Installs a JSON-lines subscriber on stderr. `RUST_LOG` filters it;
/// the default level is `info`. Safe to call more than once.
pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .json()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "listening");
    }
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub async fn bind(port: u16) -> std::io::Result<TcpListener> {
    TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], port))).await
}
