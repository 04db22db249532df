//! JSON API over a loaded corpus, model suite and topic map, plus static
//! files for the browser UI. Every response body carries `"v": 1`.

use std::collections::HashMap;
use std::future::Future;
use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use hypershelf_core::corpus::Corpus;
use hypershelf_core::explore::{self, ExploreError, RankedDocument};
use hypershelf_core::lda::{ModelSuite, TopicModel};
use hypershelf_core::topicmap::{self, LayoutOptions, TopicMapError};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::layout::{cached_layout, LayoutFile};
use crate::pipeline::{PipelineError, Project};

pub const API_VERSION: u32 = 1;
pub const DEFAULT_LIMIT: usize = 40;
pub const DEFAULT_WORDS: usize = 15;
pub const AUTOCOMPLETE_LIMIT: usize = 50;

const INDEX_HTML: &str = include_str!("../static/index.html");

#[derive(Debug, Error)]
pub enum ServerError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("port {port} on {host} is already in use")]
    PortInUse { host: String, port: u16 },
    #[error("cannot listen on {host}:{port}: {source}")]
    Bind { host: String, port: u16, source: io::Error },
    #[error("server error: {0}")]
    Io(#[from] io::Error),
}

impl ServerError {
    pub fn kind(&self) -> &'static str {
        match self {
            ServerError::Pipeline(e) => e.kind(),
            ServerError::PortInUse { .. } => "PortInUse",
            ServerError::Bind { .. } | ServerError::Io(_) => "IoError",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub fulltext: bool,
    pub static_dir: Option<PathBuf>,
    pub layout: LayoutOptions,
}

/// Everything the handlers read. Built once, never mutated.
pub struct AppState {
    pub corpus: Corpus,
    pub suite: ModelSuite,
    pub layout: LayoutFile,
    /// Source text directory; present only with full text enabled.
    pub fulltext_root: Option<PathBuf>,
    by_label: HashMap<String, usize>,
}

impl AppState {
    pub fn new(corpus: Corpus, suite: ModelSuite, layout: LayoutFile, fulltext_root: Option<PathBuf>) -> Self {
        let by_label = corpus.documents().iter().enumerate().map(|(i, d)| (d.label.clone(), i)).collect();
        Self { corpus, suite, layout, fulltext_root, by_label }
    }

    /// Loads the prepared corpus and every trained model, and the topic map
    /// (from cache when it matches).
    pub fn load(project: &Project, config: &ServiceConfig) -> Result<Self, PipelineError> {
        let (corpus, suite) = project.load_suite()?;
        let layout = cached_layout(&project.layout_path()?, &suite, corpus.vocabulary(), config.layout)?;
        let root = if config.fulltext { Some(project.source_dir()?) } else { None };
        Ok(Self::new(corpus, suite, layout, root))
    }
}

struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn not_found(kind: &'static str, message: impl Into<String>) -> Self {
        Self { status: StatusCode::NOT_FOUND, kind, message: message.into() }
    }

    fn bad_request(kind: &'static str, message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, kind, message: message.into() }
    }
}

impl From<ExploreError> for ApiError {
    fn from(e: ExploreError) -> Self {
        let kind = match e {
            ExploreError::UnknownDocument(_) => "UnknownDocument",
            ExploreError::IndexOutOfRange { .. } => "IndexOutOfRange",
            ExploreError::NoKnownTerms => "NoKnownTerms",
            ExploreError::CorpusMismatch => "CorpusMismatch",
        };
        let status = match e {
            ExploreError::NoKnownTerms => StatusCode::BAD_REQUEST,
            ExploreError::CorpusMismatch => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::NOT_FOUND,
        };
        Self { status, kind, message: e.to_string() }
    }
}

impl From<TopicMapError> for ApiError {
    fn from(e: TopicMapError) -> Self {
        match e {
            TopicMapError::UnknownTerm(_) => ApiError::not_found("UnknownTerm", e.to_string()),
            _ => ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, kind: "TopicMapError", message: e.to_string() },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"v": API_VERSION, "error": {"kind": self.kind, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn ok(mut body: Value) -> ApiResult {
    body["v"] = json!(API_VERSION);
    Ok(Json(body))
}

type Shared = Arc<AppState>;

fn model<'a>(s: &'a AppState, k: &str) -> Result<&'a TopicModel, ApiError> {
    let n: usize = k.parse().map_err(|_| ApiError::bad_request("InvalidTopicCount", format!("{k:?} is not a topic count")))?;
    s.suite.get(n).ok_or_else(|| ApiError::not_found("ModelMissing", format!("no model with {n} topics")))
}

fn topic_index(t: &str) -> Result<usize, ApiError> {
    t.parse().map_err(|_| ApiError::bad_request("InvalidTopic", format!("{t:?} is not a topic index")))
}

fn doc_index(s: &AppState, id: &str) -> Result<usize, ApiError> {
    s.corpus.document_position(id).ok_or_else(|| ExploreError::UnknownDocument(id.to_string()).into())
}

fn doc_json(s: &AppState, r: &RankedDocument, score: &str) -> Value {
    let d = &s.corpus.documents()[r.index];
    json!({"id": d.id, "label": d.label, score: r.similarity, "topics": r.topic_mix})
}

#[derive(Debug, Default, Deserialize)]
struct ListParams {
    limit: Option<usize>,
    topic: Option<usize>,
    n: Option<usize>,
    q: Option<String>,
    term: Option<String>,
}

async fn models(State(s): State<Shared>) -> ApiResult {
    ok(json!({"ks": s.suite.topic_counts()}))
}

async fn docs(State(s): State<Shared>, Query(p): Query<ListParams>) -> ApiResult {
    let q = p.q.unwrap_or_default();
    let labels = explore::autocomplete(s.corpus.documents().iter().map(|d| d.label.as_str()), &q, p.limit.unwrap_or(AUTOCOMPLETE_LIMIT));
    let docs: Vec<Value> = labels
        .into_iter()
        .map(|l| {
            let d = &s.corpus.documents()[s.by_label[l]];
            json!({"id": d.id, "label": d.label})
        })
        .collect();
    ok(json!({"q": q, "docs": docs}))
}

async fn doc_topics(State(s): State<Shared>, UrlPath((k, id)): UrlPath<(String, String)>) -> ApiResult {
    let m = model(&s, &k)?;
    let i = doc_index(&s, &id)?;
    let d = &s.corpus.documents()[i];
    ok(json!({"k": m.topics(), "doc": {"id": d.id, "label": d.label}, "topics": m.theta.row(i)}))
}

async fn doc_similar(
    State(s): State<Shared>,
    UrlPath((k, id)): UrlPath<(String, String)>,
    Query(p): Query<ListParams>,
) -> ApiResult {
    let m = model(&s, &k)?;
    let mut ranked = explore::similar_documents(&s.corpus, m, &id, p.limit.unwrap_or(DEFAULT_LIMIT))?;
    if let Some(t) = p.topic {
        ranked = explore::sort_by_topic(ranked, t)?;
    }
    let docs: Vec<Value> = ranked.iter().map(|r| doc_json(&s, r, "similarity")).collect();
    ok(json!({"k": m.topics(), "focal": id, "sorted_by_topic": p.topic, "docs": docs}))
}

async fn topic_words(
    State(s): State<Shared>,
    UrlPath((k, t)): UrlPath<(String, String)>,
    Query(p): Query<ListParams>,
) -> ApiResult {
    let m = model(&s, &k)?;
    let t = topic_index(&t)?;
    let words = m
        .top_words(s.corpus.vocabulary(), t, p.n.unwrap_or(DEFAULT_WORDS))
        .map_err(|_| ApiError::from(ExploreError::IndexOutOfRange { topic: t, topics: m.topics() }))?;
    let words: Vec<Value> = words.into_iter().map(|(w, prob)| json!({"word": w, "p": prob})).collect();
    ok(json!({"k": m.topics(), "topic": t, "words": words}))
}

async fn topic_docs(
    State(s): State<Shared>,
    UrlPath((k, t)): UrlPath<(String, String)>,
    Query(p): Query<ListParams>,
) -> ApiResult {
    let m = model(&s, &k)?;
    let t = topic_index(&t)?;
    let ranked = explore::top_documents_for_topic(&s.corpus, m, t, p.limit.unwrap_or(DEFAULT_LIMIT))?;
    let docs: Vec<Value> = ranked.iter().map(|r| doc_json(&s, r, "proportion")).collect();
    ok(json!({"k": m.topics(), "topic": t, "docs": docs}))
}

/// Query terms separated by whitespace or commas.
pub fn split_terms(q: &str) -> Vec<&str> {
    q.split(|c: char| c.is_whitespace() || c == ',' || c == '，' || c == '、').filter(|t| !t.is_empty()).collect()
}

async fn search(State(s): State<Shared>, UrlPath(k): UrlPath<String>, Query(p): Query<ListParams>) -> ApiResult {
    let m = model(&s, &k)?;
    let q = p.q.unwrap_or_default();
    let terms = split_terms(&q);
    let (pseudo, ranked) = explore::term_search(&s.corpus, m, &terms, p.limit.unwrap_or(DEFAULT_LIMIT))?;
    if !pseudo.dropped.is_empty() {
        log::warn!("search {q:?}: ignoring unknown terms {:?}", pseudo.dropped);
    }
    let docs: Vec<Value> = ranked.iter().map(|r| doc_json(&s, r, "similarity")).collect();
    ok(json!({
        "k": m.topics(),
        "q": q,
        "terms": pseudo.terms,
        "dropped": pseudo.dropped,
        "topic_similarity": pseudo.topic_similarity,
        "topic_mix": pseudo.topic_mix,
        "docs": docs,
    }))
}

async fn map(State(s): State<Shared>) -> ApiResult {
    ok(serde_json::to_value(&s.layout).expect("layout serializes"))
}

async fn saturation(State(s): State<Shared>, Query(p): Query<ListParams>) -> ApiResult {
    let term = p.term.unwrap_or_default();
    let weights = topicmap::term_saturation(&s.suite, s.corpus.vocabulary(), &term)?;
    let weights: Vec<Value> =
        weights.into_iter().map(|(r, w)| json!({"k": r.k, "topic": r.topic, "weight": w})).collect();
    ok(json!({"term": term, "weights": weights}))
}

async fn doc_text(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let Some(root) = &s.fulltext_root else {
        return Err(ApiError::not_found("NotFound", "full text is disabled; serve with --fulltext"));
    };
    // only ids of corpus documents are looked up, so the path stays in root
    let i = doc_index(&s, &id)?;
    let d = &s.corpus.documents()[i];
    let text = tokio::fs::read_to_string(root.join(&d.id))
        .await
        .map_err(|e| ApiError::not_found("NotFound", format!("{}: {e}", d.id)))?;
    ok(json!({"id": d.id, "label": d.label, "text": text}))
}

async fn api_not_found() -> ApiError {
    ApiError::not_found("NotFound", "no such endpoint")
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

pub fn router(state: Shared, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/models", get(models))
        .route("/docs", get(docs))
        .route("/map", get(map))
        .route("/map/saturation", get(saturation))
        .route("/doc/{id}/text", get(doc_text))
        .route("/{k}/doc/{id}/topics", get(doc_topics))
        .route("/{k}/doc/{id}/similar", get(doc_similar))
        .route("/{k}/topic/{t}/words", get(topic_words))
        .route("/{k}/topic/{t}/docs", get(topic_docs))
        .route("/{k}/search", get(search))
        .fallback(api_not_found)
        .with_state(state);
    let api = Router::new().nest("/api", api);
    match static_dir.filter(|d| d.is_dir()) {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)),
    }
}

/// A bound, not yet running server.
pub struct Server {
    listener: TcpListener,
    router: Router,
}

impl Server {
    pub async fn bind(state: AppState, config: &ServiceConfig) -> Result<Self, ServerError> {
        let listener = TcpListener::bind((config.host.as_str(), config.port)).await.map_err(|source| {
            if source.kind() == io::ErrorKind::AddrInUse {
                ServerError::PortInUse { host: config.host.clone(), port: config.port }
            } else {
                ServerError::Bind { host: config.host.clone(), port: config.port, source }
            }
        })?;
        Ok(Self { listener, router: router(Arc::new(state), config.static_dir.clone()) })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until `shutdown` resolves, then finishes in-flight requests.
    pub async fn run<F>(self, shutdown: F) -> Result<(), ServerError>
    where
        F: Future<Output = ()> + Send + 'static,
    {
        axum::serve(self.listener, self.router).with_graceful_shutdown(shutdown).await?;
        Ok(())
    }
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
