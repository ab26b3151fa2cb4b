//! Local HTTP/JSON service over one corpus snapshot and a session store.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;

use mapstudy_core::sampling::{Advance, JournalError, SessionError, SessionStore, Verdict};
use mapstudy_core::{Corpus, RefId};

use crate::ops;

pub struct AppState {
    pub corpus: Corpus,
    /// One lock over the store serializes the requests of each session.
    pub store: Mutex<SessionStore>,
    /// Named category spec files served by `/analytics/categories`.
    pub category_sets: BTreeMap<String, String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    details: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            details: Value::Null,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"code": self.code, "message": self.message, "details": self.details});
        (self.status, Json(body)).into_response()
    }
}

impl From<JournalError> for ApiError {
    fn from(e: JournalError) -> Self {
        let message = e.to_string();
        match e {
            JournalError::Unknown(_) => Self::new(StatusCode::NOT_FOUND, "not_found", message),
            JournalError::Exists(_) => Self::new(StatusCode::CONFLICT, "exists", message),
            JournalError::Session(s) => Self::from(s),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "journal", message),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            SessionError::NotActive(_) => (StatusCode::CONFLICT, "not_active"),
            SessionError::PopulationExhausted => (StatusCode::CONFLICT, "exhausted"),
            SessionError::NotIssued(_) => (StatusCode::CONFLICT, "not_issued"),
            SessionError::AlreadyJudged(_) => (StatusCode::CONFLICT, "already_judged"),
            SessionError::Target { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "target"),
            SessionError::CorpusMismatch => (StatusCode::CONFLICT, "corpus_mismatch"),
            SessionError::UnknownIds(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_ids"),
        };
        let details = match e {
            SessionError::UnknownIds(ids) => json!({ "ids": ids }),
            SessionError::NotIssued(id) | SessionError::AlreadyJudged(id) => json!({ "id": id }),
            _ => Value::Null,
        };
        Self::new(status, code, message).with_details(details)
    }
}

type Shared = Arc<AppState>;
type ApiResult = Result<Response, ApiError>;

fn ok(value: impl serde::Serialize) -> ApiResult {
    Ok(Json(value).into_response())
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/corpus/stats", get(stats))
        .route("/queries/preview", post(preview))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/verdicts", post(verdict))
        .route("/analytics/timeseries", get(timeseries))
        .route("/analytics/categories", get(categories))
        .route("/analytics/fit", get(fit))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

/// Binds on loopback and serves until the process stops.
pub async fn serve(state: AppState, port: u16) -> anyhow::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {addr}: {e}"))?;
    eprintln!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await?;
    Ok(())
}

/// Body parse failures come back in the common error shape.
struct Body<T>(T);

impl<S, T> axum::extract::FromRequest<S> for Body<T>
where
    T: serde::de::DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ApiError::bad_request(e.body_text())),
        }
    }
}

struct Params<T>(T);

impl<S, T> axum::extract::FromRequestParts<S> for Params<T>
where
    T: serde::de::DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut axum::http::request::Parts, state: &S) -> Result<Self, Self::Rejection> {
        match Query::<T>::from_request_parts(parts, state).await {
            Ok(Query(v)) => Ok(Params(v)),
            Err(e) => Err(ApiError::bad_request(e.body_text())),
        }
    }
}

async fn stats(State(s): State<Shared>) -> ApiResult {
    ok(ops::corpus_stats(&s.corpus))
}

#[derive(Deserialize)]
struct PreviewRequest {
    query: String,
    #[serde(default = "all_fields")]
    mask: String,
}

fn all_fields() -> String {
    "all".into()
}

async fn preview(State(s): State<Shared>, Body(req): Body<PreviewRequest>) -> ApiResult {
    let p = ops::query_preview(&s.corpus, &req.query, &req.mask)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "query", e))?;
    ok(p)
}

#[derive(Deserialize)]
struct CreateSession {
    kind: String,
    seed: u64,
    id: Option<String>,
    target: Option<usize>,
    queue: Option<Vec<RefId>>,
    #[serde(default = "default_confidence")]
    confidence: f64,
    #[serde(default = "default_margin")]
    margin: f64,
}

fn default_confidence() -> f64 {
    0.95
}

fn default_margin() -> f64 {
    0.10
}

async fn create_session(State(s): State<Shared>, Body(req): Body<CreateSession>) -> ApiResult {
    let kind = ops::session_kind(&req.kind, req.target, req.queue, s.corpus.len(), req.confidence, req.margin)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "session_kind", e))?;
    let id = req.id.unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
    let mut store = s.store.lock().await;
    let session = store.create(&id, kind, req.seed, &s.corpus)?;
    Ok((StatusCode::CREATED, Json(ops::session_view(session))).into_response())
}

async fn get_session(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let store = s.store.lock().await;
    ok(ops::session_view(store.get(&id)?))
}

async fn next(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let mut store = s.store.lock().await;
    let status = store.get(&id)?.state();
    if status != mapstudy_core::sampling::SessionState::Active {
        return ok(json!({"status": status, "session": ops::session_view(store.get(&id)?)}));
    }
    match store.advance(&id, &s.corpus)? {
        Advance::Next(rid) => {
            let r = s.corpus.get(&rid).expect("sessions draw from this corpus");
            ok(json!({
                "status": "active",
                "reference": {
                    "id": r.id,
                    "title": r.title,
                    "authors": r.authors,
                    "year": r.year,
                    "venue": r.venue,
                    "abstract": r.abstract_text,
                    "keywords": r.keywords,
                    "source_db": r.source_db,
                },
                "session": ops::session_view(store.get(&id)?),
            }))
        }
        Advance::Complete => {
            let view = ops::session_view(store.get(&id)?);
            ok(json!({"status": view.status, "session": view}))
        }
    }
}

#[derive(Deserialize)]
struct VerdictRequest {
    id: RefId,
    #[serde(flatten)]
    verdict: Verdict,
}

async fn verdict(State(s): State<Shared>, Path(id): Path<String>, Body(req): Body<VerdictRequest>) -> ApiResult {
    if let Verdict::FalsePositive { keywords, .. } = &req.verdict {
        if keywords.iter().all(|k| k.trim().is_empty()) {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "keywords_required",
                "a false positive needs at least one keyword",
            ));
        }
    }
    let mut store = s.store.lock().await;
    let session = store.record(&id, &req.id, req.verdict)?;
    ok(ops::session_view(session))
}

#[derive(Deserialize)]
struct SeriesQuery {
    #[serde(default)]
    series: ops::SeriesKind,
    from: i32,
    to: i32,
}

async fn timeseries(State(s): State<Shared>, Params(q): Params<SeriesQuery>) -> ApiResult {
    let v = ops::series(&s.corpus, q.series, q.from, q.to)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "timeseries", e))?;
    let partial = v.series.partial_year();
    let points: Vec<Value> = v
        .series
        .points()
        .iter()
        .map(|&(year, value)| json!({"year": year, "value": value, "partial": partial == Some(year)}))
        .collect();
    ok(json!({"points": points, "warnings": v.warnings}))
}

#[derive(Deserialize)]
struct CategoriesQuery {
    set: Option<String>,
    spec: Option<String>,
}

async fn categories(State(s): State<Shared>, Params(q): Params<CategoriesQuery>) -> ApiResult {
    let text = match (q.set, q.spec) {
        (Some(name), None) => s.category_sets.get(&name).cloned().ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no category set `{name}`"))
                .with_details(json!({"sets": s.category_sets.keys().collect::<Vec<_>>()}))
        })?,
        (None, Some(spec)) => spec,
        _ => return Err(ApiError::bad_request("give exactly one of `set` or `spec`")),
    };
    let table = ops::categories(&s.corpus, &text)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "categories", e))?;
    ok(table)
}

async fn fit(State(s): State<Shared>, Params(p): Params<ops::FitParams>) -> ApiResult {
    let v = ops::fit(&s.corpus, &p).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "fit", e))?;
    ok(v)
}
