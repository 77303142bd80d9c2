//! HTTP service over the shared job runners, the scenario store and the
//! activity registry. Every response body is JSON carrying `schema_version`
//! (except `GET /`), and every response has an `X-Schema-Version` header.

#![allow(clippy::result_large_err)]

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};
use sgforge_core::diagnostics::{Code, Diagnostic};
use sgforge_core::jobs::{self, JobKind, JobOptions, JobResult, EXIT_USAGE, SCHEMA_VERSION};
use sgforge_core::model::Grain;
use sgforge_core::quality::PathLimits;
use sgforge_core::registry::{
    ActivityDescriptor, ActivityFilter, AdaptationLevel, EditorDescriptor, ExpertProfile, ProgrammingKnowledge, Registry,
    RegistryError,
};
use sgforge_core::sim::parse_cohort;
use sgforge_core::storyboard::{load, ScenarioDefaults, SourceFormat};
use thiserror::Error;

use crate::store::{ScenarioStore, StoreError};

pub const MAX_PLAYERS: usize = 100_000;
pub const MAX_STEPS: usize = 10_000;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug)]
pub struct AppState {
    pub store: ScenarioStore,
    pub registry: Registry,
}

impl AppState {
    /// Opens `<root>/scenarios/` and `<root>/catalog.xml`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        let store = ScenarioStore::open(&root)?;
        let registry = Registry::open(root.join("catalog.xml"))?;
        Ok(AppState { store, registry })
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/scenarios/{id}", get(get_scenario).put(put_scenario))
        .route("/api/scenarios/{id}/validate", post(validate_scenario))
        .route("/api/scenarios/{id}/paths", post(paths_scenario))
        .route("/api/scenarios/{id}/simulate", post(simulate_scenario))
        .route("/api/registry/activities", get(list_activities).post(register_activity))
        .route("/api/registry/editors", get(find_editors).post(register_editor))
        .fallback(not_found)
        .layer(axum::middleware::map_response(schema_header))
        .with_state(state)
}

pub async fn serve(host: &str, port: u16, store: PathBuf) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::open(store)?);
    let addr: SocketAddr = tokio::net::lookup_host((host, port))
        .await?
        .next()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, format!("cannot resolve {host}")))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("sgforge listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn schema_header(mut res: Response) -> Response {
    res.headers_mut()
        .insert("x-schema-version", HeaderValue::from(SCHEMA_VERSION));
    res
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    error_with(status, message, Vec::new())
}

fn error_with(status: StatusCode, message: impl Into<String>, diagnostics: Vec<Diagnostic>) -> Response {
    let body = json!({
        "schema_version": SCHEMA_VERSION,
        "error": {"status": status.as_u16(), "message": message.into()},
        "diagnostics": diagnostics,
    });
    (status, Json(body)).into_response()
}

fn ok(status: StatusCode, mut body: Value) -> Response {
    body["schema_version"] = json!(SCHEMA_VERSION);
    (status, Json(body)).into_response()
}

impl IntoResponse for StoreError {
    fn into_response(self) -> Response {
        let status = match &self {
            StoreError::InvalidId(_) => StatusCode::BAD_REQUEST,
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::Conflict { .. } => StatusCode::CONFLICT,
            StoreError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        error(status, self.to_string())
    }
}

fn registry_error(e: RegistryError) -> Response {
    let status = match &e {
        RegistryError::Duplicate { .. } => StatusCode::CONFLICT,
        RegistryError::NoKinds(_) | RegistryError::EmptyId(_) => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    error(status, e.to_string())
}

fn job_response(result: JobResult) -> Response {
    let status = if result.exit_code == EXIT_USAGE {
        StatusCode::BAD_REQUEST
    } else {
        StatusCode::OK
    };
    ok(
        status,
        json!({
            "kind": result.kind,
            "exit_code": result.exit_code,
            "records": result.records(),
        }),
    )
}

type RawQuery = Result<Query<HashMap<String, String>>, QueryRejection>;

fn query(q: RawQuery) -> Result<HashMap<String, String>, Response> {
    q.map(|Query(m)| m)
        .map_err(|e| error(StatusCode::BAD_REQUEST, e.body_text()))
}

fn param<T: std::str::FromStr>(q: &HashMap<String, String>, name: &str) -> Result<Option<T>, Response>
where
    T::Err: std::fmt::Display,
{
    match q.get(name) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|e| error(StatusCode::BAD_REQUEST, format!("query parameter `{name}`: {e}"))),
    }
}

fn reject_unknown(q: &HashMap<String, String>, allowed: &[&str]) -> Result<(), Response> {
    match q.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(error(
            StatusCode::BAD_REQUEST,
            format!("unknown query parameter `{k}` (expected one of: {})", allowed.join(", ")),
        )),
        None => Ok(()),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, Response> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| error(StatusCode::INTERNAL_SERVER_ERROR, format!("job failed: {e}")))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(r) => return r,
        }
    };
}

async fn index() -> Html<&'static str> {
    Html(concat!(
        "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>sgforge</title></head>\n",
        "<body><h1>sgforge</h1><p>The authoring interface is not bundled with this build. ",
        "The JSON API is served under <code>/api/</code>.</p></body></html>\n"
    ))
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "no such endpoint")
}

async fn get_scenario(State(st): State<Shared>, Path(id): Path<String>) -> Response {
    let stored = match st.store.get(&id) {
        Ok(s) => s,
        Err(e) => return e.into_response(),
    };
    let Ok(document) = String::from_utf8(stored.document) else {
        return error(StatusCode::INTERNAL_SERVER_ERROR, "stored document is not UTF-8");
    };
    let mut res = ok(
        StatusCode::OK,
        json!({"id": id, "version": stored.version, "document": document}),
    );
    if let Ok(etag) = HeaderValue::from_str(&format!("\"{}\"", stored.version)) {
        res.headers_mut().insert(header::ETAG, etag);
    }
    res
}

fn if_match(headers: &HeaderMap) -> Result<Option<String>, Response> {
    match headers.get(header::IF_MATCH) {
        None => Ok(None),
        Some(v) => v
            .to_str()
            .map(|s| Some(s.trim().trim_matches('"').to_string()))
            .map_err(|_| error(StatusCode::BAD_REQUEST, "If-Match header is not ASCII")),
    }
}

async fn put_scenario(State(st): State<Shared>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    let expected = tri!(if_match(&headers));
    let checked = {
        let body = body.clone();
        tri!(blocking(move || load(&body, &ScenarioDefaults::default())).await)
    };
    match checked {
        Ok(l) if l.format == SourceFormat::Canonical => {}
        Ok(_) => {
            let d = Diagnostic::global(Code::Unreadable, "the store accepts canonical <scenario> documents only");
            return error_with(StatusCode::BAD_REQUEST, "document is not canonical", vec![d]);
        }
        Err(e) => return error_with(StatusCode::BAD_REQUEST, "document cannot be parsed", vec![e.to_diagnostic()]),
    }
    let created = expected.is_none();
    match st.store.put(&id, &body, expected.as_deref()).await {
        Ok(version) => {
            let status = if created { StatusCode::CREATED } else { StatusCode::OK };
            let mut res = ok(status, json!({"id": id, "version": version}));
            if let Ok(etag) = HeaderValue::from_str(&format!("\"{version}\"")) {
                res.headers_mut().insert(header::ETAG, etag);
            }
            res
        }
        Err(e) => e.into_response(),
    }
}

fn limits(q: &HashMap<String, String>) -> Result<JobOptions, Response> {
    let d = PathLimits::default();
    Ok(JobOptions {
        limits: PathLimits {
            max_paths: param(q, "max_paths")?.unwrap_or(d.max_paths),
            max_cycle_unrolls: param(q, "max_cycle_unrolls")?.unwrap_or(d.max_cycle_unrolls),
        },
        ..JobOptions::default()
    })
}

async fn validate_scenario(State(st): State<Shared>, Path(id): Path<String>, q: RawQuery) -> Response {
    let q = tri!(query(q));
    tri!(reject_unknown(&q, &["max_paths", "max_cycle_unrolls"]));
    let opts = tri!(limits(&q));
    let stored = tri!(st.store.get(&id).map_err(IntoResponse::into_response));
    job_response(tri!(blocking(move || jobs::run_validate(&stored.document, &opts)).await))
}

async fn paths_scenario(State(st): State<Shared>, Path(id): Path<String>, q: RawQuery) -> Response {
    let q = tri!(query(q));
    tri!(reject_unknown(&q, &["max_paths", "max_cycle_unrolls"]));
    let opts = tri!(limits(&q));
    let stored = tri!(st.store.get(&id).map_err(IntoResponse::into_response));
    job_response(tri!(blocking(move || jobs::run_paths(&stored.document, &opts)).await))
}

async fn simulate_scenario(State(st): State<Shared>, Path(id): Path<String>, q: RawQuery, body: Bytes) -> Response {
    let q = tri!(query(q));
    tri!(reject_unknown(&q, &["seed", "max_steps"]));
    let seed: Option<u64> = tri!(param(&q, "seed"));
    let max_steps: Option<usize> = tri!(param(&q, "max_steps"));
    let stored = tri!(st.store.get(&id).map_err(IntoResponse::into_response));
    let Ok(text) = std::str::from_utf8(&body) else {
        return job_response(JobResult::usage(JobKind::Simulate, "cohort body is not UTF-8"));
    };
    let mut cohort = match parse_cohort(text) {
        Ok(c) => c,
        Err(e) => return job_response(JobResult::usage(JobKind::Simulate, format!("cohort: {e}"))),
    };
    if let Some(s) = seed {
        cohort.seed = s;
    }
    if let Some(m) = max_steps {
        cohort.params.max_steps = m;
    }
    if cohort.n_players() > MAX_PLAYERS {
        return job_response(JobResult::usage(
            JobKind::Simulate,
            format!("cohort has {} players; the service runs at most {MAX_PLAYERS}", cohort.n_players()),
        ));
    }
    if cohort.params.max_steps > MAX_STEPS {
        return job_response(JobResult::usage(
            JobKind::Simulate,
            format!("max_steps {} exceeds the service limit of {MAX_STEPS}", cohort.params.max_steps),
        ));
    }
    job_response(tri!(
        blocking(move || jobs::run_simulate(&stored.document, &cohort, &JobOptions::default())).await
    ))
}

async fn list_activities(State(st): State<Shared>, q: RawQuery) -> Response {
    let q = tri!(query(q));
    tri!(reject_unknown(&q, &["grain", "kind"]));
    let filter = ActivityFilter {
        grain: tri!(param::<Grain>(&q, "grain")),
        kind: q.get("kind").cloned(),
    };
    ok(StatusCode::OK, json!({"activities": st.registry.list_activities(&filter)}))
}

async fn find_editors(State(st): State<Shared>, q: RawQuery) -> Response {
    let q = tri!(query(q));
    tri!(reject_unknown(&q, &["kind", "knowledge", "adaptation"]));
    let Some(kind) = q.get("kind") else {
        return error(StatusCode::BAD_REQUEST, "query parameter `kind` is required");
    };
    let expert = ExpertProfile {
        programming_knowledge: tri!(param(&q, "knowledge")).unwrap_or(ProgrammingKnowledge::None),
        desired_adaptation: tri!(param(&q, "adaptation")).unwrap_or(AdaptationLevel::InterfaceOnly),
    };
    ok(StatusCode::OK, json!({"editors": st.registry.find_editors(kind, expert)}))
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, Response> {
    body.map(|Json(v)| v)
        .map_err(|e| error(StatusCode::BAD_REQUEST, e.body_text()))
}

async fn register_activity(State(st): State<Shared>, body: Result<Json<ActivityDescriptor>, JsonRejection>) -> Response {
    let d = tri!(json_body(body));
    match blocking(move || st.registry.register_activity(d)).await {
        Ok(Ok(id)) => ok(StatusCode::CREATED, json!({"id": id})),
        Ok(Err(e)) => registry_error(e),
        Err(r) => r,
    }
}

async fn register_editor(State(st): State<Shared>, body: Result<Json<EditorDescriptor>, JsonRejection>) -> Response {
    let d = tri!(json_body(body));
    match blocking(move || st.registry.register_editor(d)).await {
        Ok(Ok(id)) => ok(StatusCode::CREATED, json!({"id": id})),
        Ok(Err(e)) => registry_error(e),
        Err(r) => r,
    }
}
