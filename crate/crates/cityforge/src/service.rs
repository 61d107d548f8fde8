//! HTTP service hosting editable city sessions.
//!
//! | method | path                        | body / query                                   |
//! |--------|-----------------------------|------------------------------------------------|
//! | GET    | `/health`                   |                                                |
//! | POST   | `/sessions`                 | `{block, buildings?, seed?, floor_height?, prompt?}` or a bare block |
//! | GET    | `/sessions`                 |                                                |
//! | GET    | `/sessions/{id}/program`    | `?revision=n`                                  |
//! | GET    | `/sessions/{id}/scene.glb`  | `?revision=n`                                  |
//! | POST   | `/sessions/{id}/edits`      | `{base_revision, command}`                     |
//! | GET    | `/sessions/{id}/score`      | `?prompt=text&revision=n`                      |
//! | GET    | `/sessions/{id}/report`     | `?revision=n`                                  |
//!
//! `command` is either edit text (`"set_floor_count mixed_1 5"`) or the JSON
//! form `{"verb", "target", "args"}`. An edit whose `base_revision` is not the
//! session's latest revision fails with 409. Errors are `{"error", "message"}`.

use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use cityforge_core::edit::{apply_edit, parse_edit_command, parse_edit_json, DiffEntry, EditContext, EditError};
use cityforge_core::executor::{assemble_scene, export_glb, ExecutorConfig};
use cityforge_core::metrics::{QualityReport, ReportInput};
use cityforge_core::program::ProgramKind;
use cityforge_core::scoring::{score_spatial, ExternalScorer, ScoringError, SemanticScorer, StubScorer};
use cityforge_core::CityProgram;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::{Mutex, RwLock};
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use crate::config::Config;
use crate::load::city_from_bytes;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self { status, body: json!({"error": error, "message": message.into()}) }
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    fn bad_request(error: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, error, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<EditError> for ApiError {
    fn from(e: EditError) -> Self {
        let code = match &e {
            EditError::UnknownVerb { .. } => "unknown_verb",
            EditError::BadArguments(_) => "bad_arguments",
            EditError::UnknownTarget(_) => "unknown_target",
            EditError::InvalidArgument(_) => "invalid_argument",
            EditError::InfeasibleDensity { .. } => "infeasible_density",
            EditError::DiffConflict { .. } => "diff_conflict",
            EditError::Program(_) => "invalid_program",
        };
        Self::bad_request(code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone)]
pub struct Revision {
    pub revision: u64,
    pub program: CityProgram,
    /// The command that produced this revision, in JSON form.
    pub command: Option<Value>,
    pub diff: Vec<DiffEntry>,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub seed: u64,
    pub floor_height: f64,
    pub prompt: String,
    pub revisions: Vec<Revision>,
    scenes: HashMap<u64, Arc<Vec<u8>>>,
}

impl Session {
    fn latest(&self) -> &Revision {
        self.revisions.last().expect("a session has at least one revision")
    }

    fn revision(&self, r: Option<u64>) -> ApiResult<&Revision> {
        match r {
            None => Ok(self.latest()),
            Some(r) => self
                .revisions
                .iter()
                .find(|x| x.revision == r)
                .ok_or_else(|| ApiError::not_found(&format!("session {} has no revision {r}", self.id))),
        }
    }

    fn history(&self) -> Value {
        Value::Array(
            self.revisions
                .iter()
                .map(|r| json!({"revision": r.revision, "command": r.command, "diff": r.diff}))
                .collect(),
        )
    }

    fn to_snapshot(&self) -> Value {
        json!({
            "id": self.id,
            "seed": self.seed,
            "floor_height": self.floor_height,
            "prompt": self.prompt,
            "revisions": self.revisions.iter().map(|r| json!({
                "revision": r.revision,
                "program": r.program.to_value(),
                "command": r.command,
                "diff": r.diff,
            })).collect::<Vec<_>>(),
        })
    }

    fn from_snapshot(v: &Value) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Rev {
            revision: u64,
            program: Value,
            command: Option<Value>,
            diff: Vec<DiffEntry>,
        }
        #[derive(Deserialize)]
        struct Snap {
            id: String,
            seed: u64,
            floor_height: f64,
            prompt: String,
            revisions: Vec<Rev>,
        }
        let s: Snap = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        let mut revisions = Vec::new();
        for r in s.revisions {
            let program = CityProgram::from_value(&r.program).map_err(|e| format!("{} r{}: {e}", s.id, r.revision))?;
            if revisions.last().is_some_and(|p: &Revision| p.revision >= r.revision) {
                return Err(format!("{}: revisions out of order", s.id));
            }
            revisions.push(Revision { revision: r.revision, program, command: r.command, diff: r.diff });
        }
        if revisions.is_empty() {
            return Err(format!("{}: no revisions", s.id));
        }
        Ok(Self {
            id: s.id,
            seed: s.seed,
            floor_height: s.floor_height,
            prompt: s.prompt,
            revisions,
            scenes: HashMap::new(),
        })
    }
}

pub struct AppState {
    config: Config,
    edit: EditContext,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: Config) -> Arc<Self> {
        let edit = config.edit_context();
        Arc::new(Self { config, edit, sessions: RwLock::new(BTreeMap::new()), next_id: AtomicU64::new(1) })
    }

    async fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(&format!("unknown session `{id}`")))
    }

    fn executor_for(&self, seed: u64, floor_height: f64) -> ExecutorConfig {
        ExecutorConfig { seed, floor_height, ..self.config.executor.clone() }
    }

    pub async fn snapshot(&self) -> Value {
        let sessions = self.sessions.read().await;
        let mut out = Vec::new();
        for s in sessions.values() {
            out.push(s.lock().await.to_snapshot());
        }
        json!({"next_id": self.next_id.load(Ordering::SeqCst), "sessions": out})
    }

    pub async fn restore(&self, snapshot: &Value) -> Result<usize, String> {
        let list = snapshot.get("sessions").and_then(Value::as_array).ok_or("snapshot has no `sessions` array")?;
        let mut sessions = self.sessions.write().await;
        for v in list {
            let s = Session::from_snapshot(v)?;
            sessions.insert(s.id.clone(), Arc::new(Mutex::new(s)));
        }
        let next = snapshot.get("next_id").and_then(Value::as_u64).unwrap_or(1);
        self.next_id.fetch_max(next, Ordering::SeqCst);
        Ok(list.len())
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))
}

fn parse_body(body: &Bytes) -> ApiResult<Value> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_json", e.to_string()))
}

#[derive(Debug, Deserialize)]
struct RevisionQuery {
    revision: Option<u64>,
    prompt: Option<String>,
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let value = parse_body(&body)?;
    let (program, seed, floor_height, prompt) = match value.get("block") {
        Some(_) => {
            let program = CityProgram::from_value(&value)
                .map_err(|e| ApiError::bad_request("invalid_program", e.to_string()))?;
            let seed = match value.get("seed") {
                None | Some(Value::Null) => app.config.executor.seed,
                Some(v) => v.as_u64().ok_or_else(|| ApiError::bad_request("bad_request", "`seed` must be a u64"))?,
            };
            let floor_height = match value.get("floor_height") {
                None | Some(Value::Null) => app.config.executor.floor_height,
                Some(v) => v
                    .as_f64()
                    .filter(|h| *h > 0.0 && h.is_finite())
                    .ok_or_else(|| ApiError::bad_request("bad_request", "`floor_height` must be positive"))?,
            };
            let prompt = value.get("prompt").and_then(Value::as_str).unwrap_or_default().to_string();
            (program, seed, floor_height, prompt)
        }
        None => {
            let program =
                city_from_bytes(&body).map_err(|e| ApiError::bad_request("invalid_program", e.to_string()))?;
            (program, app.config.executor.seed, app.config.executor.floor_height, String::new())
        }
    };
    let prompt = if prompt.is_empty() { program.block.description.clone().unwrap_or_default() } else { prompt };
    let id = format!("s{}", app.next_id.fetch_add(1, Ordering::SeqCst));
    let body = json!({
        "id": id,
        "revision": 0,
        "seed": seed,
        "floor_height": floor_height,
        "program": program.to_value(),
    });
    let session = Session {
        id: id.clone(),
        seed,
        floor_height,
        prompt,
        revisions: vec![Revision { revision: 0, program, command: None, diff: Vec::new() }],
        scenes: HashMap::new(),
    };
    app.sessions.write().await.insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> Json<Value> {
    let sessions = app.sessions.read().await;
    let mut out = Vec::new();
    for s in sessions.values() {
        let s = s.lock().await;
        out.push(json!({"id": s.id, "revision": s.latest().revision}));
    }
    Json(Value::Array(out))
}

async fn get_program(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<RevisionQuery>,
) -> ApiResult<Json<Value>> {
    let session = app.session(&id).await?;
    let s = session.lock().await;
    let r = s.revision(q.revision)?;
    Ok(Json(json!({
        "id": s.id,
        "revision": r.revision,
        "latest_revision": s.latest().revision,
        "program": r.program.to_value(),
        "history": s.history(),
    })))
}

async fn get_scene(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<RevisionQuery>,
) -> ApiResult<Response> {
    let session = app.session(&id).await?;
    let (revision, program, config) = {
        let s = session.lock().await;
        let r = s.revision(q.revision)?;
        if let Some(bytes) = s.scenes.get(&r.revision) {
            return Ok(glb_response(r.revision, bytes.as_ref().clone()));
        }
        (r.revision, r.program.clone(), app.executor_for(s.seed, s.floor_height))
    };
    let bytes = blocking(move || {
        assemble_scene(&program.block, &program.buildings, &config).map(|scene| export_glb(&scene))
    })
    .await?
    .map_err(|e| ApiError::internal(e.to_string()))?;
    let bytes = Arc::new(bytes);
    session.lock().await.scenes.insert(revision, bytes.clone());
    Ok(glb_response(revision, bytes.as_ref().clone()))
}

fn glb_response(revision: u64, bytes: Vec<u8>) -> Response {
    let mut res = bytes.into_response();
    let h = res.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("model/gltf-binary"));
    h.insert("x-revision", HeaderValue::from(revision));
    res
}

async fn post_edit(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let value = parse_body(&body)?;
    let base = value
        .get("base_revision")
        .and_then(Value::as_u64)
        .ok_or_else(|| ApiError::bad_request("bad_request", "missing `base_revision`"))?;
    let command = match value.get("command").or_else(|| value.get("edit")) {
        Some(Value::String(text)) => parse_edit_command(text)?,
        Some(v @ Value::Object(_)) => parse_edit_json(v)?,
        _ => return Err(ApiError::bad_request("bad_request", "`command` must be edit text or an object")),
    };
    let session = app.session(&id).await?;
    let mut s = session.lock().await;
    let current = s.latest().revision;
    if base != current {
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            body: json!({
                "error": "revision_conflict",
                "message": format!("base revision {base} is not the latest ({current})"),
                "current_revision": current,
            }),
        });
    }
    let program = s.latest().program.clone();
    let ctx = app.edit.clone();
    let cmd = command.clone();
    let result = blocking(move || apply_edit(&program, &cmd, &ctx)).await??;
    let revision = if result.diff.is_empty() {
        current
    } else {
        let next = current + 1;
        s.revisions.push(Revision {
            revision: next,
            program: result.program_after.clone(),
            command: Some(command.to_json()),
            diff: result.diff.clone(),
        });
        next
    };
    Ok(Json(json!({
        "id": s.id,
        "revision": revision,
        "previous_revision": current,
        "command": command.to_json(),
        "result": result.to_value(),
    })))
}

async fn get_score(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<RevisionQuery>,
) -> ApiResult<Json<Value>> {
    let session = app.session(&id).await?;
    let (revision, block, prompt) = {
        let s = session.lock().await;
        let r = s.revision(q.revision)?;
        (r.revision, r.program.block.clone(), q.prompt.clone().unwrap_or_else(|| s.prompt.clone()))
    };
    let scoring = app.config.scoring.clone();
    let external = app.config.scorer.clone().filter(|c| !c.url.is_empty());
    let score = blocking(move || {
        let judge: Box<dyn SemanticScorer> = match external {
            Some(c) => Box::new(ExternalScorer::new(c)),
            None => Box::new(StubScorer),
        };
        score_spatial(&block, &prompt, judge.as_ref(), &scoring)
    })
    .await?
    .map_err(|e| match e {
        ScoringError::ExternalScorerUnavailable(_) | ScoringError::InvalidScore(_) => {
            ApiError::new(StatusCode::BAD_GATEWAY, "scorer_unavailable", e.to_string())
        }
        e => ApiError::bad_request("scoring", e.to_string()),
    })?;
    Ok(Json(json!({"id": id, "revision": revision, "score": score})))
}

async fn get_report(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<RevisionQuery>,
) -> ApiResult<Json<Value>> {
    let session = app.session(&id).await?;
    let (revision, program, config) = {
        let s = session.lock().await;
        let r = s.revision(q.revision)?;
        (r.revision, r.program.clone(), app.executor_for(s.seed, s.floor_height))
    };
    let ros = app.config.ros;
    let report = blocking(move || -> Result<QualityReport, String> {
        let scene = assemble_scene(&program.block, &program.buildings, &config).map_err(|e| e.to_string())?;
        let text = cityforge_core::program::serialize_block(&program.block);
        let input = ReportInput { id: format!("r{revision}"), text: text.as_bytes(), kind: ProgramKind::Block, scene: Some(&scene) };
        QualityReport::build(&[input], &ros).map_err(|e| e.to_string())
    })
    .await?
    .map_err(ApiError::internal)?;
    Ok(Json(json!({"id": id, "revision": revision, "report": report})))
}

/// Static assets served at `/` and the allowed CORS origin.
#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    pub static_dir: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub cors_origin: Option<String>,
}

pub fn router(state: Arc<AppState>, options: &ServeOptions) -> Router {
    let cors = match options.cors_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(origin)) => CorsLayer::permissive().allow_origin(AllowOrigin::exact(origin)),
        _ => CorsLayer::permissive(),
    };
    let api = Router::new()
        .route("/health", get(health))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}/program", get(get_program))
        .route("/sessions/{id}/scene.glb", get(get_scene))
        .route("/sessions/{id}/edits", axum::routing::post(post_edit))
        .route("/sessions/{id}/score", get(get_score))
        .route("/sessions/{id}/report", get(get_report))
        .with_state(state);
    let api = match &options.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    api.layer(cors)
}

/// Serves on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    options: ServeOptions,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state, &options)).with_graceful_shutdown(shutdown).await
}

/// Binds `addr`, restores the snapshot if present, serves until ctrl-c and
/// writes the snapshot back.
pub async fn run(config: Config, addr: &str, options: ServeOptions) -> std::io::Result<()> {
    let state = AppState::new(config);
    if let Some(path) = options.snapshot.as_ref().filter(|p| p.is_file()) {
        let text = tokio::fs::read(path).await?;
        let value: Value = serde_json::from_slice(&text).map_err(std::io::Error::other)?;
        let n = state.restore(&value).await.map_err(std::io::Error::other)?;
        eprintln!("restored {n} sessions from {}", path.display());
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    serve(listener, state.clone(), options.clone(), shutdown).await?;
    if let Some(path) = &options.snapshot {
        let text = serde_json::to_vec_pretty(&state.snapshot().await).map_err(std::io::Error::other)?;
        tokio::fs::write(path, text).await?;
        eprintln!("saved snapshot to {}", path.display());
    }
    Ok(())
}
