//! JSON-over-HTTP API over a read-only snapshot corpus.
//!
//! The corpus registry is filled once at startup from a directory and may
//! grow through uploads; stored snapshots are never modified.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ahp::{self, AhpError, MatrixDocument};
use crate::io::{self, SnapshotFormat};
use crate::pipeline::{self, ScoreRequest};
use crate::scoring::{PhaseSchedule, Snapshot, YearMonth};
use crate::{Error, ENGINE_VERSION};

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotEntry {
    pub id: String,
    pub source: String,
    pub digest: String,
    #[serde(skip)]
    pub snapshot: Arc<Snapshot>,
}

#[derive(Debug, Default)]
pub struct Registry {
    entries: RwLock<BTreeMap<String, SnapshotEntry>>,
}

impl Registry {
    /// Loads every `.csv` and `.json` file in `dir`; ids are file stems.
    pub fn load_dir(dir: &Path) -> Result<Self, Error> {
        let read = std::fs::read_dir(dir).map_err(|e| io::PipelineError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let mut paths: Vec<PathBuf> = read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && SnapshotFormat::infer(p).is_ok())
            .collect();
        paths.sort();
        let registry = Registry::default();
        for path in paths {
            let file = io::load_snapshot(&path, None)?;
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let entry = SnapshotEntry {
                id: id.clone(),
                source: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                digest: file.digest,
                snapshot: Arc::new(file.snapshot),
            };
            if !registry.insert(entry) {
                return Err(Error::Request(format!("duplicate snapshot id {id} in {}", dir.display())));
            }
        }
        Ok(registry)
    }

    /// Adds an entry; returns false if the id is taken.
    pub fn insert(&self, entry: SnapshotEntry) -> bool {
        let mut entries = self.entries.write().expect("registry lock");
        if entries.contains_key(&entry.id) {
            return false;
        }
        entries.insert(entry.id.clone(), entry);
        true
    }

    pub fn get(&self, id: &str) -> Option<SnapshotEntry> {
        self.entries.read().expect("registry lock").get(id).cloned()
    }

    pub fn list(&self) -> Vec<SnapshotEntry> {
        self.entries.read().expect("registry lock").values().cloned().collect()
    }
}

#[derive(Debug, Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub schedule: PhaseSchedule,
}

impl AppState {
    pub fn new(registry: Registry) -> Self {
        Self {
            registry: Arc::new(registry),
            schedule: PhaseSchedule::default(),
        }
    }
}

/// Error body: `{"engine_version", "error": {"code", "message"}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.into(),
        }
    }

    fn not_found(id: &str) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code: "unknown_snapshot",
            message: format!("no snapshot with id {id:?}"),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Ahp(AhpError::Invalid(_)) => "invalid_matrix",
            Error::Ahp(_) => "matrix_error",
            Error::Scoring(_) => "scoring_error",
            Error::Factor(_) => "factor_error",
            Error::Dynamics(_) => "dynamics_error",
            Error::Pipeline(_) => "invalid_snapshot",
            Error::Request(_) => "invalid_request",
        };
        let status = if matches!(e, Error::Dynamics(_)) {
            StatusCode::UNPROCESSABLE_ENTITY
        } else {
            StatusCode::BAD_REQUEST
        };
        Self {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({
            "engine_version": ENGINE_VERSION,
            "error": { "code": self.code, "message": self.message },
        });
        (self.status, Json(body)).into_response()
    }
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    engine_version: &'static str,
    #[serde(flatten)]
    body: T,
}

fn ok<T: Serialize>(body: T) -> Response {
    Json(Envelope {
        engine_version: ENGINE_VERSION,
        body,
    })
    .into_response()
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("malformed_body", e.to_string()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/weights", post(post_weights))
        .route("/api/presets/{phase}", get(get_preset))
        .route("/api/snapshots", get(list_snapshots).post(upload_snapshot))
        .route("/api/score", post(post_score))
        .route("/api/whatif", post(post_whatif))
        .route("/api/dynamics", get(get_dynamics))
        .with_state(state)
}

async fn post_weights(body: Bytes) -> Result<Response, ApiError> {
    let doc: MatrixDocument = parse_body(&body)?;
    let matrix = doc.to_matrix().map_err(|e| ApiError::bad_request("malformed_matrix", e.to_string()))?;
    let payload = pipeline::weights_report(Some(&matrix), None)?;
    Ok(ok(payload))
}

async fn get_preset(UrlPath(phase): UrlPath<u8>) -> Result<Response, ApiError> {
    let report = pipeline::weights_report(None, Some(phase))?;
    let matrix = ahp::preset_matrix(phase).map_err(Error::from)?;
    Ok(ok(serde_json::json!({
        "phase": phase,
        "weights": report.weights,
        "consistency": report.consistency,
        "matrix": matrix.as_ref().map(MatrixDocument::from_matrix),
    })))
}

#[derive(Serialize)]
struct SnapshotSummary {
    id: String,
    source: String,
    digest: String,
    snapshot_date: NaiveDate,
    articles: usize,
    metrics: Vec<String>,
    publication_months: Vec<String>,
}

fn summarize(e: &SnapshotEntry) -> SnapshotSummary {
    let mut months: Vec<String> = e
        .snapshot
        .articles()
        .iter()
        .map(|a| a.publication_month.to_string())
        .collect();
    months.sort();
    months.dedup();
    SnapshotSummary {
        id: e.id.clone(),
        source: e.source.clone(),
        digest: e.digest.clone(),
        snapshot_date: e.snapshot.snapshot_date(),
        articles: e.snapshot.len(),
        metrics: e.snapshot.profile().iter().map(ToString::to_string).collect(),
        publication_months: months,
    }
}

async fn list_snapshots(State(state): State<AppState>) -> Response {
    let list: Vec<SnapshotSummary> = state.registry.list().iter().map(summarize).collect();
    ok(serde_json::json!({ "snapshots": list }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UploadBody {
    #[serde(default)]
    id: Option<String>,
    format: SnapshotFormat,
    content: String,
}

async fn upload_snapshot(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let upload: UploadBody = parse_body(&body)?;
    let snapshot = io::parse_snapshot_str(&upload.content, upload.format).map_err(Error::from)?;
    let digest = io::digest_bytes(upload.content.as_bytes());
    let id = upload
        .id
        .unwrap_or_else(|| format!("upload-{}", &digest["sha256:".len()..][..12]));
    if id.is_empty() || id.contains('/') {
        return Err(ApiError::bad_request("invalid_request", "snapshot id must be non-empty without '/'"));
    }
    let entry = SnapshotEntry {
        id: id.clone(),
        source: "upload".into(),
        digest,
        snapshot: Arc::new(snapshot),
    };
    let summary = summarize(&entry);
    if !state.registry.insert(entry) {
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            code: "snapshot_exists",
            message: format!("snapshot id {id:?} already exists"),
        });
    }
    Ok((StatusCode::CREATED, ok(summary)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreBody {
    #[serde(default)]
    snapshot_id: Option<String>,
    /// Inline snapshot in ALM JSON form.
    #[serde(default)]
    snapshot: Option<Value>,
    #[serde(default)]
    as_of: Option<NaiveDate>,
    #[serde(default)]
    phase: Option<u8>,
    #[serde(default)]
    cohort_month: Option<YearMonth>,
}

fn resolve_snapshot(state: &AppState, id: Option<&str>, inline: Option<&Value>) -> Result<Arc<Snapshot>, ApiError> {
    match (id, inline) {
        (Some(id), None) => state
            .registry
            .get(id)
            .map(|e| e.snapshot)
            .ok_or_else(|| ApiError::not_found(id)),
        (None, Some(value)) => {
            let text = value.to_string();
            let snapshot = io::parse_snapshot_str(&text, SnapshotFormat::AlmJson).map_err(Error::from)?;
            Ok(Arc::new(snapshot))
        }
        _ => Err(ApiError::bad_request(
            "invalid_request",
            "give exactly one of snapshot_id or snapshot",
        )),
    }
}

fn request_for(state: &AppState, as_of: Option<NaiveDate>, phase: Option<u8>, cohort_month: Option<YearMonth>) -> ScoreRequest {
    ScoreRequest {
        as_of,
        phase,
        cohort_month,
        schedule: state.schedule.clone(),
        matrix_override: None,
    }
}

async fn post_score(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: ScoreBody = parse_body(&body)?;
    let snapshot = resolve_snapshot(&state, req.snapshot_id.as_deref(), req.snapshot.as_ref())?;
    let ranking = pipeline::score(&snapshot, &request_for(&state, req.as_of, req.phase, req.cohort_month))?;
    Ok(ok(ranking))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfBody {
    matrix: MatrixDocument,
    snapshot_id: String,
    #[serde(default)]
    as_of: Option<NaiveDate>,
    #[serde(default)]
    phase: Option<u8>,
    #[serde(default)]
    cohort_month: Option<YearMonth>,
}

async fn post_whatif(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: WhatIfBody = parse_body(&body)?;
    let matrix = req
        .matrix
        .to_matrix()
        .map_err(|e| ApiError::bad_request("malformed_matrix", e.to_string()))?;
    let snapshot = resolve_snapshot(&state, Some(&req.snapshot_id), None)?;
    let report = pipeline::whatif(&snapshot, &matrix, &request_for(&state, req.as_of, req.phase, req.cohort_month))?;
    Ok(ok(report))
}

#[derive(Deserialize)]
struct DynamicsQuery {
    /// Comma-separated snapshot ids; all snapshots when absent.
    #[serde(default)]
    ids: Option<String>,
    #[serde(default)]
    cohort_month: Option<YearMonth>,
}

async fn get_dynamics(State(state): State<AppState>, Query(q): Query<DynamicsQuery>) -> Result<Response, ApiError> {
    let entries = match &q.ids {
        Some(ids) => ids
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|id| state.registry.get(id).ok_or_else(|| ApiError::not_found(id)))
            .collect::<Result<Vec<_>, _>>()?,
        None => state.registry.list(),
    };
    let snapshots: Vec<Snapshot> = entries.iter().map(|e| (*e.snapshot).clone()).collect();
    let payload = pipeline::dynamics_report(&snapshots, &state.schedule, q.cohort_month)?;
    Ok(ok(payload))
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub corpus: PathBuf,
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServeConfig) -> anyhow::Result<()> {
    let registry = Registry::load_dir(&config.corpus)?;
    let count = registry.list().len();
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    eprintln!(
        "serving {count} snapshots from {} on http://{}",
        config.corpus.display(),
        listener.local_addr()?
    );
    axum::serve(listener, router(AppState::new(registry))).await?;
    Ok(())
}
