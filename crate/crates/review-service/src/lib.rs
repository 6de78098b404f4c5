//! HTTP backend for the relevance review of dataset entries.
//!
//! Labels are appended to a JSONL journal that is replayed at startup. All
//! writes go through one lock, so journal order is label order.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use aucad_core::miner::{IssueComment, LogIssue};
use aucad_core::pairs::{read_jsonl, DatasetEntry, Relevance};
use aucad_core::review::{
    plan_assignments, AgreementStats, AnnotationRecord, AssignmentPlan, LabelAck, Resolution, ReviewError,
    ReviewStore,
};
use aucad_core::Level;

pub const DEFAULT_PORT: u16 = 8787;
pub const ANNOTATOR_HEADER: &str = "x-annotator";
const DEFAULT_PAGE: usize = 100;
const MAX_PAGE: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub entries: PathBuf,
    /// Issues written by the miner, used for the evaluator packet.
    pub issues: Option<PathBuf>,
    pub journal: PathBuf,
    pub annotators: Vec<String>,
    pub per_annotator: usize,
    pub seed: u64,
    pub adjudicator: Option<String>,
    pub export_path: PathBuf,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Plan(#[from] aucad_core::review::PlanError),
    #[error("{0}")]
    Review(#[from] ReviewError),
    #[error("adjudicator `{0}` must not also be a planned annotator")]
    AdjudicatorIsAnnotator(String),
}

pub struct AppState {
    store: RwLock<ReviewStore>,
    issues: HashMap<String, LogIssue>,
    export_path: PathBuf,
}

fn read_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, ServiceError> {
    read_jsonl(path).map_err(|source| ServiceError::Io { path: path.to_path_buf(), source })
}

impl AppState {
    /// Loads entries and issues, recomputes the seeded plan and replays the journal.
    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let entries: Vec<DatasetEntry> = read_file(&config.entries)?;
        let issues: Vec<LogIssue> = match &config.issues {
            Some(p) => read_file(p)?,
            None => Vec::new(),
        };
        if let Some(adj) = &config.adjudicator {
            if config.annotators.contains(adj) {
                return Err(ServiceError::AdjudicatorIsAnnotator(adj.clone()));
            }
        }
        let ids: Vec<String> = entries.iter().map(|e| e.id.clone()).collect();
        let plan = plan_assignments(&ids, &config.annotators, config.per_annotator, config.seed)?;
        let store = ReviewStore::open(entries, plan, config.adjudicator.clone(), &config.journal)?;
        Ok(AppState {
            store: RwLock::new(store),
            issues: issues.into_iter().map(|i| (i.key.clone(), i)).collect(),
            export_path: config.export_path.clone(),
        })
    }
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": message.into() }) }
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        match &e {
            ReviewError::UnknownEntry(_) => ApiError::new(StatusCode::NOT_FOUND, e.to_string()),
            ReviewError::NotAssigned { .. } => ApiError::new(StatusCode::FORBIDDEN, e.to_string()),
            ReviewError::Unresolved(ids) => ApiError {
                status: StatusCode::CONFLICT,
                body: json!({ "error": e.to_string(), "unresolved": ids }),
            },
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn header_annotator(headers: &HeaderMap) -> Option<String> {
    headers
        .get(ANNOTATOR_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/plan", get(get_plan))
        .route("/api/entries", get(list_entries))
        .route("/api/entries/{id}", get(get_entry))
        .route("/api/entries/{id}/label", put(put_label))
        .route("/api/stats/kappa", get(get_kappa))
        .route("/api/export", post(post_export))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { "review service: no static bundle configured\n" })),
    }
}

async fn get_plan(State(state): State<Arc<AppState>>) -> Json<AssignmentPlan> {
    Json(state.store.read().unwrap().plan().clone())
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    annotator: Option<String>,
    cursor: Option<String>,
    limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EntrySummary {
    pub id: String,
    pub project: String,
    pub issue_key: String,
    pub issue_title: String,
    pub file_path: String,
    /// This annotator's current label, when listing for an annotator.
    pub label: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EntryPage {
    pub items: Vec<EntrySummary>,
    pub total: usize,
    pub next_cursor: Option<String>,
}

/// Entries assigned to `annotator` in plan order (all entries without one),
/// paged by an opaque offset cursor.
async fn list_entries(State(state): State<Arc<AppState>>, Query(q): Query<ListQuery>) -> ApiResult<EntryPage> {
    let store = state.store.read().unwrap();
    let ids: Vec<&str> = match &q.annotator {
        Some(a) => store
            .plan()
            .assignments
            .get(a)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown annotator `{a}`")))?
            .iter()
            .map(String::as_str)
            .collect(),
        None => store.entries().iter().map(|e| e.id.as_str()).collect(),
    };
    let start = match &q.cursor {
        Some(c) => c.parse::<usize>().map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "malformed cursor"))?,
        None => 0,
    };
    let limit = q.limit.unwrap_or(DEFAULT_PAGE).clamp(1, MAX_PAGE);
    let end = (start + limit).min(ids.len());
    let items = ids
        .get(start.min(ids.len())..end)
        .unwrap_or_default()
        .iter()
        .filter_map(|id| store.entry(id))
        .map(|e| EntrySummary {
            id: e.id.clone(),
            project: e.project.clone(),
            issue_key: e.issue_key.clone(),
            issue_title: e.issue_title.clone(),
            file_path: e.file_path.clone(),
            label: q.annotator.as_deref().and_then(|a| store.label(&e.id, a)).map(|r| r.relevant),
        })
        .collect();
    Ok(Json(EntryPage { items, total: ids.len(), next_cursor: (end < ids.len()).then(|| end.to_string()) }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IssueView {
    pub key: String,
    pub title: String,
    pub url: String,
    pub description: String,
    pub comments: Vec<IssueComment>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelView {
    pub relevant: bool,
    pub note: String,
    pub timestamp: String,
}

/// What an evaluator sees for one entry.
#[derive(Debug, Serialize, Deserialize)]
pub struct EntryPacket {
    pub id: String,
    pub issue: IssueView,
    pub origin_code: String,
    pub accepted_fix: String,
    pub repo: String,
    pub sha: String,
    pub file_path: String,
    pub method_signature: String,
    pub log_before: Option<String>,
    pub log_after: Option<String>,
    pub level_before: Option<Level>,
    pub level_after: Option<Level>,
    pub assigned_to: Vec<String>,
    pub labels: BTreeMap<String, LabelView>,
    pub history_len: usize,
    pub resolution: Resolution,
    pub relevance: Relevance,
}

async fn get_entry(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<EntryPacket> {
    let store = state.store.read().unwrap();
    let entry = store.entry(&id).ok_or_else(|| ReviewError::UnknownEntry(id.clone()))?;
    let issue = match state.issues.get(&entry.issue_key) {
        Some(i) => IssueView {
            key: i.key.clone(),
            title: i.title.clone(),
            url: i.url.clone(),
            description: i.description.clone(),
            comments: i.comments.clone(),
        },
        None => IssueView {
            key: entry.issue_key.clone(),
            title: entry.issue_title.clone(),
            url: entry.issue_url.clone(),
            description: String::new(),
            comments: Vec::new(),
        },
    };
    Ok(Json(EntryPacket {
        id: entry.id.clone(),
        issue,
        origin_code: entry.method_before.clone(),
        accepted_fix: entry.method_after.clone(),
        repo: entry.repo.clone(),
        sha: entry.sha.clone(),
        file_path: entry.file_path.clone(),
        method_signature: entry.method_signature.clone(),
        log_before: entry.log_before.clone(),
        log_after: entry.log_after.clone(),
        level_before: entry.level_before,
        level_after: entry.level_after,
        assigned_to: store.plan().assignees(&id).into_iter().map(String::from).collect(),
        labels: store
            .labels(&id)
            .into_iter()
            .map(|(a, r)| {
                (a.to_string(), LabelView { relevant: r.relevant, note: r.note.clone(), timestamp: r.timestamp.clone() })
            })
            .collect(),
        history_len: store.history(&id).len(),
        resolution: store.resolution(&id),
        relevance: store.relevance(&id),
    }))
}

#[derive(Debug, Deserialize)]
struct LabelBody {
    relevant: bool,
    #[serde(default)]
    note: String,
    annotator: Option<String>,
}

async fn put_label(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    Json(body): Json<LabelBody>,
) -> ApiResult<LabelAck> {
    let annotator = header_annotator(&headers)
        .or(body.annotator.filter(|a| !a.trim().is_empty()))
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "annotator required (X-Annotator header or body)"))?;
    let record = AnnotationRecord {
        entry_id: id,
        annotator,
        relevant: body.relevant,
        note: body.note,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    let ack = state.store.write().unwrap().record_label(record)?;
    Ok(Json(ack))
}

async fn get_kappa(State(state): State<Arc<AppState>>) -> Json<AgreementStats> {
    Json(state.store.read().unwrap().agreement_stats())
}

#[derive(Debug, Default, Deserialize)]
struct ExportBody {
    #[serde(default)]
    allow_partial: bool,
}

async fn post_export(State(state): State<Arc<AppState>>, body: Option<Json<ExportBody>>) -> Result<Response, ApiError> {
    let allow_partial = body.map(|Json(b)| b.allow_partial).unwrap_or_default();
    let summary = state.store.read().unwrap().export_reviewed(&state.export_path, allow_partial)?;
    Ok(Json(summary).into_response())
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: &ServiceConfig, addr: SocketAddr) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::load(config)?);
    let app = router(state, config.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Io { path: PathBuf::from(addr.to_string()), source })?;
    log::info!("review service listening on {addr}");
    axum::serve(listener, app)
        .await
        .map_err(|source| ServiceError::Io { path: PathBuf::from(addr.to_string()), source })
}
