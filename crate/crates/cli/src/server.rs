//! HTTP/JSON annotation service.
//!
//! Projects live in the data directory as append-only event logs. All writes
//! go through one lock, so submissions to a project are serialized.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use anyhow::{Context, Result};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use reviewscope::annotate::{AnnotationProject, ProjectSentence, ProjectStore, RecordStatus, Submission};
use reviewscope::corpus::{read_jsonl, Sentence};
use reviewscope::taxonomy::LabelRecord;
use reviewscope::Error;

use crate::ServeArgs;

type Clock = Box<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub struct AppState {
    store: ProjectStore,
    projects: Mutex<HashMap<String, AnnotationProject>>,
    clock: Clock,
}

impl AppState {
    pub fn new(dir: &Path) -> Self {
        AppState { store: ProjectStore::new(dir), projects: Mutex::new(HashMap::new()), clock: Box::new(Utc::now) }
    }

    /// Replace the wall clock used to timestamp annotations.
    pub fn with_clock(mut self, clock: impl Fn() -> DateTime<Utc> + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn store(&self) -> &ProjectStore {
        &self.store
    }

    fn with_project<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut AnnotationProject, &ProjectStore) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let mut projects = self.projects.lock().unwrap_or_else(|p| p.into_inner());
        if !projects.contains_key(id) {
            if !valid_project_id(id) {
                return Err(ApiError(StatusCode::NOT_FOUND, format!("project `{id}`")));
            }
            let project = self.store.load(id)?;
            projects.insert(id.to_owned(), project);
        }
        f(projects.get_mut(id).expect("inserted above"), &self.store)
    }
}

fn valid_project_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::InvalidLabels(_) | Error::UnknownLabelCodes(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::InvalidInput(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    pub annotator: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct NextSentence {
    pub sentence_id: String,
    pub text: String,
    pub product_id: String,
    pub star_rating: u8,
    /// Sentences this annotator has not labeled yet, this one included.
    pub remaining: usize,
}

/// Body of `POST /annotations`, in the labeled-sentence code format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationBody {
    pub annotator: String,
    pub sentence_id: String,
    pub labels: Vec<String>,
    #[serde(default)]
    pub software_sub: Vec<String>,
    #[serde(default)]
    pub hardware_sub: Vec<String>,
    #[serde(default)]
    pub client_id: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub annotator: Option<String>,
}

async fn next(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<NextQuery>,
) -> Result<Response, ApiError> {
    state.with_project(&id, |p, _| {
        let Some(s) = p.next_for(&q.annotator)? else {
            return Ok(StatusCode::NO_CONTENT.into_response());
        };
        let remaining = p
            .sentences()
            .iter()
            .filter(|s| p.annotation(&q.annotator, &s.sentence_id).is_none())
            .count();
        Ok(Json(NextSentence {
            sentence_id: s.sentence_id.clone(),
            text: s.text.clone(),
            product_id: s.product_id.clone(),
            star_rating: s.star_rating,
            remaining,
        })
        .into_response())
    })
}

async fn annotate(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<AnnotationBody>,
) -> Result<Response, ApiError> {
    let record = LabelRecord {
        sentence_id: body.sentence_id.clone(),
        labels: body.labels,
        software_sub: body.software_sub,
        hardware_sub: body.hardware_sub,
    };
    let labels = record.to_label_set()?;
    let at = (state.clock)();
    state.with_project(&id, |p, store| {
        let sub = Submission { annotator: body.annotator, sentence_id: body.sentence_id, labels, client_id: body.client_id, at };
        let outcome = store.record(p, sub)?;
        let status = match outcome.status {
            RecordStatus::Stored => StatusCode::CREATED,
            RecordStatus::Duplicate => StatusCode::OK,
        };
        Ok((status, Json(outcome)).into_response())
    })
}

async fn stats(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    state.with_project(&id, |p, _| Ok(Json(p.stats()).into_response()))
}

async fn export(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    state.with_project(&id, |p, _| {
        let mut body = String::new();
        for r in p.export(q.annotator.as_deref()) {
            body.push_str(&serde_json::to_string(&r).map_err(Error::from)?);
            body.push('\n');
        }
        Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
    })
}

/// The four `/api` routes.
pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/projects/{id}/next", get(next))
        .route("/api/projects/{id}/annotations", post(annotate))
        .route("/api/projects/{id}/stats", get(stats))
        .route("/api/projects/{id}/export", get(export))
        .with_state(state)
}

/// Create `args.project` from its sentence file unless it already exists.
pub fn ensure_project(store: &ProjectStore, args: &ServeArgs) -> Result<()> {
    let (Some(id), Some(path)) = (&args.project, &args.sentences) else {
        return Ok(());
    };
    if store.exists(id) {
        println!("project `{id}` already exists; --sentences ignored");
        return Ok(());
    }
    let sentences: Vec<Sentence> = read_jsonl(path)?;
    let annotators = if args.annotators.is_empty() { vec!["annotator".to_owned()] } else { args.annotators.clone() };
    let project = AnnotationProject::create(
        id.clone(),
        sentences.iter().map(ProjectSentence::from).collect(),
        annotators,
        args.quota,
    )?;
    store.create(&project)?;
    println!("created project `{id}` with {} sentences, {} pending pairs", project.sentences().len(), project.pending());
    Ok(())
}

pub fn serve(data_dir: &Path, args: &ServeArgs) -> Result<()> {
    let state = AppState::new(&data_dir.join("projects"));
    std::fs::create_dir_all(state.store().dir())?;
    ensure_project(state.store(), args)?;
    let mut app = router(Arc::new(state));
    if let Some(ui) = &args.ui_dir {
        app = app.fallback_service(tower_http::services::ServeDir::new(ui));
    }
    let addr = format!("{}:{}", args.host, args.port);
    tokio::runtime::Runtime::new()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("binding {addr}"))?;
        println!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
