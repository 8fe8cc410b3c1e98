use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::sse::{self, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{broadcast, Mutex};
use tower_http::services::ServeDir;
use uwsn_core::harness::{AggregateResult, ExperimentSpec};
use uwsn_core::optimizer::PipelineResult;
use uwsn_core::simulator::{Scenario, SimulationReport};

use crate::events::{Event, JobKind};
use crate::session::{DeployRequest, EnvironmentRequest, Session};

const EVENT_BUFFER: usize = 1024;

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Directory of static UI files served for unmatched paths.
    pub static_dir: Option<PathBuf>,
    /// Where `POST /save` writes the session snapshot.
    pub snapshot_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.to_string(),
                field: None,
                message: message.into(),
            },
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<uwsn_core::Error> for ApiError {
    fn from(e: uwsn_core::Error) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: ErrorBody {
                error: e.kind().to_string(),
                field: e.field(),
                message: e.to_string(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

struct Inner {
    writer: Mutex<Session>,
    published: RwLock<Arc<Session>>,
    events: broadcast::Sender<Event>,
    busy: [AtomicBool; JobKind::COUNT],
    next_job: AtomicU64,
    config: ServiceConfig,
}

/// Shared service state: the writer-locked session, the last published
/// snapshot and the event channel.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(session: Session, config: ServiceConfig) -> Self {
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        Self {
            inner: Arc::new(Inner {
                published: RwLock::new(Arc::new(session.clone())),
                writer: Mutex::new(session),
                events,
                busy: Default::default(),
                next_job: AtomicU64::new(0),
                config,
            }),
        }
    }

    /// The last published revision.
    pub fn snapshot(&self) -> Arc<Session> {
        self.inner.published.read().expect("snapshot lock poisoned").clone()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Event> {
        self.inner.events.subscribe()
    }

    fn publish(&self, session: &Session) {
        *self.inner.published.write().expect("snapshot lock poisoned") = Arc::new(session.clone());
    }

    fn emit(&self, event: Event) {
        let _ = self.inner.events.send(event);
    }
}

enum JobRequest {
    Optimize,
    Run(Scenario),
    Experiment(Option<Box<ExperimentSpec>>),
}

impl JobRequest {
    fn kind(&self) -> JobKind {
        match self {
            JobRequest::Optimize => JobKind::Optimize,
            JobRequest::Run(_) => JobKind::Run,
            JobRequest::Experiment(_) => JobKind::Experiment,
        }
    }
}

enum JobOutput {
    Optimization(PipelineResult),
    Report(SimulationReport),
    Experiment(AggregateResult),
}

impl JobOutput {
    fn apply(self, session: &mut Session) -> u64 {
        match self {
            JobOutput::Optimization(r) => session.apply_optimization(r),
            JobOutput::Report(r) => session.apply_report(r),
            JobOutput::Experiment(r) => session.apply_experiment(r),
        }
    }
}

fn execute(session: &Session, request: JobRequest, job_id: u64, app: &AppState) -> uwsn_core::Result<JobOutput> {
    match request {
        JobRequest::Optimize => {
            let mut observer = |p: uwsn_core::optimizer::Progress| {
                app.emit(Event::Progress {
                    job_id,
                    stage: p.stage,
                    step: p.step,
                    best_cost: p.best_cost,
                })
            };
            session.compute_optimization(&mut observer).map(JobOutput::Optimization)
        }
        JobRequest::Run(scenario) => session.compute_report(scenario).map(JobOutput::Report),
        JobRequest::Experiment(spec) => {
            let spec = spec.map(|s| *s);
            let total = spec.as_ref().map_or_else(|| session.default_experiment().runs, |s| s.runs);
            let completed = AtomicUsize::new(0);
            let on_run = |outcome: &uwsn_core::harness::RunOutcome| {
                app.emit(Event::RunProgress {
                    job_id,
                    run: outcome.run,
                    completed: completed.fetch_add(1, Ordering::SeqCst) + 1,
                    total,
                })
            };
            session.compute_experiment(spec, &on_run).map(JobOutput::Experiment)
        }
    }
}

/// Starts a job unless one of the same kind is running. The returned
/// handle resolves to the completion event once the new revision is
/// published.
fn start_job(app: &AppState, request: JobRequest) -> Result<(u64, tokio::task::JoinHandle<Result<Event, ApiError>>), ApiError> {
    let kind = request.kind();
    if app.inner.busy[kind.index()].swap(true, Ordering::SeqCst) {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "busy",
            format!("a {kind:?} job is already running").to_lowercase(),
        ));
    }
    let job_id = app.inner.next_job.fetch_add(1, Ordering::SeqCst) + 1;
    let app = app.clone();
    let handle = tokio::spawn(async move {
        let outcome = {
            let mut session = app.inner.writer.lock().await;
            let base = session.clone();
            let worker = app.clone();
            let computed = tokio::task::spawn_blocking(move || execute(&base, request, job_id, &worker)).await;
            match computed {
                Ok(Ok(output)) => {
                    let revision = output.apply(&mut session);
                    app.publish(&session);
                    tracing::info!(job_id, ?kind, revision, "job completed");
                    Ok(Event::Completed {
                        job_id,
                        kind,
                        revision,
                        state: Box::new(session.clone()),
                    })
                }
                Ok(Err(e)) => Err(ApiError::from(e)),
                Err(e) => Err(ApiError::internal(e.to_string())),
            }
        };
        app.inner.busy[kind.index()].store(false, Ordering::SeqCst);
        match &outcome {
            Ok(event) => app.emit(event.clone()),
            Err(e) => {
                tracing::warn!(job_id, ?kind, message = %e.body.message, "job failed");
                app.emit(Event::Failed {
                    job_id,
                    kind,
                    error: e.body.clone(),
                })
            }
        }
        outcome
    });
    Ok((job_id, handle))
}

#[derive(Debug, Default, Deserialize)]
struct JobQuery {
    /// Respond with the completion event instead of `202 Accepted`.
    #[serde(default)]
    wait: bool,
}

async fn submit(app: &AppState, request: JobRequest, wait: bool) -> Result<Response, ApiError> {
    let kind = request.kind();
    let (job_id, handle) = start_job(app, request)?;
    if !wait {
        return Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": job_id, "kind": kind }))).into_response());
    }
    let event = handle.await.map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(event).into_response())
}

async fn get_state(State(app): State<AppState>) -> Response {
    Json(&*app.snapshot()).into_response()
}

async fn deploy(State(app): State<AppState>, Json(req): Json<DeployRequest>) -> Result<Response, ApiError> {
    let mut session = app.inner.writer.lock().await;
    let revision = session.deploy(req)?;
    app.publish(&session);
    app.emit(Event::Revision { revision });
    Ok(Json(json!({ "revision": revision, "topology": session.topology })).into_response())
}

async fn set_environment(
    State(app): State<AppState>,
    Json(req): Json<EnvironmentRequest>,
) -> Result<Response, ApiError> {
    let mut session = app.inner.writer.lock().await;
    let revision = session.set_environment(req)?;
    app.publish(&session);
    app.emit(Event::Revision { revision });
    Ok(Json(json!({
        "revision": revision,
        "environment": session.environment,
        "conductivity_s_per_m": session.conductivity_s_per_m,
    }))
    .into_response())
}

async fn optimize(State(app): State<AppState>, Query(q): Query<JobQuery>) -> Result<Response, ApiError> {
    submit(&app, JobRequest::Optimize, q.wait).await
}

#[derive(Debug, Deserialize)]
struct RunRequest {
    scenario: Scenario,
}

async fn run(
    State(app): State<AppState>,
    Query(q): Query<JobQuery>,
    Json(req): Json<RunRequest>,
) -> Result<Response, ApiError> {
    submit(&app, JobRequest::Run(req.scenario), q.wait).await
}

async fn experiment(State(app): State<AppState>, Query(q): Query<JobQuery>, body: Bytes) -> Result<Response, ApiError> {
    let spec = match std::str::from_utf8(&body).map(str::trim) {
        Ok("") => None,
        Ok(text) => Some(Box::new(ExperimentSpec::from_json(text)?)),
        Err(e) => return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.to_string())),
    };
    submit(&app, JobRequest::Experiment(spec), q.wait).await
}

async fn save(State(app): State<AppState>) -> Result<Response, ApiError> {
    let Some(path) = app.inner.config.snapshot_path.clone() else {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "not_configured",
            "snapshot persistence is not configured",
        ));
    };
    let snapshot = app.snapshot();
    let json = snapshot.to_json()?;
    tokio::fs::write(&path, json)
        .await
        .map_err(|e| ApiError::internal(format!("writing {}: {e}", path.display())))?;
    Ok(Json(json!({ "revision": snapshot.revision, "path": path })).into_response())
}

async fn events(State(app): State<AppState>) -> Sse<impl Stream<Item = Result<sse::Event, Infallible>>> {
    let rx = app.subscribe();
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        let event = match rx.recv().await {
            Ok(event) => event,
            Err(broadcast::error::RecvError::Lagged(skipped)) => Event::Lagged { skipped },
            Err(broadcast::error::RecvError::Closed) => return None,
        };
        let frame = sse::Event::default()
            .event(event.name())
            .json_data(&event)
            .unwrap_or_else(|e| sse::Event::default().comment(format!("encode error: {e}")));
        Some((Ok(frame), rx))
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}

pub fn router(state: AppState) -> Router {
    let static_dir = state.inner.config.static_dir.clone();
    let api = Router::new()
        .route("/state", get(get_state))
        .route("/deploy", post(deploy))
        .route("/environment", post(set_environment))
        .route("/optimize", post(optimize))
        .route("/run", post(run))
        .route("/experiment", post(experiment))
        .route("/save", post(save))
        .route("/events", get(events))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
