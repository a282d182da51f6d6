//! JSON-over-HTTP service under `/api/v1`, with `/api` as an alias.
//!
//! Handlers are stateless; the only shared state is a semaphore bounding
//! simultaneous computations and an in-memory store of fit jobs whose
//! finished entries are evicted after a time-to-live.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use trivine::field::{GridSpec, Pair};
use trivine::{scenarios, Family};

use crate::engine::{self, FitRequest, Model, Quantize};
use crate::schema::{self, Violation};

/// Largest accepted request body, including CSV uploads.
pub const MAX_BODY: usize = 32 << 20;

#[derive(Debug, Clone)]
pub struct Config {
    pub workers: usize,
    pub job_ttl: Duration,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            workers: std::thread::available_parallelism().map_or(2, |n| n.get()),
            job_ttl: Duration::from_secs(600),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pool: Arc<Semaphore>,
    jobs: Arc<Mutex<HashMap<String, Job>>>,
    ttl: Duration,
}

impl AppState {
    pub fn new(cfg: &Config) -> Self {
        AppState {
            pool: Arc::new(Semaphore::new(cfg.workers.max(1))),
            jobs: Arc::default(),
            ttl: cfg.job_ttl,
        }
    }

    /// Drops finished jobs older than the time-to-live.
    pub fn evict(&self) {
        let now = Instant::now();
        self.jobs
            .lock()
            .unwrap()
            .retain(|_, j| j.finished.is_none_or(|t| now.duration_since(t) < self.ttl));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone)]
struct Job {
    state: JobState,
    progress: f64,
    stage: &'static str,
    result: Option<Value>,
    error: Option<ApiError>,
    finished: Option<Instant>,
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/scenarios", get(list_scenarios))
        .route("/families", get(families))
        .route("/schemas", get(schema_names))
        .route("/schemas/{name}", get(schema_by_name))
        .route("/mesh", post(mesh))
        .route("/margins", post(margins))
        .route("/tau-curve", post(tau_curve))
        .route("/approx", post(approx))
        .route("/fit", post(fit))
        .route("/jobs/{id}", get(job));
    Router::new()
        .nest("/api/v1", api.clone())
        .nest("/api", api)
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, cfg: Config) -> anyhow::Result<()> {
    let state = AppState::new(&cfg);
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(30));
        loop {
            tick.tick().await;
            sweeper.evict();
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    #[serde(rename = "status")]
    code: u16,
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    details: Vec<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: status.as_u16(),
            error,
            message: message.into(),
            details: Vec::new(),
            id: None,
        }
    }

    fn bad_request(message: impl Into<String>, details: Vec<Violation>) -> Self {
        ApiError {
            details,
            ..ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_model", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    /// Logs `cause` under a fresh id and hides it from the client.
    fn internal(cause: impl std::fmt::Display) -> Self {
        let id = uuid::Uuid::new_v4().to_string();
        tracing::error!(%id, "internal error: {cause}");
        ApiError {
            id: Some(id),
            ..ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "internal error")
        }
    }
}

impl From<trivine::Error> for ApiError {
    fn from(e: trivine::Error) -> Self {
        use trivine::Error as E;
        match e {
            E::NonConvergence { .. } | E::Io(_) | E::Json(_) => ApiError::internal(e),
            E::Csv(_) => ApiError::bad_request(e.to_string(), Vec::new()),
            _ => ApiError::invalid(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Parses `body` as JSON, checks it against the schema `name` and converts
/// it. Schema violations are 400s; values the schema admits but the model
/// rejects (parameters outside a family's space, say) are 422s.
fn parse_body<T: DeserializeOwned>(name: &str, body: &[u8]) -> ApiResult<T> {
    let value: Value = serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}"), Vec::new()))?;
    from_value(name, value)
}

fn from_value<T: DeserializeOwned>(name: &str, value: Value) -> ApiResult<T> {
    schema::validate(name, &value).map_err(|v| ApiError::bad_request(format!("request does not match schema '{name}'"), v))?;
    serde_json::from_value(value).map_err(|e| ApiError::invalid(e.to_string()))
}

/// Runs `f` on the blocking pool once a worker slot is free.
async fn compute<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    let _permit = state.pool.clone().acquire_owned().await.map_err(ApiError::internal)?;
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

fn to_json<T: Serialize>(v: &T) -> ApiResult<Response> {
    let body = serde_json::to_vec(v).map_err(ApiError::internal)?;
    Ok(([(axum::http::header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok", "version": env!("CARGO_PKG_VERSION"), "api": "v1"}))
}

async fn list_scenarios() -> ApiResult<Response> {
    to_json(&scenarios::list())
}

async fn families() -> ApiResult<Response> {
    to_json(&Family::ALL.iter().map(|f| f.info()).collect::<Vec<_>>())
}

async fn schema_names() -> Json<Vec<&'static str>> {
    Json(schema::names())
}

async fn schema_by_name(Path(name): Path<String>) -> ApiResult<Json<Value>> {
    schema::standalone(&name)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no schema named '{name}'")))
}

#[derive(Deserialize)]
struct MeshRequest {
    #[serde(flatten)]
    model: Model,
    grid: Option<GridSpec>,
    levels: Option<Vec<f64>>,
    #[serde(default)]
    quantize: Quantize,
}

async fn mesh(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: MeshRequest = parse_body("mesh_request", &body)?;
    let out = compute(&state, move || {
        let spec = req.model.resolve()?;
        let levels = req.levels.unwrap_or_else(engine::default_levels);
        Ok(engine::mesh(&spec, &req.grid.unwrap_or_default(), &levels, req.quantize)?)
    })
    .await?;
    to_json(&out)
}

#[derive(Deserialize)]
struct MarginsRequest {
    #[serde(flatten)]
    model: Model,
    pairs: Option<Vec<Pair>>,
    lo: Option<f64>,
    hi: Option<f64>,
    n: Option<usize>,
    levels: Option<Vec<f64>>,
}

async fn margins(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: MarginsRequest = parse_body("margins_request", &body)?;
    let out = compute(&state, move || {
        let spec = req.model.resolve()?;
        let pairs = req.pairs.unwrap_or_else(|| Pair::ALL.to_vec());
        let levels = req.levels.unwrap_or_else(|| vec![0.02, 0.05, 0.1, 0.15, 0.2]);
        Ok(engine::margins(
            &spec,
            &pairs,
            req.lo.unwrap_or(-3.0),
            req.hi.unwrap_or(3.0),
            req.n.unwrap_or(81),
            &levels,
        )?)
    })
    .await?;
    to_json(&out)
}

#[derive(Deserialize)]
struct TauCurveRequest {
    #[serde(flatten)]
    model: Model,
    points: Option<usize>,
}

async fn tau_curve(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: TauCurveRequest = parse_body("tau_curve_request", &body)?;
    let out = compute(&state, move || {
        let spec = req.model.resolve()?;
        Ok(engine::tau_curve(&spec, req.points.unwrap_or(101))?)
    })
    .await?;
    to_json(&out)
}

#[derive(Deserialize)]
struct ApproxRequest {
    #[serde(flatten)]
    model: Model,
    n: Option<usize>,
    seed: Option<u64>,
    families: Option<Vec<Family>>,
    points: Option<usize>,
}

async fn approx(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: ApproxRequest = parse_body("approx_request", &body)?;
    let out = compute(&state, move || {
        let spec = req.model.resolve()?;
        Ok(engine::approx(
            &spec,
            req.n.unwrap_or(20_000),
            req.seed.unwrap_or(0),
            req.families.as_deref(),
            req.points.unwrap_or(101),
        )?)
    })
    .await?;
    to_json(&out)
}

/// Reads the form fields of a fit upload: the CSV in `data`, every other
/// field an option. `families` is a comma-separated list; numeric fields
/// are sent as numbers.
async fn read_fit_form(mut form: Multipart) -> ApiResult<(trivine::io::Table3, FitRequest)> {
    let bad = |m: String| ApiError::bad_request(m, Vec::new());
    let mut data = None;
    let mut opts = serde_json::Map::new();
    while let Some(field) = form.next_field().await.map_err(|e| bad(e.to_string()))? {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field.bytes().await.map_err(|e| bad(e.to_string()))?;
        if name == "data" {
            data = Some(bytes);
            continue;
        }
        let text = String::from_utf8_lossy(&bytes).trim().to_string();
        let value = match name.as_str() {
            "families" => Value::Array(text.split(',').map(|s| Value::String(s.trim().to_string())).collect()),
            _ => text.parse::<u64>().map(Value::from).unwrap_or(Value::String(text)),
        };
        opts.insert(name, value);
    }
    let data = data.ok_or_else(|| {
        ApiError::bad_request(
            "missing file part 'data'",
            vec![Violation {
                path: "/data".into(),
                message: "a CSV file with a header and three numeric columns is required".into(),
            }],
        )
    })?;
    let req: FitRequest = from_value("fit_options", Value::Object(opts))?;
    let table = trivine::io::read_table3(data.as_ref()).map_err(|e| match e {
        trivine::Error::Parse { .. } | trivine::Error::Csv(_) => ApiError::bad_request(
            format!("data: {e}"),
            vec![Violation {
                path: "/data".into(),
                message: e.to_string(),
            }],
        ),
        e => e.into(),
    })?;
    Ok((table, req))
}

/// Accepts a fit and returns `202` with a job id to poll.
async fn fit(State(state): State<AppState>, form: Multipart) -> ApiResult<Response> {
    let (table, req) = read_fit_form(form).await?;
    let id = uuid::Uuid::new_v4().to_string();
    let job = Job {
        state: JobState::Queued,
        progress: 0.0,
        stage: "queued",
        result: None,
        error: None,
        finished: None,
    };
    state.jobs.lock().unwrap().insert(id.clone(), job);
    let (st, jid) = (state.clone(), id.clone());
    tokio::spawn(async move {
        let update = |f: &dyn Fn(&mut Job)| {
            if let Some(j) = st.jobs.lock().unwrap().get_mut(&jid) {
                f(j);
            }
        };
        let jobs = st.clone();
        let running = jid.clone();
        let out = compute(&st, move || {
            if let Some(j) = jobs.jobs.lock().unwrap().get_mut(&running) {
                j.state = JobState::Running;
                j.progress = 0.1;
                j.stage = "fitting";
            }
            Ok(engine::fit(&table, &req)?)
        })
        .await;
        let res = out.and_then(|v| {
            schema::validate("fitted_vine", &v).map_err(|e| ApiError::internal(format!("fit result off schema: {e:?}")))?;
            Ok(v)
        });
        update(&|j| {
            j.progress = 1.0;
            j.finished = Some(Instant::now());
            match &res {
                Ok(v) => {
                    j.state = JobState::Done;
                    j.stage = "done";
                    j.result = Some(v.clone());
                }
                Err(e) => {
                    j.state = JobState::Failed;
                    j.stage = "failed";
                    j.error = Some(e.clone());
                }
            }
        });
    });
    let body = json!({"id": id, "state": "queued", "progress": 0.0, "stage": "queued"});
    Ok((StatusCode::ACCEPTED, Json(body)).into_response())
}

async fn job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    state.evict();
    let j = state
        .jobs
        .lock()
        .unwrap()
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("no job '{id}' (unknown or expired)")))?;
    let mut body = json!({"id": id, "state": j.state, "progress": j.progress, "stage": j.stage});
    if let Some(r) = j.result {
        body["result"] = r;
    }
    if let Some(e) = j.error {
        body["error"] = serde_json::to_value(e).map_err(ApiError::internal)?;
    }
    to_json(&body)
}
