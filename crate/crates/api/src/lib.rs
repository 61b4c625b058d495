//! Local HTTP service over the allocation planner.
//!
//! All routes live under `/api/v1`, speak JSON, and report failures as
//! [`ApiError`] bodies. The machine-readable description is `openapi.json`
//! next to this crate's manifest.

pub mod dto;
pub mod error;

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tower_http::cors::{AllowOrigin, CorsLayer};

use allocwise_core::ahp::{AhpSettings, JudgmentMatrix};
use allocwise_core::store::{Scenario, Store};

pub use dto::*;
pub use error::{ApiError, ErrorCode};

pub const API_PREFIX: &str = "/api/v1";
pub const OPENAPI: &str = include_str!("../openapi.json");
/// Request bodies above this many bytes are rejected with `payload_too_large`.
pub const BODY_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: IpAddr,
    pub port: u16,
    pub store_dir: PathBuf,
    /// Exact origins allowed by CORS; empty disables cross-origin access.
    pub cors_origins: Vec<String>,
    pub forecast_timeout: Duration,
    pub ahp: AhpSettings,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            store_dir: PathBuf::from("allocwise-store"),
            cors_origins: Vec::new(),
            forecast_timeout: Duration::from_secs(120),
            ahp: AhpSettings::default(),
        }
    }
}

impl ServiceConfig {
    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.bind, self.port)
    }
}

#[derive(Debug)]
struct AppState {
    store: Store,
    forecast_timeout: Duration,
    ahp: AhpSettings,
}

type Shared = State<Arc<AppState>>;

/// Builds the router over an opened store.
pub fn router(store: Store, config: &ServiceConfig) -> Result<Router, ApiError> {
    let state = Arc::new(AppState {
        store,
        forecast_timeout: config.forecast_timeout,
        ahp: config.ahp.clone(),
    });
    let api = Router::new()
        .route("/health", get(health))
        .route("/openapi.json", get(openapi))
        .route("/ahp/analyze", post(ahp_analyze))
        .route("/allocate", post(allocate))
        .route("/forecast", post(forecast))
        .route("/scenarios", get(list_scenarios).post(create_scenario))
        .route("/scenarios/{id}", get(get_scenario).put(put_scenario))
        .route("/datasets", get(list_datasets))
        .route("/datasets/{id}", get(get_dataset))
        .method_not_allowed_fallback(method_not_allowed)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state);
    let mut app = Router::new().nest(API_PREFIX, api).fallback(not_found);
    if !config.cors_origins.is_empty() {
        let origins = config
            .cors_origins
            .iter()
            .map(|o| {
                HeaderValue::from_str(o).map_err(|_| {
                    ApiError::new(ErrorCode::InvalidRequest, format!("invalid CORS origin {o:?}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        app = app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(origins))
                .allow_methods([Method::GET, Method::POST, Method::PUT])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let store = Store::open(&config.store_dir).map_err(std::io::Error::other)?;
    let app = router(store, &config).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(config.addr()).await?;
    tracing::info!(addr = %listener.local_addr()?, store = %config.store_dir.display(), "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn body(b: Result<Bytes, BytesRejection>) -> Result<Bytes, ApiError> {
    b.map_err(|e| {
        let code = if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ErrorCode::PayloadTooLarge
        } else {
            ErrorCode::InvalidRequest
        };
        ApiError::new(code, e.body_text())
    })
}

async fn not_found() -> ApiError {
    ApiError::new(ErrorCode::NotFound, "no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(ErrorCode::MethodNotAllowed, "method not allowed on this route")
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn openapi() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], OPENAPI).into_response()
}

#[derive(Debug, Deserialize)]
struct AnalyzeQuery {
    #[serde(default)]
    strict_scale: bool,
}

async fn ahp_analyze(
    State(state): Shared,
    query: Result<Query<AnalyzeQuery>, axum::extract::rejection::QueryRejection>,
    b: Result<Bytes, BytesRejection>,
) -> Result<Json<AnalyzeResponse>, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::new(ErrorCode::InvalidRequest, e.body_text()))?;
    let m: JudgmentMatrix = parse_json(&body(b)?, ErrorCode::InvalidMatrix)?;
    Ok(Json(analyze_matrix(&m, q.strict_scale, &state.ahp)?))
}

async fn allocate(
    State(state): Shared,
    b: Result<Bytes, BytesRejection>,
) -> Result<Json<allocwise_core::store::ScenarioAllocation>, ApiError> {
    let scenario = match AllocateRequest::parse(&body(b)?)? {
        AllocateRequest::ById {
            scenario_id,
            penalty_rate,
        } => with_penalty_rate(state.store.load_scenario(&scenario_id)?, penalty_rate)?,
        AllocateRequest::Inline(s) => *s,
    };
    Ok(Json(scenario.allocate()?))
}

async fn forecast(
    State(state): Shared,
    b: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let req: ForecastRequest = parse_json(&body(b)?, ErrorCode::InvalidRequest)?;
    check_horizon(req.horizon)?;
    let dataset = state.store.load_dataset(&req.dataset_id)?;
    let Some(series) = dataset.time_series().cloned() else {
        return Err(ApiError::new(
            ErrorCode::InvalidRequest,
            format!("dataset {:?} is a {}, not a time series", dataset.id, dataset.kind().as_str()),
        ));
    };
    let job = tokio::task::spawn_blocking(move || {
        run_forecast(&series, req.horizon, req.seed, req.training).map(|mut r| {
            r.dataset_id = Some(req.dataset_id);
            r
        })
    });
    match tokio::time::timeout(state.forecast_timeout, job).await {
        Ok(Ok(result)) => Ok(Json(result?).into_response()),
        Ok(Err(join)) => Err(ApiError::new(ErrorCode::Internal, format!("forecast task failed: {join}"))),
        Err(_) => Err(ApiError::new(
            ErrorCode::Timeout,
            format!("forecast exceeded {} s", state.forecast_timeout.as_secs_f64()),
        )),
    }
}

async fn list_scenarios(State(state): Shared) -> Result<Json<ScenarioList>, ApiError> {
    Ok(Json(ScenarioList {
        scenarios: state.store.list_scenarios()?,
    }))
}

async fn get_scenario(State(state): Shared, Path(id): Path<String>) -> Result<Json<Scenario>, ApiError> {
    Ok(Json(state.store.load_scenario(&id)?))
}

async fn create_scenario(
    State(state): Shared,
    b: Result<Bytes, BytesRejection>,
) -> Result<(StatusCode, Json<Scenario>), ApiError> {
    let s: Scenario = parse_json(&body(b)?, ErrorCode::ValidationFailed)?;
    Ok((StatusCode::CREATED, Json(state.store.create_scenario(&s)?)))
}

async fn put_scenario(
    State(state): Shared,
    Path(id): Path<String>,
    b: Result<Bytes, BytesRejection>,
) -> Result<Json<Scenario>, ApiError> {
    let s: Scenario = parse_json(&body(b)?, ErrorCode::ValidationFailed)?;
    Ok(Json(state.store.replace_scenario(&id, &s)?))
}

async fn list_datasets(State(state): Shared) -> Result<Json<DatasetList>, ApiError> {
    Ok(Json(DatasetList {
        datasets: state.store.list_datasets()?,
    }))
}

async fn get_dataset(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Json<allocwise_core::store::Dataset>, ApiError> {
    Ok(Json(state.store.load_dataset(&id)?))
}
