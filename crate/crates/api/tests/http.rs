//! Request/response contract of every route, driven in-process.
//!
//! Deterministic success bodies and all error bodies are compared with
//! files under `tests/golden/`. Set `ALLOCWISE_UPDATE_GOLDEN=1` to rewrite
//! them after an intentional change.

use std::path::PathBuf;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use allocwise_api::{router, ApiError, ErrorCode, ServiceConfig, OPENAPI};
use allocwise_core::ahp::AhpSettings;
use allocwise_core::store::{Dataset, DatasetPayload, Store};
use allocwise_core::TimeSeries;

struct Harness {
    app: Router,
    _dir: tempfile::TempDir,
}

fn harness_with(config: ServiceConfig) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let short = TimeSeries::from_start(
        chrono::NaiveDate::from_ymd_opt(2022, 1, 1).unwrap(),
        vec![1.0, 2.0, 4.0, 7.0, 11.0],
    )
    .unwrap();
    store
        .save_dataset(&Dataset::new("short", DatasetPayload::TimeSeries(short)).unwrap())
        .unwrap();
    Harness {
        app: router(store, &config).unwrap(),
        _dir: dir,
    }
}

fn harness() -> Harness {
    harness_with(ServiceConfig::default())
}

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }

    /// Error bodies must parse as ApiError with the expected code and status.
    fn expect_error(&self, status: StatusCode, code: ErrorCode) -> ApiError {
        assert_eq!(self.status, status, "{}", String::from_utf8_lossy(&self.bytes));
        let e: ApiError = serde_json::from_slice(&self.bytes).unwrap();
        assert_eq!(e.code, code, "{e:?}");
        assert!(!e.message.is_empty());
        e
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        headers,
        bytes,
    }
}

async fn post(app: &Router, uri: &str, body: &str) -> Reply {
    call(app, Method::POST, uri, Some(body)).await
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

fn golden(name: &str, value: &Value) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"));
    let rendered = serde_json::to_string_pretty(value).unwrap() + "\n";
    if std::env::var_os("ALLOCWISE_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &rendered).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(rendered, expected, "golden mismatch for {name}");
}

const PUBLISHED_MATRIX: &str = r#"{"criteria":["NoR","TC","NoS","Cost"],"entries":[
    [1,0.333,22,8],[3,1,5,6.024],[0.5,0.2,1,8],[0.125,0.166,0.125,1]]}"#;

const ONES_4: &str = r#"{"entries":[[1,1,1,1],[1,1,1,1],[1,1,1,1],[1,1,1,1]]}"#;

fn inline_scenario(features: [[f64; 4]; 3], rate: f64) -> String {
    let tier = |f: [f64; 4]| json!({"NoR": f[0], "TC": f[1], "NoS": f[2], "Cost": f[3]});
    json!({
        "district": "Inline",
        "weights": [0.25, 0.25, 0.25, 0.25],
        "tiers": {"CenH": tier(features[0]), "ComH": tier(features[1]), "HC": tier(features[2])},
        "penalty_rate": rate
    })
    .to_string()
}

// ---- POST /ahp/analyze ----

#[tokio::test]
async fn analyze_published_matrix() {
    let h = harness();
    let r = post(&h.app, "/api/v1/ahp/analyze", PUBLISHED_MATRIX).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    let c = &v["consistency"];
    assert!((c["lambda_max"].as_f64().unwrap() - 6.289629822359).abs() < 1e-8);
    assert_eq!(c["ri"], 0.9);
    assert_eq!(c["passes"], false);
    assert_eq!(v["reciprocal"], false);
    let warnings: Vec<&str> = v["warnings"].as_array().unwrap().iter().map(|w| w.as_str().unwrap()).collect();
    assert!(warnings.iter().any(|w| w.contains("reciprocity")), "{warnings:?}");
    let sum: f64 = v["weights"].as_array().unwrap().iter().map(|w| w.as_f64().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-12);
    golden("analyze_published", &v);
}

#[tokio::test]
async fn analyze_all_ones() {
    let h = harness();
    let r = post(&h.app, "/api/v1/ahp/analyze", ONES_4).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["consistency"]["cr"], 0.0);
    assert_eq!(v["consistency"]["passes"], true);
    assert_eq!(v["weights"], json!([0.25, 0.25, 0.25, 0.25]));
    golden("analyze_ones", &v);
}

#[tokio::test]
async fn analyze_errors() {
    let h = harness();
    let ragged = r#"{"entries":[[1,2,3,4,5],[0.5,1,2,3,4],[0.33,0.5,1,2]]}"#;
    let e = post(&h.app, "/api/v1/ahp/analyze", ragged)
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::InvalidMatrix);
    golden("error_analyze_ragged", &serde_json::to_value(e).unwrap());

    post(&h.app, "/api/v1/ahp/analyze", "{not json")
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::InvalidJson);

    post(&h.app, "/api/v1/ahp/analyze?strict_scale=true", PUBLISHED_MATRIX)
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::InvalidMatrix);

    let tight = harness_with(ServiceConfig {
        ahp: AhpSettings {
            max_iterations: 1,
            ..Default::default()
        },
        ..Default::default()
    });
    let e = post(&tight.app, "/api/v1/ahp/analyze", PUBLISHED_MATRIX)
        .await
        .expect_error(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::NonConvergent);
    assert!(e.details.unwrap()["iterations"].as_u64().is_some());
}

// ---- POST /allocate ----

#[tokio::test]
async fn allocate_bundled_gongshu() {
    let h = harness();
    let r = post(&h.app, "/api/v1/allocate", r#"{"scenario_id":"gongshu"}"#).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    let tenths = &v["allocation"]["ratio_tenths"];
    let sum: u64 = ["CenH", "ComH", "HC"].iter().map(|k| tenths[k].as_u64().unwrap()).sum();
    assert_eq!(sum, 100);
    golden("allocate_gongshu", &v);

    let again = post(&h.app, "/api/v1/allocate", r#"{"scenario_id":"gongshu"}"#).await;
    assert_eq!(again.bytes, r.bytes);
}

#[tokio::test]
async fn allocate_inline_and_override() {
    let h = harness();
    let r = post(&h.app, "/api/v1/allocate", &inline_scenario([[1.0; 4]; 3], 0.0)).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["allocation"]["ratio_text"], "3.4:3.3:3.3");

    let r = post(&h.app, "/api/v1/allocate", r#"{"scenario_id":"daoli","penalty_rate":0}"#).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["allocation"]["options"]["penalty_rate"], 0.0);
    assert_eq!(v["allocation"]["raw_index"], v["allocation"]["penalized_index"]);
}

#[tokio::test]
async fn allocate_errors() {
    let h = harness();
    let e = post(&h.app, "/api/v1/allocate", r#"{"scenario_id":"atlantis"}"#)
        .await
        .expect_error(StatusCode::NOT_FOUND, ErrorCode::NotFound);
    golden("error_allocate_unknown", &serde_json::to_value(e).unwrap());

    post(&h.app, "/api/v1/allocate", &inline_scenario([[1.0; 4]; 3], -1.0))
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::ValidationFailed);
    post(&h.app, "/api/v1/allocate", r#"{"scenario_id":"gongshu","penalty_rate":-1}"#)
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::ValidationFailed);

    let e = post(&h.app, "/api/v1/allocate", &inline_scenario([[0.0; 4]; 3], 0.1))
        .await
        .expect_error(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::Degenerate);
    golden("error_allocate_degenerate", &serde_json::to_value(e).unwrap());

    post(&h.app, "/api/v1/allocate", "[1,2]")
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::InvalidRequest);
}

// ---- POST /forecast ----

const QUICK_TRAINING: &str = r#"{"hidden_size":8,"lookback":30,"epochs":3}"#;

#[tokio::test]
async fn forecast_synthetic() {
    let h = harness();
    let body = format!(r#"{{"dataset_id":"synthetic","horizon":90,"seed":7,"training":{QUICK_TRAINING}}}"#);
    let r = post(&h.app, "/api/v1/forecast", &body).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.bytes));
    let v = r.json();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["training"]["seed"], 7);
    let pts = v["forecast"].as_array().unwrap();
    assert_eq!(pts.len(), 90);
    let mut prev = v["last_observed"]["cumulative"].as_f64().unwrap();
    for p in pts {
        let c = p["cumulative"].as_f64().unwrap();
        assert!(c >= prev);
        prev = c;
    }
    assert_eq!(v["loss_curve"].as_array().unwrap().len(), 3);

    let again = post(&h.app, "/api/v1/forecast", &body).await;
    assert_eq!(again.bytes, r.bytes);
}

#[tokio::test]
async fn forecast_horizon_one_defaults() {
    let h = harness();
    let body = format!(r#"{{"dataset_id":"synthetic","horizon":1,"training":{QUICK_TRAINING}}}"#);
    let v = post(&h.app, "/api/v1/forecast", &body).await.json();
    assert_eq!(v["forecast"].as_array().unwrap().len(), 1);
    assert_eq!(v["seed"], 42);
}

#[tokio::test]
async fn forecast_errors() {
    let h = harness();
    let e = post(&h.app, "/api/v1/forecast", r#"{"dataset_id":"missing","horizon":5}"#)
        .await
        .expect_error(StatusCode::NOT_FOUND, ErrorCode::NotFound);
    golden("error_forecast_unknown", &serde_json::to_value(e).unwrap());

    for horizon in [0, 366] {
        let body = format!(r#"{{"dataset_id":"synthetic","horizon":{horizon}}}"#);
        post(&h.app, "/api/v1/forecast", &body)
            .await
            .expect_error(StatusCode::BAD_REQUEST, ErrorCode::InvalidRequest);
    }

    let e = post(&h.app, "/api/v1/forecast", r#"{"dataset_id":"short","horizon":5}"#)
        .await
        .expect_error(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::InsufficientData);
    golden("error_forecast_short", &serde_json::to_value(e).unwrap());

    post(&h.app, "/api/v1/forecast", r#"{"dataset_id":"gongshu-tiers","horizon":5}"#)
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::InvalidRequest);
    post(&h.app, "/api/v1/forecast", r#"{"dataset_id":"synthetic","horizon":5,"bogus":1}"#)
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::InvalidRequest);
}

#[tokio::test]
async fn forecast_timeout() {
    let h = harness_with(ServiceConfig {
        forecast_timeout: Duration::from_millis(1),
        ..Default::default()
    });
    let body = r#"{"dataset_id":"synthetic","horizon":5,"training":{"hidden_size":8,"epochs":40}}"#;
    post(&h.app, "/api/v1/forecast", body)
        .await
        .expect_error(StatusCode::GATEWAY_TIMEOUT, ErrorCode::Timeout);
}

// ---- /scenarios ----

fn stored_scenario(id: &str, district: &str) -> String {
    let mut v: Value = serde_json::from_str(&inline_scenario([[2.0, 0.5, 1.0, 0.2]; 3], 0.1)).unwrap();
    v["id"] = id.into();
    v["district"] = district.into();
    v.to_string()
}

#[tokio::test]
async fn scenario_crud() {
    let h = harness();
    let list = get(&h.app, "/api/v1/scenarios").await;
    assert_eq!(list.status, StatusCode::OK);
    golden("scenarios_list_bundled", &list.json());

    let created = post(&h.app, "/api/v1/scenarios", &stored_scenario("north", "North")).await;
    assert_eq!(created.status, StatusCode::CREATED);
    let created = created.json();
    assert!(created["created_at"].is_string());

    let fetched = get(&h.app, "/api/v1/scenarios/north").await;
    assert_eq!(fetched.json(), created);

    let put = call(&h.app, Method::PUT, "/api/v1/scenarios/north", Some(&stored_scenario("north", "Renamed"))).await;
    assert_eq!(put.status, StatusCode::OK);
    let put = put.json();
    assert_eq!(put["district"], "Renamed");
    assert_eq!(put["created_at"], created["created_at"]);

    let ids: Vec<String> = get(&h.app, "/api/v1/scenarios").await.json()["scenarios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["daoli", "gongshu", "north"]);

    let g = get(&h.app, "/api/v1/scenarios/gongshu").await;
    assert_eq!(g.status, StatusCode::OK);
    assert_eq!(g.json()["tiers"]["CenH"]["NoR"], 2.041);
}

#[tokio::test]
async fn scenario_errors() {
    let h = harness();
    let e = get(&h.app, "/api/v1/scenarios/nowhere")
        .await
        .expect_error(StatusCode::NOT_FOUND, ErrorCode::NotFound);
    golden("error_scenario_unknown", &serde_json::to_value(e).unwrap());

    call(&h.app, Method::PUT, "/api/v1/scenarios/nowhere", Some(&stored_scenario("nowhere", "X")))
        .await
        .expect_error(StatusCode::NOT_FOUND, ErrorCode::NotFound);

    post(&h.app, "/api/v1/scenarios", &stored_scenario("dup", "Dup")).await;
    post(&h.app, "/api/v1/scenarios", &stored_scenario("dup", "Dup"))
        .await
        .expect_error(StatusCode::CONFLICT, ErrorCode::Conflict);
    post(&h.app, "/api/v1/scenarios", &stored_scenario("gongshu", "Shadow"))
        .await
        .expect_error(StatusCode::CONFLICT, ErrorCode::Conflict);

    let mut bad: Value = serde_json::from_str(&stored_scenario("dup", "Dup")).unwrap();
    bad["tiers"]["CenH"]["NoR"] = "high".into();
    let e = call(&h.app, Method::PUT, "/api/v1/scenarios/dup", Some(&bad.to_string()))
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::ValidationFailed);
    assert_eq!(e.details.as_ref().unwrap()["path"], "tiers.CenH.NoR");
    golden("error_scenario_field", &serde_json::to_value(e).unwrap());

    let mut both: Value = serde_json::from_str(&stored_scenario("both", "Both")).unwrap();
    both["matrix"] = serde_json::from_str(ONES_4).unwrap();
    post(&h.app, "/api/v1/scenarios", &both.to_string())
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::ValidationFailed);
}

// ---- /datasets, misc ----

#[tokio::test]
async fn datasets() {
    let h = harness();
    let list = get(&h.app, "/api/v1/datasets").await.json();
    let ids: Vec<&str> = list["datasets"].as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["daoli-tiers", "gongshu-tiers", "short", "synthetic"]);
    let d = get(&h.app, "/api/v1/datasets/gongshu-tiers").await;
    assert_eq!(d.status, StatusCode::OK);
    golden("dataset_gongshu_tiers", &d.json());
    get(&h.app, "/api/v1/datasets/nope")
        .await
        .expect_error(StatusCode::NOT_FOUND, ErrorCode::NotFound);
    get(&h.app, "/api/v1/datasets/Not%20An%20Id")
        .await
        .expect_error(StatusCode::BAD_REQUEST, ErrorCode::ValidationFailed);
}

#[tokio::test]
async fn routing_errors_are_api_errors() {
    let h = harness();
    get(&h.app, "/api/v1/nothing-here")
        .await
        .expect_error(StatusCode::NOT_FOUND, ErrorCode::NotFound);
    get(&h.app, "/elsewhere")
        .await
        .expect_error(StatusCode::NOT_FOUND, ErrorCode::NotFound);
    call(&h.app, Method::DELETE, "/api/v1/scenarios", None)
        .await
        .expect_error(StatusCode::METHOD_NOT_ALLOWED, ErrorCode::MethodNotAllowed);
    let big = format!(r#"{{"entries":[[{}]]}}"#, "1,".repeat(1_200_000) + "1");
    post(&h.app, "/api/v1/ahp/analyze", &big)
        .await
        .expect_error(StatusCode::PAYLOAD_TOO_LARGE, ErrorCode::PayloadTooLarge);
}

#[tokio::test]
async fn health_and_description() {
    let h = harness();
    let v = get(&h.app, "/api/v1/health").await.json();
    assert_eq!(v["status"], "ok");
    let doc = get(&h.app, "/api/v1/openapi.json").await.json();
    assert_eq!(doc, serde_json::from_str::<Value>(OPENAPI).unwrap());
}

#[tokio::test]
async fn description_covers_routes_and_codes() {
    let doc: Value = serde_json::from_str(OPENAPI).unwrap();
    let paths: Vec<&String> = doc["paths"].as_object().unwrap().keys().collect();
    for p in [
        "/health",
        "/openapi.json",
        "/ahp/analyze",
        "/allocate",
        "/forecast",
        "/scenarios",
        "/scenarios/{id}",
        "/datasets",
        "/datasets/{id}",
    ] {
        assert!(paths.iter().any(|k| k.as_str() == p), "{p} undocumented");
    }
    let documented: Vec<&str> = doc["components"]["schemas"]["ErrorCode"]["enum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    let actual: Vec<&str> = ErrorCode::ALL.iter().map(|c| c.as_str()).collect();
    assert_eq!(documented, actual);
}

#[tokio::test]
async fn cors_only_for_configured_origins() {
    let h = harness_with(ServiceConfig {
        cors_origins: vec!["http://localhost:5173".into()],
        ..Default::default()
    });
    let req = |origin: &str| {
        Request::builder()
            .uri("/api/v1/health")
            .header(header::ORIGIN, origin)
            .body(Body::empty())
            .unwrap()
    };
    let ok = h.app.clone().oneshot(req("http://localhost:5173")).await.unwrap();
    assert_eq!(
        ok.headers().get(header::ACCESS_CONTROL_ALLOW_ORIGIN).unwrap(),
        "http://localhost:5173"
    );
    let other = h.app.clone().oneshot(req("http://evil.example")).await.unwrap();
    assert!(other.headers().get(header::ACCESS_CONTROL_ALLOW_ORIGIN).is_none());

    let closed = harness();
    let r = get(&closed.app, "/api/v1/health").await;
    assert!(r.headers.get(header::ACCESS_CONTROL_ALLOW_ORIGIN).is_none());
}
