//! Request and response bodies, plus the pure computations behind the
//! compute endpoints. The CLI's `--json` output uses the same types.

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use allocwise_core::ahp::{analyze_with, AhpSettings, ConsistencyReport, JudgmentMatrix, WeightVector};
use allocwise_core::forecast::{fit_series_model, forecast, TimeSeries, TrainingConfig};
use allocwise_core::store::{DatasetSummary, Scenario, ScenarioSummary};

use crate::error::{ApiError, ErrorCode};

pub const MIN_HORIZON: usize = 1;
pub const MAX_HORIZON: usize = 365;
pub const DEFAULT_HORIZON: usize = allocwise_core::forecast::DEFAULT_HORIZON;

/// Parses JSON, reporting syntax problems as `invalid_json` and schema
/// problems as `code` with the offending path in `details`.
pub fn parse_json<T: DeserializeOwned>(bytes: &[u8], code: ErrorCode) -> Result<T, ApiError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| {
        ApiError::new(ErrorCode::InvalidJson, format!("body is not valid JSON: {e}"))
            .with_details(json!({ "line": e.line(), "column": e.column() }))
    })?;
    from_value(value, code)
}

pub fn from_value<T: DeserializeOwned>(value: Value, code: ErrorCode) -> Result<T, ApiError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ApiError::new(code, inner.to_string()).with_details(json!({ "path": path }))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    pub criteria: Vec<String>,
    pub weights: WeightVector,
    /// Principal eigenvector scaled to a largest component of 1.
    pub eigenvector: Vec<f64>,
    pub consistency: ConsistencyReport,
    pub reciprocal: bool,
    pub max_reciprocity_residual: f64,
    pub iterations: usize,
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Weights and consistency for `m`. With `strict_scale`, reciprocity and
/// Saaty-scale problems are errors rather than warnings.
pub fn analyze_matrix(
    m: &JudgmentMatrix,
    strict_scale: bool,
    settings: &AhpSettings,
) -> Result<AnalyzeResponse, ApiError> {
    let report = m.validation(strict_scale);
    let errors = report.errors(m.criteria());
    if !errors.is_empty() {
        return Err(ApiError::new(ErrorCode::InvalidMatrix, errors.join("; "))
            .with_details(json!({ "errors": errors })));
    }
    let a = analyze_with(m, settings)?;
    let mut warnings = report.warnings(m.criteria());
    if !a.consistency.passes {
        warnings.push(format!(
            "consistency ratio {:.4} is not below 0.1; revise the judgments",
            a.consistency.cr
        ));
    }
    Ok(AnalyzeResponse {
        criteria: m.criteria().to_vec(),
        weights: a.weights,
        eigenvector: a.eigenvector,
        consistency: a.consistency,
        reciprocal: report.reciprocal,
        max_reciprocity_residual: report.max_reciprocity_residual,
        iterations: a.iterations,
        residual: a.residual,
        warnings,
    })
}

/// Body of `POST /allocate`: a stored scenario by id, or a full scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum AllocateRequest {
    ById {
        scenario_id: String,
        penalty_rate: Option<f64>,
    },
    Inline(Box<Scenario>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ByIdBody {
    scenario_id: String,
    #[serde(default)]
    penalty_rate: Option<f64>,
}

impl AllocateRequest {
    pub fn parse(bytes: &[u8]) -> Result<Self, ApiError> {
        let mut value: Value = parse_json(bytes, ErrorCode::InvalidRequest)?;
        let Some(obj) = value.as_object_mut() else {
            return Err(ApiError::new(ErrorCode::InvalidRequest, "body must be a JSON object"));
        };
        if obj.contains_key("scenario_id") {
            let b: ByIdBody = from_value(value, ErrorCode::InvalidRequest)?;
            return Ok(Self::ById {
                scenario_id: b.scenario_id,
                penalty_rate: b.penalty_rate,
            });
        }
        obj.entry("id").or_insert_with(|| Value::from("inline"));
        let s: Scenario = from_value(value, ErrorCode::ValidationFailed)?;
        Ok(Self::Inline(Box::new(s)))
    }
}

/// Overrides the scenario's penalty rate after checking it.
pub fn with_penalty_rate(mut s: Scenario, rate: Option<f64>) -> Result<Scenario, ApiError> {
    if let Some(r) = rate {
        if !(r.is_finite() && r >= 0.0) {
            return Err(ApiError::new(
                ErrorCode::ValidationFailed,
                format!("penalty_rate must be finite and non-negative, got {r}"),
            )
            .with_details(json!({ "path": "penalty_rate" })));
        }
        s.penalty_rate = r;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastRequest {
    pub dataset_id: String,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Overrides `training.seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub training: Option<TrainingConfig>,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub date: NaiveDate,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_id: Option<String>,
    pub seed: u64,
    pub horizon: usize,
    pub training: TrainingConfig,
    pub last_observed: SeriesPoint,
    pub forecast: Vec<SeriesPoint>,
    /// Mean window MSE per epoch, in scaled units.
    pub loss_curve: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout_loss: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn points(s: &TimeSeries) -> Vec<SeriesPoint> {
    s.dates()
        .iter()
        .zip(s.values())
        .map(|(d, v)| SeriesPoint {
            date: *d,
            cumulative: *v,
        })
        .collect()
}

pub fn check_horizon(horizon: usize) -> Result<(), ApiError> {
    if (MIN_HORIZON..=MAX_HORIZON).contains(&horizon) {
        Ok(())
    } else {
        Err(ApiError::new(
            ErrorCode::InvalidRequest,
            format!("horizon must be in [{MIN_HORIZON}, {MAX_HORIZON}], got {horizon}"),
        )
        .with_details(json!({ "path": "horizon" })))
    }
}

/// Trains on `series` and rolls the model forward `horizon` days.
/// Deterministic in (series, horizon, seed, training).
pub fn run_forecast(
    series: &TimeSeries,
    horizon: usize,
    seed: Option<u64>,
    training: Option<TrainingConfig>,
) -> Result<ForecastResponse, ApiError> {
    check_horizon(horizon)?;
    let mut config = training.unwrap_or_default();
    if let Some(s) = seed {
        config.seed = s;
    }
    let (model, report) = fit_series_model(series, &config)?;
    let out = forecast(&model, series, horizon)?;
    Ok(ForecastResponse {
        dataset_id: None,
        seed: config.seed,
        horizon,
        training: config,
        last_observed: SeriesPoint {
            date: series.last_date(),
            cumulative: series.last_value(),
        },
        forecast: points(&out),
        loss_curve: report.loss_curve,
        holdout_loss: report.holdout_loss,
        warnings: report.warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioList {
    pub scenarios: Vec<ScenarioSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetList {
    pub datasets: Vec<DatasetSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}
