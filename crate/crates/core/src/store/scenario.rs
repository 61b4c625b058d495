use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ahp::{analyze, Analysis, JudgmentMatrix};
use crate::allocation::{
    allocate_district, AllocationOptions, AllocationResult, Criterion, CriterionWeights,
    DistrictTiers, PenaltyBase, DEFAULT_PENALTY_RATE,
};

use super::{validate_id, StoreError, SCHEMA_VERSION};

/// Where a scenario's criterion weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    Explicit(CriterionWeights),
    /// Four-criterion judgment matrix, rows in NoR, TC, NoS, Cost order.
    Matrix(JudgmentMatrix),
}

/// One district's allocation inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    pub id: String,
    pub district: String,
    pub weights: WeightSource,
    pub tiers: DistrictTiers,
    pub penalty_rate: f64,
    pub penalty_base: PenaltyBase,
    pub dataset_id: Option<String>,
    pub created_at: Option<DateTime<Utc>>,
    pub modified_at: Option<DateTime<Utc>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawWeights {
    Explicit(Vec<f64>),
    Matrix { matrix: JudgmentMatrix },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default = "default_schema")]
    schema_version: u32,
    id: String,
    district: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<RawWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<JudgmentMatrix>,
    tiers: DistrictTiers,
    #[serde(default = "default_rate")]
    penalty_rate: f64,
    #[serde(default)]
    penalty_base: PenaltyBase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dataset_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    created_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modified_at: Option<DateTime<Utc>>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_rate() -> f64 {
    DEFAULT_PENALTY_RATE
}

impl TryFrom<RawScenario> for Scenario {
    type Error = StoreError;

    fn try_from(r: RawScenario) -> Result<Self, Self::Error> {
        if r.schema_version != SCHEMA_VERSION {
            return Err(StoreError::UnsupportedSchema(r.schema_version));
        }
        let weights = match (r.weights, r.matrix) {
            (Some(_), Some(_)) => {
                return Err(StoreError::Validation(
                    "scenario has both weights and matrix; give exactly one".into(),
                ))
            }
            (None, None) => {
                return Err(StoreError::Validation(
                    "scenario needs either weights or matrix".into(),
                ))
            }
            (Some(RawWeights::Explicit(w)), None) => WeightSource::Explicit(
                CriterionWeights::try_from(w).map_err(|e| StoreError::Validation(e.to_string()))?,
            ),
            (Some(RawWeights::Matrix { matrix }), None) | (None, Some(matrix)) => {
                WeightSource::Matrix(matrix)
            }
        };
        let s = Scenario {
            id: r.id,
            district: r.district,
            weights,
            tiers: r.tiers,
            penalty_rate: r.penalty_rate,
            penalty_base: r.penalty_base,
            dataset_id: r.dataset_id,
            created_at: r.created_at,
            modified_at: r.modified_at,
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        let weights = match s.weights {
            WeightSource::Explicit(w) => RawWeights::Explicit(w.into()),
            WeightSource::Matrix(matrix) => RawWeights::Matrix { matrix },
        };
        RawScenario {
            schema_version: SCHEMA_VERSION,
            id: s.id,
            district: s.district,
            weights: Some(weights),
            matrix: None,
            tiers: s.tiers,
            penalty_rate: s.penalty_rate,
            penalty_base: s.penalty_base,
            dataset_id: s.dataset_id,
            created_at: s.created_at,
            modified_at: s.modified_at,
        }
    }
}

/// Weights actually used for scoring, with the analysis when they came
/// from a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedWeights {
    pub weights: CriterionWeights,
    pub analysis: Option<Analysis>,
}

/// Allocation of a scenario plus where its weights came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAllocation {
    pub scenario_id: String,
    pub district: String,
    pub allocation: AllocationResult,
    pub analysis: Option<Analysis>,
    pub warnings: Vec<String>,
}

impl Scenario {
    /// Structural checks that do not need the store.
    pub fn validate(&self) -> Result<(), StoreError> {
        validate_id(&self.id)?;
        if self.district.trim().is_empty() {
            return Err(StoreError::Validation("district must not be empty".into()));
        }
        if !(self.penalty_rate.is_finite() && self.penalty_rate >= 0.0) {
            return Err(StoreError::Validation(format!(
                "penalty_rate must be finite and non-negative, got {}",
                self.penalty_rate
            )));
        }
        self.tiers
            .validate()
            .map_err(|e| StoreError::Validation(e.to_string()))?;
        if let WeightSource::Matrix(m) = &self.weights {
            check_matrix_labels(m)?;
        }
        if let Some(d) = &self.dataset_id {
            validate_id(d)?;
        }
        Ok(())
    }

    pub fn options(&self) -> AllocationOptions {
        AllocationOptions {
            penalty_rate: self.penalty_rate,
            penalty_base: self.penalty_base,
            invert_cost: false,
        }
    }

    pub fn resolve_weights(&self) -> Result<ResolvedWeights, StoreError> {
        match &self.weights {
            WeightSource::Explicit(w) => Ok(ResolvedWeights {
                weights: *w,
                analysis: None,
            }),
            WeightSource::Matrix(m) => {
                let analysis = analyze(m)?;
                let weights = CriterionWeights::try_from(&analysis.weights)
                    .map_err(|e| StoreError::Validation(e.to_string()))?;
                Ok(ResolvedWeights {
                    weights,
                    analysis: Some(analysis),
                })
            }
        }
    }

    /// Resolves weights and runs the allocation pipeline with the
    /// scenario's own options.
    pub fn allocate(&self) -> Result<ScenarioAllocation, StoreError> {
        self.allocate_with(&self.options())
    }

    pub fn allocate_with(&self, options: &AllocationOptions) -> Result<ScenarioAllocation, StoreError> {
        let resolved = self.resolve_weights()?;
        let allocation = allocate_district(&resolved.weights, &self.tiers, options)?;
        let mut warnings = Vec::new();
        if let Some(a) = &resolved.analysis {
            if !a.consistency.passes {
                warnings.push(format!(
                    "judgment matrix is inconsistent (CR = {:.4} ≥ 0.1); weights should be revised",
                    a.consistency.cr
                ));
            }
            if let WeightSource::Matrix(m) = &self.weights {
                warnings.extend(m.validation(false).warnings(m.criteria()));
            }
        }
        for k in &allocation.negative_penalized {
            warnings.push(format!("{k} penalized index is negative and was clamped to 0"));
        }
        Ok(ScenarioAllocation {
            scenario_id: self.id.clone(),
            district: self.district.clone(),
            allocation,
            analysis: resolved.analysis,
            warnings,
        })
    }
}

fn check_matrix_labels(m: &JudgmentMatrix) -> Result<(), StoreError> {
    if m.order() != Criterion::ALL.len() {
        return Err(StoreError::Validation(format!(
            "scenario matrix must be {n}×{n} over NoR, TC, NoS, Cost; got order {}",
            m.order(),
            n = Criterion::ALL.len()
        )));
    }
    let canonical = Criterion::labels();
    let positional: Vec<String> = (1..=4).map(|i| format!("C{i}")).collect();
    if m.criteria() != canonical.as_slice() && m.criteria() != positional.as_slice() {
        return Err(StoreError::Validation(format!(
            "matrix criteria {:?} must be {:?} in that order",
            m.criteria(),
            canonical
        )));
    }
    Ok(())
}
