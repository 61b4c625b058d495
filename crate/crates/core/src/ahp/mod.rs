//! Analytic hierarchy process: judgment matrices, principal-eigenvector
//! weighting and the consistency-ratio test.
//!
//! The usual entry point is [`analyze`], which runs power iteration on a
//! [`JudgmentMatrix`], normalizes the dominant eigenvector into a
//! [`WeightVector`] and evaluates CI = (λmax − n)/(n − 1) against the
//! random-index table.

mod consistency;
mod eigen;
mod matrix;

pub use consistency::{
    consistency_index, consistency_ratio, consistency_ratio_with, random_index, ConsistencyReport,
    RandomIndexTable, CONSISTENCY_THRESHOLD, DEFAULT_RANDOM_INDEX,
};
pub use eigen::{principal_eigen, principal_eigen_from, EigenResult};
pub use matrix::{
    validate_matrix, Cell, JudgmentMatrix, ReciprocityResidual, SaatyScale, ValidationReport,
    MAX_ORDER, MIN_ORDER, RECIPROCITY_TOLERANCE, SCALE_TOLERANCE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the AHP routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum AhpError {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("matrix order {0} outside supported range [{MIN_ORDER}, {MAX_ORDER}]")]
    Order(usize),
    #[error("criteria labels ({labels}) do not match matrix order {order}")]
    LabelCount { labels: usize, order: usize },
    #[error("matrix failed validation: {0}")]
    Invalid(String),
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Solver and table settings shared by the analysis entry points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AhpSettings {
    /// Residual bound ‖M·v − λ·v‖∞ / ‖v‖∞ at which power iteration stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub random_index: RandomIndexTable,
}

impl Default for AhpSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
            random_index: RandomIndexTable::default(),
        }
    }
}

/// Normalized criterion weights; non-negative and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    /// Wraps already-normalized weights, checking the sum-to-one invariant.
    pub fn new(weights: Vec<f64>) -> Result<Self, AhpError> {
        if weights.is_empty() {
            return Err(AhpError::Degenerate("empty weight vector".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(AhpError::InvalidInput(format!(
                "weight {i} is {w}, expected a finite non-negative value"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(AhpError::InvalidInput(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for WeightVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(deserializer)?;
        WeightVector::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Divides each component by the total so the result sums to one.
pub fn normalize_weights(eigvec: &[f64]) -> Result<WeightVector, AhpError> {
    if let Some((i, v)) = eigvec
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(AhpError::InvalidInput(format!(
            "component {i} is {v}, expected a finite non-negative value"
        )));
    }
    let sum: f64 = eigvec.iter().sum();
    if sum <= 0.0 {
        return Err(AhpError::Degenerate(
            "cannot normalize a zero vector".into(),
        ));
    }
    Ok(WeightVector(eigvec.iter().map(|v| v / sum).collect()))
}

/// Weights plus the consistency verdict for one judgment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub weights: WeightVector,
    /// Dominant eigenvector scaled so its largest component is 1.
    pub eigenvector: Vec<f64>,
    pub consistency: ConsistencyReport,
    pub iterations: usize,
    pub residual: f64,
}

/// Runs [`analyze_with`] using the default solver settings.
pub fn analyze(m: &JudgmentMatrix) -> Result<Analysis, AhpError> {
    analyze_with(m, &AhpSettings::default())
}

pub fn analyze_with(m: &JudgmentMatrix, settings: &AhpSettings) -> Result<Analysis, AhpError> {
    let eigen = principal_eigen(m, settings.tolerance, settings.max_iterations)?;
    let weights = normalize_weights(&eigen.vector)?;
    let n = m.order();
    let ci = consistency_index(eigen.lambda_max, n)?;
    let consistency = consistency_ratio_with(ci, n, &settings.random_index)?;
    Ok(Analysis {
        weights,
        eigenvector: eigen.vector,
        consistency: ConsistencyReport {
            lambda_max: eigen.lambda_max,
            ..consistency
        },
        iterations: eigen.iterations,
        residual: eigen.residual,
    })
}
