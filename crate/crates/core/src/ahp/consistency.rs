use serde::{Deserialize, Serialize};

use super::{AhpError, MAX_ORDER, MIN_ORDER};

/// Judgments are accepted when CR is strictly below this value.
pub const CONSISTENCY_THRESHOLD: f64 = 0.1;

/// Random index for n = 1..=10.
pub const DEFAULT_RANDOM_INDEX: [f64; 10] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];

const CI_NOISE: f64 = 1e-10;

/// Random-index table indexed by matrix order, starting at n = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RandomIndexTable(Vec<f64>);

impl Default for RandomIndexTable {
    fn default() -> Self {
        Self(DEFAULT_RANDOM_INDEX.to_vec())
    }
}

impl TryFrom<Vec<f64>> for RandomIndexTable {
    type Error = AhpError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<RandomIndexTable> for Vec<f64> {
    fn from(t: RandomIndexTable) -> Self {
        t.0
    }
}

impl RandomIndexTable {
    /// Custom table; entries for n ≥ 3 must be positive so CR is defined.
    pub fn new(values: Vec<f64>) -> Result<Self, AhpError> {
        if values.len() < MIN_ORDER {
            return Err(AhpError::InvalidInput(
                "random index table must cover at least n = 1, 2".into(),
            ));
        }
        for (i, v) in values.iter().enumerate() {
            let n = i + 1;
            if !v.is_finite() || *v < 0.0 || (n > MIN_ORDER && *v <= 0.0) {
                return Err(AhpError::InvalidInput(format!(
                    "random index for n = {n} is {v}"
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn get(&self, n: usize) -> Result<f64, AhpError> {
        if n == 0 || n > MAX_ORDER {
            return Err(AhpError::Order(n));
        }
        self.0.get(n - 1).copied().ok_or(AhpError::Order(n))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Tabulated random index for a matrix of order `n` (1 ≤ n ≤ 10).
pub fn random_index(n: usize) -> Result<f64, AhpError> {
    RandomIndexTable::default().get(n)
}

/// CI = (λmax − n)/(n − 1). Values within 1e-10 below zero are reported as 0.
pub fn consistency_index(lambda_max: f64, n: usize) -> Result<f64, AhpError> {
    if n < MIN_ORDER {
        return Err(AhpError::Order(n));
    }
    let ci = (lambda_max - n as f64) / (n as f64 - 1.0);
    if ci < 0.0 && ci > -CI_NOISE {
        Ok(0.0)
    } else {
        Ok(ci)
    }
}

/// Result of the CR = CI/RI test, together with λmax and CI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub n: usize,
    pub lambda_max: f64,
    pub ci: f64,
    pub ri: f64,
    pub cr: f64,
    pub passes: bool,
}

/// CR against the default random-index table. `lambda_max` in the returned
/// report is reconstructed from `ci`.
pub fn consistency_ratio(ci: f64, n: usize) -> Result<ConsistencyReport, AhpError> {
    consistency_ratio_with(ci, n, &RandomIndexTable::default())
}

/// CR = CI/RI(n); for n ≤ 2 the ratio is defined as 0 and always passes.
pub fn consistency_ratio_with(
    ci: f64,
    n: usize,
    table: &RandomIndexTable,
) -> Result<ConsistencyReport, AhpError> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&n) {
        return Err(AhpError::Order(n));
    }
    if !ci.is_finite() || ci <= -CI_NOISE {
        return Err(AhpError::InvalidInput(format!(
            "consistency index must be non-negative, got {ci}"
        )));
    }
    let ci = ci.max(0.0);
    let ri = table.get(n)?;
    let cr = if n <= MIN_ORDER { 0.0 } else { ci / ri };
    Ok(ConsistencyReport {
        n,
        lambda_max: n as f64 + ci * (n as f64 - 1.0),
        ci,
        ri,
        cr,
        passes: cr < CONSISTENCY_THRESHOLD,
    })
}
