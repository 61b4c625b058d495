use serde::{Deserialize, Serialize};

use super::ForecastError;

/// Min-max normalization onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScaler", into = "RawScaler")]
pub struct ScalerSpec {
    min: f64,
    max: f64,
}

#[derive(Serialize, Deserialize)]
struct RawScaler {
    min: f64,
    max: f64,
}

impl TryFrom<RawScaler> for ScalerSpec {
    type Error = ForecastError;

    fn try_from(r: RawScaler) -> Result<Self, Self::Error> {
        ScalerSpec::new(r.min, r.max)
    }
}

impl From<ScalerSpec> for RawScaler {
    fn from(s: ScalerSpec) -> Self {
        RawScaler { min: s.min, max: s.max }
    }
}

impl ScalerSpec {
    pub fn new(min: f64, max: f64) -> Result<Self, ForecastError> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(ForecastError::InvalidConfig(format!(
                "scaler needs finite min < max, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    /// Fits to the observed range. A constant input gets the unit-width
    /// range centered on it, so it maps to 0.5.
    pub fn fit(values: &[f64]) -> Result<Self, ForecastError> {
        if values.is_empty() {
            return Err(ForecastError::InsufficientData { needed: 1, got: 0 });
        }
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        if hi > lo {
            Self::new(lo, hi)
        } else {
            Self::new(lo - 0.5, lo + 0.5)
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn transform(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn inverse(&self, s: f64) -> f64 {
        self.min + s * (self.max - self.min)
    }

    pub fn transform_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|x| self.transform(*x)).collect()
    }
}
