//! Pairwise collinearity diagnostics and log10 preprocessing.
//!
//! VIF for two candidate criteria is 1/(1 − r²) where r² comes from an
//! ordinary least-squares fit of one column on the other. Values above 10
//! mean the two columns carry largely the same information.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_OBSERVATIONS: usize = 3;

/// r² at or above `1 − PERFECT_FIT` is treated as exact collinearity.
pub const PERFECT_FIT: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("column {name} has {len} values, at least {MIN_OBSERVATIONS} required")]
    TooShort { name: String, len: usize },
    #[error("columns have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("column {name} has a non-finite value at index {index}")]
    NonFinite { name: String, index: usize },
    #[error("regressor {name} has zero variance")]
    DegenerateRegressor { name: String },
    #[error("column {name}: value {value} at index {index} is not positive")]
    Domain {
        name: String,
        index: usize,
        value: f64,
    },
    #[error("target r² must lie in [0, 1), got {0}")]
    InvalidTarget(f64),
}

/// Named column of finite observations, one per region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    values: Vec<f64>,
}

impl FeatureColumn {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self, DiagnosticsError> {
        let name = name.into();
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DiagnosticsError::NonFinite { name, index });
        }
        Ok(Self { name, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Least-squares line y = slope·x + intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// t statistic of the slope. Informational; infinite on an exact fit,
    /// absent with fewer than three points of freedom.
    pub slope_t: Option<f64>,
}

fn check_pair(x: &FeatureColumn, y: &FeatureColumn) -> Result<(), DiagnosticsError> {
    if x.len() != y.len() {
        return Err(DiagnosticsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    for c in [x, y] {
        if c.len() < MIN_OBSERVATIONS {
            return Err(DiagnosticsError::TooShort {
                name: c.name.clone(),
                len: c.len(),
            });
        }
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Fits y on x by ordinary least squares.
pub fn ols_fit(x: &FeatureColumn, y: &FeatureColumn) -> Result<OlsFit, DiagnosticsError> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x.values()), mean(y.values()));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.values().iter().zip(y.values()) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(DiagnosticsError::DegenerateRegressor {
            name: x.name.clone(),
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // 1 − SS_res/SS_tot reduces to Sxy²/(Sxx·Syy) for a single regressor.
    let r_squared = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    let dof = x.len() as f64 - 2.0;
    let slope_t = if dof > 0.0 && syy > 0.0 {
        let ss_res = (syy - slope * sxy).max(0.0);
        let se = (ss_res / dof / sxx).sqrt();
        Some(if se == 0.0 { f64::INFINITY } else { slope / se })
    } else {
        None
    };
    Ok(OlsFit {
        slope,
        intercept,
        r_squared,
        slope_t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollinearityVerdict {
    /// VIF < 5
    Acceptable,
    /// 5 ≤ VIF ≤ 10
    Elevated,
    /// VIF > 10
    Severe,
}

impl CollinearityVerdict {
    pub fn from_vif(vif: f64) -> Self {
        if vif < 5.0 {
            Self::Acceptable
        } else if vif <= 10.0 {
            Self::Elevated
        } else {
            Self::Severe
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearityReport {
    pub r_squared: f64,
    /// `f64::INFINITY` (serialized as null) when `perfect_collinearity` is set.
    pub vif: f64,
    pub perfect_collinearity: bool,
    pub verdict: CollinearityVerdict,
    pub fit: OlsFit,
}

/// VIF of the two-variable pair, regressing `y` on `x`.
pub fn vif_pair(x: &FeatureColumn, y: &FeatureColumn) -> Result<CollinearityReport, DiagnosticsError> {
    let fit = ols_fit(x, y)?;
    let r_squared = fit.r_squared;
    let perfect = r_squared >= 1.0 - PERFECT_FIT;
    let vif = if perfect {
        f64::INFINITY
    } else {
        1.0 / (1.0 - r_squared)
    };
    Ok(CollinearityReport {
        r_squared,
        vif,
        perfect_collinearity: perfect,
        verdict: CollinearityVerdict::from_vif(vif),
        fit,
    })
}

/// Elementwise log10; the result is named `<name>_log10`.
pub fn log10_column(c: &FeatureColumn) -> Result<FeatureColumn, DiagnosticsError> {
    let values = c
        .values()
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 {
                Ok(value.log10())
            } else {
                Err(DiagnosticsError::Domain {
                    name: c.name.clone(),
                    index,
                    value,
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    FeatureColumn::new(format!("{}_log10", c.name), values)
}

/// Synthetic column pair whose sample r² equals `target_r2` up to rounding.
///
/// The noise column is centered and orthogonalized against `x`, then scaled
/// so that Sxx / (Sxx + k²·See) = r².
pub fn synthetic_pair(
    len: usize,
    target_r2: f64,
    seed: u64,
) -> Result<(FeatureColumn, FeatureColumn), DiagnosticsError> {
    if !(0.0..1.0).contains(&target_r2) {
        return Err(DiagnosticsError::InvalidTarget(target_r2));
    }
    if len < MIN_OBSERVATIONS {
        return Err(DiagnosticsError::TooShort {
            name: "synthetic".into(),
            len,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut e: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let mx = mean(&x);
    let xc: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let me = mean(&e);
    e.iter_mut().for_each(|v| *v -= me);
    let sxx: f64 = xc.iter().map(|v| v * v).sum();
    let proj = xc.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() / sxx;
    e.iter_mut().zip(&xc).for_each(|(ei, xi)| *ei -= proj * xi);
    let see: f64 = e.iter().map(|v| v * v).sum();

    let k = if target_r2 == 0.0 {
        0.0
    } else {
        (sxx * (1.0 - target_r2) / (target_r2 * see)).sqrt()
    };
    let y: Vec<f64> = if target_r2 == 0.0 {
        e
    } else {
        xc.iter().zip(&e).map(|(xi, ei)| xi + k * ei).collect()
    };
    Ok((
        FeatureColumn::new("x", x)?,
        FeatureColumn::new("y", y)?,
    ))
}
