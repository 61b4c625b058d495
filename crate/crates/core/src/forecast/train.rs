use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{loss_and_gradient, LstmParameters};
use super::{ForecastError, Window};

/// Hyperparameters for [`train`] and [`super::fit_series_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub hidden_size: usize,
    pub lookback: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Per-window gradient L2 norm ceiling.
    pub clip_norm: f64,
    pub seed: u64,
    /// Trailing increments excluded from scaling and training.
    pub holdout: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            hidden_size: 32,
            lookback: 30,
            epochs: 200,
            learning_rate: 1e-2,
            clip_norm: 5.0,
            seed: 42,
            holdout: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        let bad = |m: &str| Err(ForecastError::InvalidConfig(m.to_string()));
        if self.hidden_size == 0 {
            return bad("hidden_size must be at least 1");
        }
        if self.lookback == 0 {
            return bad("lookback must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive and finite");
        }
        if !(self.clip_norm.is_finite() && self.clip_norm > 0.0) {
            return bad("clip_norm must be positive and finite");
        }
        Ok(())
    }
}

// Stream 0 of the seed initializes weights, stream 1 shuffles windows.
pub(crate) const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rescales `grad` so its L2 norm is at most `max_norm`; returns the norm
/// before clipping.
pub fn clip_gradient(grad: &mut LstmParameters, max_norm: f64) -> f64 {
    let norm = grad.norm();
    if norm > max_norm {
        grad.scale(max_norm / norm);
    }
    norm
}

/// Per-window stochastic gradient descent, windows reshuffled every epoch.
///
/// Returns one entry per epoch: the mean squared error of each window
/// measured just before its update. `epochs = 0` leaves `params` untouched.
pub fn train(
    params: &mut LstmParameters,
    windows: &[Window],
    config: &TrainingConfig,
) -> Result<Vec<f64>, ForecastError> {
    config.validate()?;
    if windows.is_empty() {
        return Err(ForecastError::InsufficientData { needed: 1, got: 0 });
    }
    if windows.iter().any(|w| !w.target.is_finite() || w.inputs.iter().any(|x| !x.is_finite())) {
        return Err(ForecastError::InvalidConfig("training windows must be finite".into()));
    }
    let mut rng = seeded(config.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &k in &order {
            let (loss, mut grad) = loss_and_gradient(params, &windows[k]);
            if !loss.is_finite() {
                return Err(ForecastError::Divergence { epoch });
            }
            total += loss;
            clip_gradient(&mut grad, config.clip_norm);
            params.axpy(-config.learning_rate, &grad);
        }
        let mean = total / windows.len() as f64;
        if !mean.is_finite() {
            return Err(ForecastError::Divergence { epoch });
        }
        curve.push(mean);
    }
    Ok(curve)
}
