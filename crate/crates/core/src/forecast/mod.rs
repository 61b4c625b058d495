//! Univariate demand forecasting.
//!
//! Cumulative daily counts are differenced into increments, min-max scaled
//! and cut into sliding windows. A single-layer LSTM learns the next
//! increment from the previous `lookback` ones; forecasts roll the model
//! forward autoregressively and accumulate the clamped increments back onto
//! the last observed total.

mod lstm;
mod model;
mod scaler;
mod series;
pub mod synthetic;
mod train;

use thiserror::Error;

pub use lstm::{
    gradient_check, gradient_check_with, loss_and_gradient, lstm_step, predict, window_loss, Gate,
    LstmParameters,
};
pub use model::{
    fit_series_model, forecast, Checkpoint, Hyperparameters, SeriesModel, TrainingReport,
    CHECKPOINT_FORMAT, CHECKPOINT_SCHEMA_VERSION, DEFAULT_HORIZON,
};
pub use scaler::ScalerSpec;
pub use series::{from_increments, make_windows, to_increments, IncrementSeries, TimeSeries, Window};
pub use train::{clip_gradient, train, TrainingConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid series at index {index}: {reason}")]
    InvalidSeries { index: usize, reason: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("model has not been trained")]
    Untrained,
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
}
