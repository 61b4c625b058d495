use serde::{Deserialize, Serialize};

use super::lstm::{predict, window_loss, LstmParameters};
use super::scaler::ScalerSpec;
use super::series::{from_increments, make_windows, to_increments, IncrementSeries, TimeSeries};
use super::train::{seeded, train, TrainingConfig, INIT_STREAM};
use super::ForecastError;

pub const DEFAULT_HORIZON: usize = 90;
pub const CHECKPOINT_FORMAT: &str = "allocwise-lstm";
pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// LSTM parameters together with the preprocessing they were trained under.
///
/// A model without a scaler has never been fitted and cannot forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesModel {
    lookback: usize,
    params: LstmParameters,
    scaler: Option<ScalerSpec>,
    /// Last cumulative value of the training series.
    baseline: Option<f64>,
    training: Option<TrainingConfig>,
}

impl SeriesModel {
    pub fn new(
        lookback: usize,
        params: LstmParameters,
        scaler: Option<ScalerSpec>,
    ) -> Result<Self, ForecastError> {
        if lookback == 0 {
            return Err(ForecastError::InvalidConfig("lookback must be at least 1".into()));
        }
        params.validate()?;
        Ok(Self {
            lookback,
            params,
            scaler,
            baseline: None,
            training: None,
        })
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn params(&self) -> &LstmParameters {
        &self.params
    }

    pub fn scaler(&self) -> Option<&ScalerSpec> {
        self.scaler.as_ref()
    }

    pub fn baseline(&self) -> Option<f64> {
        self.baseline
    }

    pub fn training_config(&self) -> Option<&TrainingConfig> {
        self.training.as_ref()
    }

    pub fn is_trained(&self) -> bool {
        self.scaler.is_some()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            hyperparameters: Hyperparameters {
                hidden_size: self.params.hidden_size(),
                lookback: self.lookback,
            },
            training: self.training.clone(),
            scaler: self.scaler,
            baseline: self.baseline,
            parameters: self.params.clone(),
        }
    }

    pub fn from_checkpoint(c: Checkpoint) -> Result<Self, ForecastError> {
        if c.format != CHECKPOINT_FORMAT {
            return Err(ForecastError::Checkpoint(format!("unknown format {:?}", c.format)));
        }
        if c.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(ForecastError::Checkpoint(format!(
                "unsupported schema_version {}",
                c.schema_version
            )));
        }
        if c.parameters.hidden_size() != c.hyperparameters.hidden_size {
            return Err(ForecastError::Checkpoint(format!(
                "hidden_size {} does not match parameters of size {}",
                c.hyperparameters.hidden_size,
                c.parameters.hidden_size()
            )));
        }
        let mut m = Self::new(c.hyperparameters.lookback, c.parameters, c.scaler)?;
        m.baseline = c.baseline;
        m.training = c.training;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ForecastError> {
        let c: Checkpoint =
            serde_json::from_str(s).map_err(|e| ForecastError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    pub hidden_size: usize,
    pub lookback: usize,
}

/// Versioned on-disk form of a [`SeriesModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub schema_version: u32,
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub training: Option<TrainingConfig>,
    pub scaler: Option<ScalerSpec>,
    #[serde(default)]
    pub baseline: Option<f64>,
    pub parameters: LstmParameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub seed: u64,
    pub windows: usize,
    pub loss_curve: Vec<f64>,
    /// Mean squared error on windows whose target lies in the holdout.
    pub holdout_loss: Option<f64>,
    pub warnings: Vec<String>,
}

impl TrainingReport {
    pub fn initial_loss(&self) -> Option<f64> {
        self.loss_curve.first().copied()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_curve.last().copied()
    }
}

/// Differences, scales and windows `series`, then trains a fresh model.
///
/// The scaler is fitted on the training increments only; the last
/// `config.holdout` increments are used for evaluation alone.
pub fn fit_series_model(
    series: &TimeSeries,
    config: &TrainingConfig,
) -> Result<(SeriesModel, TrainingReport), ForecastError> {
    config.validate()?;
    let inc = to_increments(series)?;
    let deltas = &inc.deltas;
    let needed = config.lookback + 1 + config.holdout;
    if deltas.len() < needed {
        return Err(ForecastError::InsufficientData {
            needed: needed + 1,
            got: series.len(),
        });
    }
    let n_train = deltas.len() - config.holdout;
    let scaler = ScalerSpec::fit(&deltas[..n_train])?;
    let scaled = scaler.transform_all(deltas);
    let windows = make_windows(&scaled[..n_train], config.lookback)?;

    let mut params = LstmParameters::init(config.hidden_size, &mut seeded(config.seed, INIT_STREAM))?;
    let loss_curve = train(&mut params, &windows, config)?;

    let holdout_loss = (config.holdout > 0).then(|| {
        let held = make_windows(&scaled[n_train - config.lookback..], config.lookback)
            .expect("holdout has lookback + 1 points");
        held.iter().map(|w| window_loss(&params, w)).sum::<f64>() / held.len() as f64
    });

    let model = SeriesModel {
        lookback: config.lookback,
        params,
        scaler: Some(scaler),
        baseline: Some(series.last_value()),
        training: Some(config.clone()),
    };
    let report = TrainingReport {
        seed: config.seed,
        windows: windows.len(),
        loss_curve,
        holdout_loss,
        warnings: inc.warnings(),
    };
    Ok((model, report))
}

/// Autoregressive rollout of `horizon` daily increments after the end of
/// `series`.
///
/// Each prediction is inverse-scaled, clamped at zero and fed back as the
/// next input. The result holds only the forecast days and never decreases.
pub fn forecast(
    model: &SeriesModel,
    series: &TimeSeries,
    horizon: usize,
) -> Result<TimeSeries, ForecastError> {
    let scaler = model.scaler.ok_or(ForecastError::Untrained)?;
    if horizon == 0 {
        return Err(ForecastError::InvalidConfig("horizon must be at least 1".into()));
    }
    if series.len() < model.lookback + 1 {
        return Err(ForecastError::InsufficientData {
            needed: model.lookback + 1,
            got: series.len(),
        });
    }
    let inc = to_increments(series)?;
    let mut window = scaler.transform_all(&inc.deltas[inc.deltas.len() - model.lookback..]);
    let mut deltas = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let raw = scaler.inverse(predict(&model.params, &window));
        // NaN also maps to 0 here
        let delta = raw.max(0.0);
        deltas.push(delta);
        window.remove(0);
        window.push(scaler.transform(delta));
    }
    let full = from_increments(&IncrementSeries {
        start: series.last_date(),
        baseline: series.last_value(),
        deltas,
    })?;
    TimeSeries::new(full.dates()[1..].to_vec(), full.values()[1..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn day0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2022, 1, 1).unwrap()
    }

    fn linear(n: usize, step: f64) -> TimeSeries {
        TimeSeries::from_start(day0(), (0..n).map(|i| 100.0 + step * i as f64).collect()).unwrap()
    }

    #[test]
    fn zero_model_forecasts_flat() {
        let m = SeriesModel::new(
            3,
            LstmParameters::zeros(4),
            Some(ScalerSpec::new(0.0, 10.0).unwrap()),
        )
        .unwrap();
        let s = linear(10, 5.0);
        let f = forecast(&m, &s, DEFAULT_HORIZON).unwrap();
        assert_eq!(f.len(), 90);
        assert!(f.values().iter().all(|v| *v == s.last_value()));
        assert_eq!(f.first_date(), s.last_date().succ_opt().unwrap());
    }

    #[test]
    fn untrained_and_short_inputs() {
        let m = SeriesModel::new(3, LstmParameters::zeros(2), None).unwrap();
        assert_eq!(forecast(&m, &linear(10, 1.0), 5), Err(ForecastError::Untrained));
        let m = SeriesModel::new(5, LstmParameters::zeros(2), Some(ScalerSpec::new(0.0, 1.0).unwrap()))
            .unwrap();
        assert!(matches!(
            forecast(&m, &linear(5, 1.0), 5),
            Err(ForecastError::InsufficientData { needed: 6, got: 5 })
        ));
        assert!(forecast(&m, &linear(10, 1.0), 0).is_err());
    }

    #[test]
    fn negative_predictions_clamp() {
        let mut p = LstmParameters::zeros(2);
        p.set_head_bias(-3.0);
        let m = SeriesModel::new(2, p, Some(ScalerSpec::new(0.0, 1.0).unwrap())).unwrap();
        let s = linear(5, 2.0);
        let f = forecast(&m, &s, 4).unwrap();
        assert_eq!(f.values(), &[s.last_value(); 4]);
    }

    #[test]
    fn constant_increments_are_learned() {
        let cfg = TrainingConfig {
            hidden_size: 8,
            lookback: 5,
            epochs: 200,
            ..Default::default()
        };
        let (m, report) = fit_series_model(&linear(60, 3.0), &cfg).unwrap();
        assert!(report.final_loss().unwrap() < 1e-6);
        let f = forecast(&m, &linear(60, 3.0), 10).unwrap();
        let last = 100.0 + 3.0 * 59.0;
        // constant deltas scale to 0.5 and come back as 3
        assert!((f.values()[9] - (last + 30.0)).abs() < 0.1, "{:?}", f.values());
    }

    #[test]
    fn holdout_is_reported() {
        let cfg = TrainingConfig {
            hidden_size: 4,
            lookback: 3,
            epochs: 2,
            holdout: 5,
            ..Default::default()
        };
        let (_, report) = fit_series_model(&linear(30, 1.0), &cfg).unwrap();
        assert!(report.holdout_loss.unwrap().is_finite());
        assert_eq!(report.windows, 29 - 5 - 3);
        let too_short = linear(9, 1.0);
        assert!(matches!(
            fit_series_model(&too_short, &cfg),
            Err(ForecastError::InsufficientData { .. })
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = TrainingConfig {
            hidden_size: 3,
            lookback: 4,
            epochs: 1,
            ..Default::default()
        };
        let (m, _) = fit_series_model(&linear(20, 1.5), &cfg).unwrap();
        let json = m.to_json();
        assert!(json.contains("\"format\": \"allocwise-lstm\""));
        assert_eq!(SeriesModel::from_json(&json).unwrap(), m);

        let mut c = m.to_checkpoint();
        c.schema_version = 2;
        assert!(SeriesModel::from_checkpoint(c).is_err());
        let mut c = m.to_checkpoint();
        c.hyperparameters.hidden_size = 5;
        assert!(SeriesModel::from_checkpoint(c).is_err());
        assert!(SeriesModel::from_json("{}").is_err());
    }
}
