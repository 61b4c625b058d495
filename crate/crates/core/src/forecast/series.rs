use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::ForecastError;

/// Daily cumulative counts.
///
/// Dates must advance by exactly one day and values must be finite and
/// non-negative. A decreasing step is allowed but reported by
/// [`TimeSeries::decreasing_steps`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries", into = "RawSeries")]
pub struct TimeSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl TryFrom<RawSeries> for TimeSeries {
    type Error = ForecastError;

    fn try_from(raw: RawSeries) -> Result<Self, Self::Error> {
        TimeSeries::new(raw.dates, raw.values)
    }
}

impl From<TimeSeries> for RawSeries {
    fn from(s: TimeSeries) -> Self {
        RawSeries {
            dates: s.dates,
            values: s.values,
        }
    }
}

pub(crate) fn next_day(d: NaiveDate, n: u64) -> Result<NaiveDate, ForecastError> {
    d.checked_add_days(Days::new(n))
        .ok_or_else(|| ForecastError::InvalidSeries {
            index: 0,
            reason: "date out of range".into(),
        })
}

impl TimeSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self, ForecastError> {
        if dates.len() != values.len() {
            return Err(ForecastError::InvalidSeries {
                index: dates.len().min(values.len()),
                reason: format!("{} dates but {} values", dates.len(), values.len()),
            });
        }
        if dates.is_empty() {
            return Err(ForecastError::InsufficientData { needed: 1, got: 0 });
        }
        for (index, pair) in dates.windows(2).enumerate() {
            if pair[0].succ_opt() != Some(pair[1]) {
                let reason = if pair[1] <= pair[0] {
                    "dates must be strictly increasing"
                } else {
                    "dates must be consecutive days"
                };
                return Err(ForecastError::InvalidSeries {
                    index: index + 1,
                    reason: format!("{reason} ({} after {})", pair[1], pair[0]),
                });
            }
        }
        if let Some(index) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ForecastError::InvalidSeries {
                index,
                reason: format!("value {} is not a non-negative count", values[index]),
            });
        }
        Ok(Self { dates, values })
    }

    /// Series starting at `start` with one value per day.
    pub fn from_start(start: NaiveDate, values: Vec<f64>) -> Result<Self, ForecastError> {
        let dates = (0..values.len() as u64)
            .map(|i| next_day(start, i))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dates, values)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
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

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        *self.dates.last().expect("non-empty by construction")
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().expect("non-empty by construction")
    }

    /// Indices `i` where `values[i] < values[i - 1]`.
    pub fn decreasing_steps(&self) -> Vec<usize> {
        self.values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] < w[0])
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Daily increments plus the cumulative value they start from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSeries {
    /// Date of `baseline`; delta `k` belongs to `start + k + 1` days.
    pub start: NaiveDate,
    pub baseline: f64,
    pub deltas: Vec<f64>,
}

impl IncrementSeries {
    /// Positions of negative deltas; cumulative counts should never fall.
    pub fn negative_deltas(&self) -> Vec<usize> {
        self.deltas
            .iter()
            .enumerate()
            .filter(|(_, d)| **d < 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn warnings(&self) -> Vec<String> {
        self.negative_deltas()
            .into_iter()
            .map(|i| format!("cumulative value decreases by {} at delta {i}", -self.deltas[i]))
            .collect()
    }
}

/// deltas[i] = values[i+1] − values[i], baseline = values[0].
pub fn to_increments(s: &TimeSeries) -> Result<IncrementSeries, ForecastError> {
    if s.len() < 2 {
        return Err(ForecastError::InsufficientData {
            needed: 2,
            got: s.len(),
        });
    }
    Ok(IncrementSeries {
        start: s.first_date(),
        baseline: s.values[0],
        deltas: s.values.windows(2).map(|w| w[1] - w[0]).collect(),
    })
}

/// Running sum of the deltas onto the baseline.
///
/// Exact inverse of [`to_increments`] whenever the subtractions there were
/// exact, which holds for integer-valued counts below 2^53.
pub fn from_increments(inc: &IncrementSeries) -> Result<TimeSeries, ForecastError> {
    let mut values = Vec::with_capacity(inc.deltas.len() + 1);
    let mut acc = inc.baseline;
    values.push(acc);
    for d in &inc.deltas {
        acc += d;
        values.push(acc);
    }
    TimeSeries::from_start(inc.start, values)
}

/// Supervised pair: `lookback` consecutive values and the one after them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub inputs: Vec<f64>,
    pub target: f64,
}

/// All `len − lookback` sliding windows over `values`.
pub fn make_windows(values: &[f64], lookback: usize) -> Result<Vec<Window>, ForecastError> {
    if lookback == 0 {
        return Err(ForecastError::InvalidConfig("lookback must be at least 1".into()));
    }
    if values.len() <= lookback {
        return Err(ForecastError::InsufficientData {
            needed: lookback + 1,
            got: values.len(),
        });
    }
    Ok(values
        .windows(lookback + 1)
        .map(|w| Window {
            inputs: w[..lookback].to_vec(),
            target: w[lookback],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 3, 23).unwrap()
    }

    fn series(v: &[f64]) -> TimeSeries {
        TimeSeries::from_start(day0(), v.to_vec()).unwrap()
    }

    #[test]
    fn increments_examples() {
        let inc = to_increments(&series(&[10.0, 11.0, 13.0, 16.0])).unwrap();
        assert_eq!(inc.baseline, 10.0);
        assert_eq!(inc.deltas, vec![1.0, 2.0, 3.0]);

        let inc = to_increments(&series(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(inc.deltas, vec![0.0, 0.0]);

        let inc = to_increments(&series(&[10.0, 9.0])).unwrap();
        assert_eq!(inc.deltas, vec![-1.0]);
        assert_eq!(inc.negative_deltas(), vec![0]);
        assert_eq!(inc.warnings().len(), 1);

        assert!(matches!(
            to_increments(&series(&[1.0])),
            Err(ForecastError::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn reconstruction_examples() {
        let inc = IncrementSeries {
            start: day0(),
            baseline: 10.0,
            deltas: vec![1.0, 2.0, 3.0],
        };
        let s = from_increments(&inc).unwrap();
        assert_eq!(s.values(), &[10.0, 11.0, 13.0, 16.0]);
        assert_eq!(s.first_date(), day0());

        let empty = IncrementSeries {
            start: day0(),
            baseline: 0.0,
            deltas: vec![],
        };
        assert_eq!(from_increments(&empty).unwrap().values(), &[0.0]);
    }

    #[test]
    fn windows_examples() {
        let w = make_windows(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(
            w,
            vec![
                Window { inputs: vec![1.0, 2.0], target: 3.0 },
                Window { inputs: vec![2.0, 3.0], target: 4.0 },
            ]
        );
        assert!(matches!(
            make_windows(&[1.0, 2.0], 2),
            Err(ForecastError::InsufficientData { .. })
        ));
        let long: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(make_windows(&long, 30).unwrap().len(), 70);
        assert!(make_windows(&long, 0).is_err());
    }

    #[test]
    fn series_validation() {
        let d = day0();
        let gap = TimeSeries::new(vec![d, next_day(d, 2).unwrap()], vec![1.0, 2.0]);
        assert!(matches!(gap, Err(ForecastError::InvalidSeries { index: 1, .. })));
        let back = TimeSeries::new(vec![next_day(d, 1).unwrap(), d], vec![1.0, 2.0]);
        assert!(matches!(back, Err(ForecastError::InvalidSeries { index: 1, .. })));
        assert!(TimeSeries::from_start(d, vec![1.0, -2.0]).is_err());
        assert!(TimeSeries::from_start(d, vec![1.0, f64::NAN]).is_err());
        assert_eq!(series(&[3.0, 2.0, 4.0, 1.0]).decreasing_steps(), vec![1, 3]);
    }

    #[test]
    fn json_round_trip() {
        let s = series(&[1.0, 2.5, 4.0]);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"2021-03-24\""));
        let back: TimeSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
