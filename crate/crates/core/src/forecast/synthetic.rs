//! Deterministic stand-in data for demos and tests.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TimeSeries;

pub const NATIONAL_LEN: usize = 500;
const NATIONAL_SEED: u64 = 20210323;

/// A national-scale cumulative vaccination curve: 500 daily points from
/// 2021-03-23, a main campaign wave, a smaller booster wave, a weekly
/// rhythm and a little noise. Values are whole persons.
pub fn national_series() -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(NATIONAL_SEED);
    let start = NaiveDate::from_ymd_opt(2021, 3, 23).expect("valid date");
    let mut total = 8.0e7;
    let mut values = Vec::with_capacity(NATIONAL_LEN);
    values.push(total);
    for t in 1..NATIONAL_LEN {
        let t = t as f64;
        let main = 2.2e7 * (-((t - 120.0) / 70.0).powi(2)).exp();
        let booster = 6.0e6 * (-((t - 250.0) / 40.0).powi(2)).exp();
        let weekly = 1.0 + 0.08 * (2.0 * std::f64::consts::PI * t / 7.0).sin();
        let noise = 1.0 + rng.gen_range(-0.03..0.03);
        total += ((main + booster + 2.0e5) * weekly * noise).round();
        values.push(total);
    }
    TimeSeries::from_start(start, values).expect("generated series is valid")
}

/// Cumulative series whose increments follow `base + amp·sin(2πt/period)`.
pub fn sine_increment_series(len: usize, base: f64, amp: f64, period: f64) -> TimeSeries {
    let start = NaiveDate::from_ymd_opt(2022, 1, 1).expect("valid date");
    let mut total = 0.0;
    let values = (0..len)
        .map(|t| {
            if t > 0 {
                total += base + amp * (2.0 * std::f64::consts::PI * t as f64 / period).sin();
            }
            total
        })
        .collect();
    TimeSeries::from_start(start, values).expect("generated series is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn national_shape() {
        let s = national_series();
        assert_eq!(s.len(), NATIONAL_LEN);
        assert!(s.decreasing_steps().is_empty());
        assert!(s.values().iter().all(|v| v.fract() == 0.0));
        assert_eq!(s, national_series());
        assert!(s.last_value() > 2.0e9 && s.last_value() < 5.0e9, "{}", s.last_value());
    }

    #[test]
    fn sine_is_monotone_when_base_dominates() {
        let s = sine_increment_series(100, 10.0, 5.0, 20.0);
        assert!(s.decreasing_steps().is_empty());
        assert_eq!(s.values()[0], 0.0);
    }
}
