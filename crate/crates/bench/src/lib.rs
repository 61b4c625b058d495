//! Deterministic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use allocwise_core::ahp::JudgmentMatrix;
use allocwise_core::allocation::{CriterionWeights, DistrictTiers, TierFeatures, TierTriple};
use allocwise_core::forecast::{make_windows, synthetic::national_series, to_increments, LstmParameters, Window};

/// Positive reciprocal matrix of order `n` with judgments drawn from e^U(-2, 2).
#[allow(clippy::needless_range_loop)]
pub fn reciprocal_matrix(n: usize, seed: u64) -> JudgmentMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen_range(-2.0f64..2.0).exp();
            rows[i][j] = v;
            rows[j][i] = 1.0 / v;
        }
    }
    JudgmentMatrix::from_rows(rows).expect("square positive matrix")
}

pub fn district(seed: u64) -> (CriterionWeights, DistrictTiers) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tier = || TierFeatures::new(rng.gen_range(2.0..6.0), rng.gen(), rng.gen_range(0.0..3.0), rng.gen())
        .expect("finite");
    let tiers = TierTriple::from_array([tier(), tier(), tier()]);
    let weights = CriterionWeights::new([0.4, 0.3, 0.2, 0.1]).expect("valid weights");
    (weights, tiers)
}

/// Min-max scaled increments of the bundled series cut into windows.
pub fn national_windows(lookback: usize) -> Vec<Window> {
    let deltas = to_increments(&national_series()).expect("non-empty").deltas;
    let (lo, hi) = deltas.iter().fold((f64::MAX, f64::MIN), |(a, b), &d| (a.min(d), b.max(d)));
    let scaled: Vec<f64> = deltas.iter().map(|d| (d - lo) / (hi - lo)).collect();
    make_windows(&scaled, lookback).expect("series longer than lookback")
}

pub fn lstm(hidden_size: usize, seed: u64) -> LstmParameters {
    LstmParameters::init(hidden_size, &mut ChaCha8Rng::seed_from_u64(seed)).expect("positive size")
}
