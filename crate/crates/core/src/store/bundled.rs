//! The two published example districts and the synthetic national series.

use crate::ahp::JudgmentMatrix;
use crate::allocation::{Criterion, PenaltyBase, TierFeatures, TierTriple, DEFAULT_PENALTY_RATE};
use crate::forecast::synthetic;

use super::dataset::{Dataset, DatasetPayload, FeatureTable};
use super::scenario::{Scenario, WeightSource};
use crate::diagnostics::FeatureColumn;

pub const SYNTHETIC_DATASET_ID: &str = "synthetic";

/// Pairwise judgments over NoR, TC, NoS, Cost as published, including the
/// off-scale entries 22 and 6.024.
pub fn published_matrix() -> JudgmentMatrix {
    JudgmentMatrix::with_criteria(
        Criterion::labels(),
        vec![
            vec![1.0, 0.333, 22.0, 8.0],
            vec![3.0, 1.0, 5.0, 6.024],
            vec![0.5, 0.2, 1.0, 8.0],
            vec![0.125, 0.166, 0.125, 1.0],
        ],
    )
    .expect("published matrix is structurally valid")
}

fn features(rows: [[f64; 4]; 3]) -> TierTriple<TierFeatures> {
    TierTriple::from_array(rows.map(|[nor, tc, nos, cost]| {
        TierFeatures::new(nor, tc, nos, cost).expect("bundled features are finite")
    }))
}

const GONGSHU: [[f64; 4]; 3] = [
    [2.041, 0.3, 2.049, 0.3],
    [2.014, 0.5, 1.729, 0.2],
    [1.513, 0.6, 0.853, 0.1],
];

const DAOLI: [[f64; 4]; 3] = [
    [2.040, 0.3, 2.545, 0.9],
    [1.938, 0.6, 0.992, 0.6],
    [1.510, 0.8, 0.437, 0.1],
];

fn scenario(id: &str, district: &str, rows: [[f64; 4]; 3]) -> Scenario {
    Scenario {
        id: id.to_string(),
        district: district.to_string(),
        weights: WeightSource::Matrix(published_matrix()),
        tiers: features(rows),
        penalty_rate: DEFAULT_PENALTY_RATE,
        penalty_base: PenaltyBase::LogScore,
        dataset_id: Some(SYNTHETIC_DATASET_ID.to_string()),
        created_at: None,
        modified_at: None,
    }
}

/// Read-only example scenarios: `gongshu` (Hangzhou) and `daoli` (Harbin).
pub fn bundled_examples() -> Vec<Scenario> {
    vec![
        scenario("gongshu", "Gongshu District, Hangzhou", GONGSHU),
        scenario("daoli", "Daoli District, Harbin", DAOLI),
    ]
}

fn tier_table(rows: [[f64; 4]; 3]) -> FeatureTable {
    let columns = Criterion::ALL
        .iter()
        .enumerate()
        .map(|(c, k)| {
            FeatureColumn::new(k.label(), rows.iter().map(|r| r[c]).collect())
                .expect("bundled features are finite")
        })
        .collect();
    FeatureTable::new(
        ["CenH", "ComH", "HC"].map(String::from).to_vec(),
        columns,
    )
    .expect("bundled table is valid")
}

/// Read-only datasets: the synthetic national series and both districts'
/// tier feature tables.
pub fn bundled_datasets() -> Vec<Dataset> {
    let mk = |id: &str, p| Dataset::new(id, p).expect("bundled ids are valid");
    vec![
        mk(SYNTHETIC_DATASET_ID, DatasetPayload::TimeSeries(synthetic::national_series())),
        mk("gongshu-tiers", DatasetPayload::FeatureTable(tier_table(GONGSHU))),
        mk("daoli-tiers", DatasetPayload::FeatureTable(tier_table(DAOLI))),
    ]
}
