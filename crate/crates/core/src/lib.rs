//! Multi-criteria resource-allocation planning.
//!
//! - [`ahp`]: criterion weights from pairwise judgments, with the CI/RI/CR test
//! - [`diagnostics`]: pairwise collinearity (VIF) and log10 preprocessing
//! - [`allocation`]: weighted tier scoring, crowd-gathering penalty, ratio rounding
//! - [`forecast`]: from-scratch LSTM trained on daily increments
//! - [`store`]: CSV ingestion and the JSON file store for scenarios and datasets

pub mod ahp;
pub mod allocation;
pub mod diagnostics;
pub mod forecast;
pub mod store;

pub use ahp::{analyze, AhpError, AhpSettings, Analysis, ConsistencyReport, JudgmentMatrix, WeightVector};
pub use allocation::{
    allocate_district, AllocationError, AllocationOptions, AllocationResult, CriterionWeights,
    DistrictTiers, FacilityTier, PenaltyBase, Ratio, TierFeatures, TierKind, TierTriple,
};
pub use diagnostics::{CollinearityReport, CollinearityVerdict, DiagnosticsError, FeatureColumn};
pub use forecast::{ForecastError, LstmParameters, ScalerSpec, SeriesModel, TimeSeries, TrainingConfig};
pub use store::{Dataset, DatasetKind, Scenario, Store, StoreError, WeightSource};
