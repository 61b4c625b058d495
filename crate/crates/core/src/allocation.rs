//! Tier scoring and allocation ratios.
//!
//! Each facility tier is scored as the dot product of the criterion weights
//! with its four feature values. The central-hospital score is then reduced
//! by `rate · NoR` to discourage crowding, and the three scores are turned
//! into tenths that add up to exactly 10 by largest-remainder rounding.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::WeightVector;

pub const DEFAULT_PENALTY_RATE: f64 = 0.1;

/// Total number of tenths handed out by [`ratio_normalize`].
pub const RATIO_TENTHS: u32 = 100;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AllocationError {
    #[error("criterion alignment: {0}")]
    Alignment(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("all tier indices are zero or negative; nothing to apportion")]
    Degenerate,
}

/// Scoring criteria in weight order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// Nearby residents (log10 score).
    NoR,
    /// Transportation convenience.
    TC,
    /// Medical staff.
    NoS,
    /// Vaccine storage and transportation cost.
    Cost,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::NoR, Criterion::TC, Criterion::NoS, Criterion::Cost];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::NoR => "NoR",
            Criterion::TC => "TC",
            Criterion::NoS => "NoS",
            Criterion::Cost => "Cost",
        }
    }

    pub fn labels() -> Vec<String> {
        Self::ALL.iter().map(|c| c.label().to_string()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TierKind {
    #[serde(rename = "CenH")]
    CentralHospital,
    #[serde(rename = "ComH")]
    CommunityHospital,
    #[serde(rename = "HC")]
    HealthCenter,
}

impl TierKind {
    /// Also the tie-break order for rounding.
    pub const ALL: [TierKind; 3] = [
        TierKind::CentralHospital,
        TierKind::CommunityHospital,
        TierKind::HealthCenter,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TierKind::CentralHospital => "CenH",
            TierKind::CommunityHospital => "ComH",
            TierKind::HealthCenter => "HC",
        }
    }
}

impl fmt::Display for TierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One value per tier, serialized as `{"CenH": .., "ComH": .., "HC": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierTriple<T> {
    #[serde(rename = "CenH")]
    pub central: T,
    #[serde(rename = "ComH")]
    pub community: T,
    #[serde(rename = "HC")]
    pub health_center: T,
}

impl<T> TierTriple<T> {
    pub fn from_array([central, community, health_center]: [T; 3]) -> Self {
        Self {
            central,
            community,
            health_center,
        }
    }

    pub fn into_array(self) -> [T; 3] {
        [self.central, self.community, self.health_center]
    }

    pub fn get(&self, kind: TierKind) -> &T {
        match kind {
            TierKind::CentralHospital => &self.central,
            TierKind::CommunityHospital => &self.community,
            TierKind::HealthCenter => &self.health_center,
        }
    }

    pub fn get_mut(&mut self, kind: TierKind) -> &mut T {
        match kind {
            TierKind::CentralHospital => &mut self.central,
            TierKind::CommunityHospital => &mut self.community,
            TierKind::HealthCenter => &mut self.health_center,
        }
    }

    pub fn map<U>(self, mut f: impl FnMut(TierKind, T) -> U) -> TierTriple<U> {
        TierTriple {
            central: f(TierKind::CentralHospital, self.central),
            community: f(TierKind::CommunityHospital, self.community),
            health_center: f(TierKind::HealthCenter, self.health_center),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (TierKind, &T)> {
        TierKind::ALL.into_iter().map(move |k| (k, self.get(k)))
    }
}

/// Criterion values of one tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierFeatures {
    #[serde(rename = "NoR")]
    pub nor: f64,
    #[serde(rename = "TC")]
    pub tc: f64,
    #[serde(rename = "NoS")]
    pub nos: f64,
    #[serde(rename = "Cost")]
    pub cost: f64,
}

impl TierFeatures {
    pub fn new(nor: f64, tc: f64, nos: f64, cost: f64) -> Result<Self, AllocationError> {
        let f = Self { nor, tc, nos, cost };
        f.validate()?;
        Ok(f)
    }

    /// Requires exactly the four criteria, by label.
    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self, AllocationError> {
        let get = |c: Criterion| {
            map.get(c.label())
                .copied()
                .ok_or_else(|| AllocationError::Alignment(format!("missing criterion {}", c.label())))
        };
        if let Some(extra) = map
            .keys()
            .find(|k| !Criterion::ALL.iter().any(|c| c.label() == k.as_str()))
        {
            return Err(AllocationError::Alignment(format!("unknown criterion {extra}")));
        }
        Self::new(
            get(Criterion::NoR)?,
            get(Criterion::TC)?,
            get(Criterion::NoS)?,
            get(Criterion::Cost)?,
        )
    }

    pub fn validate(&self) -> Result<(), AllocationError> {
        for (c, v) in Criterion::ALL.iter().zip(self.as_array()) {
            if !v.is_finite() {
                return Err(AllocationError::InvalidInput(format!(
                    "{} is not finite",
                    c.label()
                )));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.nor, self.tc, self.nos, self.cost]
    }

    pub fn get(&self, c: Criterion) -> f64 {
        match c {
            Criterion::NoR => self.nor,
            Criterion::TC => self.tc,
            Criterion::NoS => self.nos,
            Criterion::Cost => self.cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacilityTier {
    pub kind: TierKind,
    pub features: TierFeatures,
}

pub type DistrictTiers = TierTriple<TierFeatures>;

impl DistrictTiers {
    pub fn tier(&self, kind: TierKind) -> FacilityTier {
        FacilityTier {
            kind,
            features: *self.get(kind),
        }
    }

    pub fn validate(&self) -> Result<(), AllocationError> {
        for (kind, f) in self.iter() {
            f.validate()
                .map_err(|e| AllocationError::InvalidInput(format!("{kind}: {e}")))?;
        }
        Ok(())
    }
}

/// Non-negative weights in `[NoR, TC, NoS, Cost]` order.
///
/// Unlike [`WeightVector`] these need not sum to one: allocation ratios are
/// invariant to a common scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CriterionWeights([f64; 4]);

impl CriterionWeights {
    pub fn new(weights: [f64; 4]) -> Result<Self, AllocationError> {
        if let Some((c, w)) = Criterion::ALL
            .iter()
            .zip(weights)
            .find(|(_, w)| !w.is_finite() || *w < 0.0)
        {
            return Err(AllocationError::InvalidInput(format!(
                "weight for {} is {w}",
                c.label()
            )));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(AllocationError::InvalidInput("all weights are zero".into()));
        }
        Ok(Self(weights))
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }
}

impl TryFrom<&[f64]> for CriterionWeights {
    type Error = AllocationError;

    fn try_from(w: &[f64]) -> Result<Self, Self::Error> {
        let arr: [f64; 4] = w.try_into().map_err(|_| {
            AllocationError::Alignment(format!(
                "expected 4 weights in order NoR, TC, NoS, Cost; got {}",
                w.len()
            ))
        })?;
        Self::new(arr)
    }
}

impl TryFrom<Vec<f64>> for CriterionWeights {
    type Error = AllocationError;

    fn try_from(w: Vec<f64>) -> Result<Self, Self::Error> {
        Self::try_from(w.as_slice())
    }
}

impl From<CriterionWeights> for Vec<f64> {
    fn from(w: CriterionWeights) -> Self {
        w.0.to_vec()
    }
}

impl TryFrom<&WeightVector> for CriterionWeights {
    type Error = AllocationError;

    fn try_from(w: &WeightVector) -> Result<Self, Self::Error> {
        Self::try_from(w.as_slice())
    }
}

/// Which resident quantity the crowd-gathering penalty is proportional to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyBase {
    /// The NoR feature as stored (log10 scale).
    #[default]
    LogScore,
    /// 10^NoR, i.e. the resident count before the log transform.
    RawResidents,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AllocationOptions {
    pub penalty_rate: f64,
    pub penalty_base: PenaltyBase,
    /// Score Cost with a negative sign. Off by default.
    pub invert_cost: bool,
}

impl Default for AllocationOptions {
    fn default() -> Self {
        Self {
            penalty_rate: DEFAULT_PENALTY_RATE,
            penalty_base: PenaltyBase::LogScore,
            invert_cost: false,
        }
    }
}

/// Weighted sum of the tier's criterion values.
pub fn score_tier(weights: &CriterionWeights, tier: &FacilityTier) -> f64 {
    weights
        .as_array()
        .iter()
        .zip(tier.features.as_array())
        .map(|(w, f)| w * f)
        .sum()
}

fn score_tier_with(weights: &CriterionWeights, tier: &FacilityTier, invert_cost: bool) -> f64 {
    if invert_cost {
        let mut t = *tier;
        t.features.cost = -t.features.cost;
        score_tier(weights, &t)
    } else {
        score_tier(weights, tier)
    }
}

/// Subtracts `rate · NoR` from central-hospital indices; other tiers pass
/// through unchanged. The result may be negative.
pub fn apply_gathering_penalty(
    index: f64,
    tier: &FacilityTier,
    rate: f64,
    base: PenaltyBase,
) -> Result<f64, AllocationError> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(AllocationError::InvalidInput(format!(
            "penalty rate must be a non-negative number, got {rate}"
        )));
    }
    if tier.kind != TierKind::CentralHospital {
        return Ok(index);
    }
    let residents = match base {
        PenaltyBase::LogScore => tier.features.nor,
        PenaltyBase::RawResidents => 10f64.powf(tier.features.nor),
    };
    Ok(index - rate * residents)
}

/// Largest-remainder apportionment of ten units in tenths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub tenths: TierTriple<u32>,
    /// Tiers whose negative index was clamped to zero.
    pub clamped: Vec<TierKind>,
}

impl Ratio {
    pub fn values(&self) -> TierTriple<f64> {
        self.tenths.map(|_, t| f64::from(t) / 10.0)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.tenths;
        write!(
            f,
            "{}.{}:{}.{}:{}.{}",
            t.central / 10,
            t.central % 10,
            t.community / 10,
            t.community % 10,
            t.health_center / 10,
            t.health_center % 10
        )
    }
}

// Shares this close to a whole tenth are snapped to it so that harmless
// rescaling cannot move a share across a floor boundary.
const SNAP: f64 = 1e-9;

/// Ratios 10·index/Σindex rounded to tenths that sum to exactly 10.
///
/// Negative indices are clamped to zero first. Remainders are ranked
/// largest first, ties going to the earlier tier in CenH, ComH, HC order.
pub fn ratio_normalize(indices: TierTriple<f64>) -> Result<Ratio, AllocationError> {
    if let Some((k, v)) = indices.iter().find(|(_, v)| !v.is_finite()) {
        return Err(AllocationError::InvalidInput(format!("{k} index is {v}")));
    }
    let mut clamped = Vec::new();
    let values = indices.map(|k, v| {
        if v < 0.0 {
            clamped.push(k);
            0.0
        } else {
            v
        }
    });
    let sum: f64 = values.into_array().iter().sum();
    if sum <= 0.0 {
        return Err(AllocationError::Degenerate);
    }

    let shares = values.map(|_, v| {
        let s = f64::from(RATIO_TENTHS) * v / sum;
        let r = s.round();
        if (s - r).abs() <= SNAP * f64::from(RATIO_TENTHS) {
            r
        } else {
            s
        }
    });
    let mut tenths = shares.map(|_, s| s.floor() as u32);
    let assigned: u32 = tenths.into_array().iter().sum();
    let mut order: Vec<(TierKind, f64)> = shares.iter().map(|(k, s)| (k, s - s.floor())).collect();
    // stable sort keeps tier order among equal remainders
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (kind, _) in order.into_iter().take(RATIO_TENTHS.saturating_sub(assigned) as usize) {
        *tenths.get_mut(kind) += 1;
    }
    Ok(Ratio { tenths, clamped })
}

/// Full audit trail of one district allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub weights: CriterionWeights,
    pub options: AllocationOptions,
    pub raw_index: TierTriple<f64>,
    pub penalized_index: TierTriple<f64>,
    /// One-decimal ratios; always sum to 10.
    pub ratio: TierTriple<f64>,
    pub ratio_tenths: TierTriple<u32>,
    /// e.g. `"3.0:3.9:3.1"`
    pub ratio_text: String,
    /// Tiers whose penalized index went negative and was clamped at the ratio stage.
    pub negative_penalized: Vec<TierKind>,
}

/// score → penalty → ratio for the three tiers of one district.
pub fn allocate_district(
    weights: &CriterionWeights,
    tiers: &DistrictTiers,
    options: &AllocationOptions,
) -> Result<AllocationResult, AllocationError> {
    tiers.validate()?;
    let raw_index = tiers.map(|k, f| {
        score_tier_with(
            weights,
            &FacilityTier { kind: k, features: f },
            options.invert_cost,
        )
    });
    let mut penalized = [0.0; 3];
    for (slot, kind) in penalized.iter_mut().zip(TierKind::ALL) {
        *slot = apply_gathering_penalty(
            *raw_index.get(kind),
            &tiers.tier(kind),
            options.penalty_rate,
            options.penalty_base,
        )?;
    }
    let penalized_index = TierTriple::from_array(penalized);
    let ratio = ratio_normalize(penalized_index)?;
    Ok(AllocationResult {
        weights: *weights,
        options: *options,
        raw_index,
        penalized_index,
        ratio: ratio.values(),
        ratio_tenths: ratio.tenths,
        ratio_text: ratio.to_string(),
        negative_penalized: ratio.clamped,
    })
}
