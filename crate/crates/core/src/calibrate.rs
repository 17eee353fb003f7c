//! Calibration/test partitioning and the exhaustive simplex grid search for
//! regime weights.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::decide::decide;
use crate::model::{
    regime_defaults, GroundTruth, ModelError, Partition, RegimeConfig, RegimeId, RegimeProfile, ScoreRecord, Weights,
};
use crate::par::Exec;
use crate::seed;

pub const CALIBRATION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrateError {
    #[error("no records to calibrate on")]
    Empty,
    #[error("need at least 2 distinct items to partition, found {0}")]
    TooFewItems(usize),
    #[error("ratio {0} outside (0, 1)")]
    Ratio(f64),
    #[error("resolution {0} does not divide 1")]
    Resolution(f64),
    #[error("record {0} is not tagged as calibration data; refusing to calibrate on it")]
    Leak(String),
    #[error("item {0} appears in both partitions")]
    Straddle(String),
    #[error("record {0} has no partition tag")]
    Untagged(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Calibration-side item ids: distinct ids sorted, shuffled with the seed,
/// first `round(ratio·n)` (kept within `[1, n−1]`).
pub fn calibration_ids<'a>(
    ids: impl IntoIterator<Item = &'a str>,
    ratio: f64,
    seed: u64,
) -> Result<BTreeSet<String>, CalibrateError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CalibrateError::Ratio(ratio));
    }
    let distinct: BTreeSet<&str> = ids.into_iter().collect();
    let n = distinct.len();
    if n < 2 {
        return Err(CalibrateError::TooFewItems(n));
    }
    let mut order: Vec<&str> = distinct.into_iter().collect();
    order.shuffle(&mut seed::rng_for(seed, &["partition"]));
    let n_cal = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    Ok(order[..n_cal].iter().map(|s| s.to_string()).collect())
}

/// Item-level split: every variant of an item lands on the same side.
/// Records must not carry a partition tag yet.
pub fn partition(
    mut records: Vec<ScoreRecord>,
    ratio: f64,
    seed: u64,
) -> Result<(Vec<ScoreRecord>, Vec<ScoreRecord>), CalibrateError> {
    let cal = calibration_ids(records.iter().map(|r| r.item_id()), ratio, seed)?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for mut r in records.drain(..) {
        if cal.contains(r.item_id()) {
            r.assign_partition(Partition::Calibration)?;
            a.push(r);
        } else {
            r.assign_partition(Partition::Test)?;
            b.push(r);
        }
    }
    Ok((a, b))
}

/// As [`partition`], tagging in place and keeping record order.
pub fn assign_partitions(records: &mut [ScoreRecord], ratio: f64, seed: u64) -> Result<(), CalibrateError> {
    let cal = calibration_ids(records.iter().map(|r| r.item_id()), ratio, seed)?;
    for r in records.iter_mut() {
        let side = if cal.contains(r.item_id()) { Partition::Calibration } else { Partition::Test };
        r.assign_partition(side)?;
    }
    Ok(())
}

/// Every record is tagged and no item id has variants on both sides.
pub fn check_partitions(records: &[ScoreRecord]) -> Result<(), CalibrateError> {
    let mut side: BTreeMap<&str, Partition> = BTreeMap::new();
    for r in records {
        let p = r.partition().ok_or_else(|| CalibrateError::Untagged(r.item_id().to_string()))?;
        if *side.entry(r.item_id()).or_insert(p) != p {
            return Err(CalibrateError::Straddle(r.item_id().to_string()));
        }
    }
    Ok(())
}

/// Grid points of the 3-simplex at `resolution`, ordered lexicographically
/// by `(w_σ, w_ω)` ascending, so `(0, 0, 1)` comes first.
pub fn enumerate_simplex(resolution: f64) -> Result<Vec<Weights>, CalibrateError> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(CalibrateError::Resolution(resolution));
    }
    let k = (1.0 / resolution).round();
    if (k * resolution - 1.0).abs() > 1e-9 {
        return Err(CalibrateError::Resolution(resolution));
    }
    let k = k as u32;
    let mut out = Vec::with_capacity(((k + 1) * (k + 2) / 2) as usize);
    for i in 0..=k {
        for j in 0..=(k - i) {
            let l = k - i - j;
            out.push(Weights::new(i as f64 / k as f64, j as f64 / k as f64, l as f64 / k as f64)?);
        }
    }
    Ok(out)
}

/// Mean decision cost above the per-record best achievable cost.
pub fn expected_regret(records: &[ScoreRecord], profile: &RegimeProfile) -> Result<f64, CalibrateError> {
    if records.is_empty() {
        return Err(CalibrateError::Empty);
    }
    let cells: Vec<_> = records.iter().map(|r| (r.unit_scores(), r.ground_truth())).collect();
    Ok(regret_of(&cells, profile))
}

fn regret_of(cells: &[(crate::model::UnitScores, GroundTruth)], profile: &RegimeProfile) -> f64 {
    let cost = profile.cost();
    let branch = profile.branch();
    let best = [
        cost.oracle_cost(branch, GroundTruth::SyntheticMarked),
        cost.oracle_cost(branch, GroundTruth::Natural),
    ];
    let total: f64 = cells
        .iter()
        .map(|(s, truth)| {
            let d = decide(s, profile).decision;
            cost.cost(d, *truth) - best[(*truth == GroundTruth::Natural) as usize]
        })
        .sum();
    total / cells.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub resolution: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { resolution: 0.05, seed: seed::DEFAULT_SEED, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub format_version: u32,
    pub regime: RegimeId,
    pub weights: Weights,
    pub regret: f64,
    pub resolution: f64,
    pub candidates: usize,
    /// Candidates whose regret equals the minimum.
    pub tied_candidates: usize,
    pub seed: u64,
    pub records: usize,
    /// Largest per-coordinate distance to the shipped default weights.
    pub distance_to_default: f64,
}

impl CalibrationResult {
    /// Within one grid step of the shipped default weights on every coordinate.
    pub fn within_one_step(&self) -> bool {
        self.distance_to_default <= self.resolution + 1e-9
    }
}

/// Exhaustive argmin of expected regret over the simplex grid, using the
/// profile's thresholds, prior and cost matrix. Ties go to the first
/// candidate in enumeration order.
pub fn calibrate_weights(
    records: &[ScoreRecord],
    profile: &RegimeProfile,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult, CalibrateError> {
    if records.is_empty() {
        return Err(CalibrateError::Empty);
    }
    if let Some(r) = records.iter().find(|r| r.partition() != Some(Partition::Calibration)) {
        return Err(CalibrateError::Leak(r.item_id().to_string()));
    }
    let grid = enumerate_simplex(opts.resolution)?;
    let cells: Vec<_> = records.iter().map(|r| (r.unit_scores(), r.ground_truth())).collect();
    let regrets = opts.exec.map_slice(&grid, |w| regret_of(&cells, &profile.with_weights(*w)));
    let mut best = 0;
    for (i, r) in regrets.iter().enumerate() {
        if *r < regrets[best] {
            best = i;
        }
    }
    let min = regrets[best];
    Ok(CalibrationResult {
        format_version: CALIBRATION_FORMAT_VERSION,
        regime: profile.regime(),
        weights: grid[best],
        regret: min,
        resolution: opts.resolution,
        candidates: grid.len(),
        tied_candidates: regrets.iter().filter(|r| **r == min).count(),
        seed: opts.seed,
        records: records.len(),
        distance_to_default: grid[best].max_abs_diff(&regime_defaults(profile.regime()).weights()),
    })
}

/// One independent calibration per regime, in the standard regime order.
pub fn calibrate_all(
    records: &[ScoreRecord],
    config: &RegimeConfig,
    opts: &CalibrationOptions,
) -> Result<BTreeMap<RegimeId, CalibrationResult>, CalibrateError> {
    RegimeId::ALL
        .iter()
        .map(|&id| Ok((id, calibrate_weights(records, &config.profile_or_default(id), opts)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostMatrix, Modality, Tier, UnitScores};

    fn record(id: &str, truth: GroundTruth, s: [f64; 3]) -> ScoreRecord {
        ScoreRecord::new(
            id,
            Modality::Image,
            "g",
            Tier::T0,
            None,
            truth,
            Default::default(),
            UnitScores::new(s[0], s[1], s[2]).unwrap(),
        )
        .unwrap()
    }

    fn tagged(mut r: ScoreRecord) -> ScoreRecord {
        r.assign_partition(Partition::Calibration).unwrap();
        r
    }

    #[test]
    fn simplex_sizes_and_order() {
        assert_eq!(enumerate_simplex(0.05).unwrap().len(), 231);
        assert_eq!(enumerate_simplex(0.5).unwrap().len(), 6);
        let unit = enumerate_simplex(1.0).unwrap();
        let arrays: Vec<_> = unit.iter().map(|w| w.as_array()).collect();
        assert_eq!(arrays, vec![[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]);
        assert!(enumerate_simplex(0.3).is_err());
        assert!(enumerate_simplex(0.0).is_err());
    }

    #[test]
    fn partition_examples() {
        let recs: Vec<_> = (0..10).map(|i| record(&format!("i{i}"), GroundTruth::Natural, [0.0; 3])).collect();
        let (a1, b1) = partition(recs.clone(), 0.8, 5).unwrap();
        let (a2, b2) = partition(recs.clone(), 0.8, 5).unwrap();
        assert_eq!((a1.len(), b1.len()), (8, 2));
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);

        let two = recs[..2].to_vec();
        let (a, b) = partition(two, 0.8, 1).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));

        assert_eq!(partition(recs[..1].to_vec(), 0.8, 1).unwrap_err(), CalibrateError::TooFewItems(1));
        let (tagged_a, _) = partition(recs, 0.5, 1).unwrap();
        assert!(matches!(partition(tagged_a, 0.5, 1), Err(CalibrateError::Model(_))));
    }

    #[test]
    fn in_place_tagging_matches_split_and_is_guarded() {
        let recs: Vec<_> = (0..20).map(|i| record(&format!("i{i}"), GroundTruth::Natural, [0.0; 3])).collect();
        let (cal, _) = partition(recs.clone(), 0.8, 3).unwrap();
        let mut tagged = recs.clone();
        assert_eq!(check_partitions(&tagged), Err(CalibrateError::Untagged("i0".into())));
        assign_partitions(&mut tagged, 0.8, 3).unwrap();
        assert_eq!(tagged.iter().map(|r| r.item_id()).collect::<Vec<_>>(), recs.iter().map(|r| r.item_id()).collect::<Vec<_>>());
        let in_cal: Vec<_> = tagged.iter().filter(|r| r.partition() == Some(Partition::Calibration)).cloned().collect();
        assert_eq!(in_cal, cal);
        check_partitions(&tagged).unwrap();

        let mut other = recs[0].clone();
        let side = tagged[0].partition().unwrap();
        other.assign_partition(if side == Partition::Test { Partition::Calibration } else { Partition::Test }).unwrap();
        tagged.push(other);
        assert_eq!(check_partitions(&tagged), Err(CalibrateError::Straddle("i0".into())));
    }

    #[test]
    fn regret_examples() {
        let p = regime_defaults(RegimeId::Product);
        let right = [record("a", GroundTruth::SyntheticMarked, [1.0; 3]), record("b", GroundTruth::Natural, [0.0; 3])];
        assert_eq!(expected_regret(&right, &p).unwrap(), 0.0);

        let only = Weights::new(1.0, 0.0, 0.0).unwrap();
        let odd = CostMatrix::new(
            crate::model::DecisionCosts::new(1.0, 0.0),
            crate::model::DecisionCosts::ZERO,
            crate::model::DecisionCosts::ZERO,
        )
        .unwrap();
        let accepted = [record("a", GroundTruth::SyntheticMarked, [1.0, 0.0, 0.0])];
        let q = p.with_weights(only).with_cost(odd);
        assert_eq!(expected_regret(&accepted, &q).unwrap(), 1.0);

        let mixed = [record("a", GroundTruth::SyntheticMarked, [0.1; 3]), record("b", GroundTruth::Natural, [1.0; 3])];
        let r1 = expected_regret(&mixed, &p).unwrap();
        let r2 = expected_regret(&mixed, &p.with_cost(p.cost().scaled(2.0).unwrap())).unwrap();
        assert!((r2 - 2.0 * r1).abs() < 1e-12);
        assert_eq!(expected_regret(&[], &p), Err(CalibrateError::Empty));
    }

    #[test]
    fn leakage_is_refused() {
        let p = regime_defaults(RegimeId::Product);
        let untagged = [record("a", GroundTruth::Natural, [0.0; 3])];
        assert!(matches!(
            calibrate_weights(&untagged, &p, &CalibrationOptions::default()),
            Err(CalibrateError::Leak(_))
        ));
        let mut t = record("b", GroundTruth::Natural, [0.0; 3]);
        t.assign_partition(Partition::Test).unwrap();
        assert_eq!(
            calibrate_weights(&[t], &p, &CalibrationOptions::default()),
            Err(CalibrateError::Leak("b".into()))
        );
    }

    #[test]
    fn zero_costs_pick_the_first_candidate() {
        let p = regime_defaults(RegimeId::Product).with_cost(CostMatrix::zero());
        let recs = [tagged(record("a", GroundTruth::Natural, [0.3, 0.2, 0.1]))];
        let r = calibrate_weights(&recs, &p, &CalibrationOptions::default()).unwrap();
        assert_eq!(r.weights.as_array(), [0.0, 0.0, 1.0]);
        assert_eq!(r.regret, 0.0);
        assert_eq!(r.tied_candidates, 231);
    }
}
