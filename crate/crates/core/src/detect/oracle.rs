use std::collections::BTreeMap;
use std::fmt;

use rand::distributions::Open01;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::DetectError;
use crate::model::{Modality, Tier};
use crate::seed;

pub const SHIPPED_DETECTORS_TOML: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/detectors.toml"));

/// Targets are clamped to `[TPR_CLAMP, 1 - TPR_CLAMP]` before the quantile.
pub const TPR_CLAMP: f64 = 1e-6;

pub const DEFAULT_COUPLING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum SchemeId {
    StableSignature,
    TreeRing,
    GaussianShading,
    FusedWatermark,
    Custom(String),
}

impl SchemeId {
    pub fn as_str(&self) -> &str {
        match self {
            SchemeId::StableSignature => "stable-signature",
            SchemeId::TreeRing => "tree-ring",
            SchemeId::GaussianShading => "gaussian-shading",
            SchemeId::FusedWatermark => "fused-watermark",
            SchemeId::Custom(s) => s,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            SchemeId::StableSignature => "Stable Signature",
            SchemeId::TreeRing => "Tree Ring",
            SchemeId::GaussianShading => "Gaussian Shading",
            SchemeId::FusedWatermark => "Fused watermark",
            SchemeId::Custom(s) => s,
        }
    }
}

impl From<String> for SchemeId {
    fn from(s: String) -> Self {
        match s.as_str() {
            "stable-signature" => SchemeId::StableSignature,
            "tree-ring" => SchemeId::TreeRing,
            "gaussian-shading" => SchemeId::GaussianShading,
            "fused-watermark" => SchemeId::FusedWatermark,
            _ => SchemeId::Custom(s),
        }
    }
}

impl From<SchemeId> for String {
    fn from(s: SchemeId) -> Self {
        s.as_str().to_string()
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-tier TPR targets of one watermark scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct DetectorSpec {
    scheme: SchemeId,
    target_fpr: f64,
    tpr: [f64; 5],
    spread: [f64; 5],
    modality: BTreeMap<Modality, [f64; 5]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    scheme: SchemeId,
    #[serde(default)]
    target_fpr: Option<f64>,
    tpr: [f64; 5],
    #[serde(default)]
    spread: Option<[f64; 5]>,
    #[serde(default)]
    modality: BTreeMap<Modality, [f64; 5]>,
}

impl TryFrom<RawSpec> for DetectorSpec {
    type Error = DetectError;

    fn try_from(r: RawSpec) -> Result<Self, Self::Error> {
        let mut spec = DetectorSpec::new(r.scheme, r.tpr, r.target_fpr.unwrap_or(super::DEFAULT_FPR))?;
        if let Some(s) = r.spread {
            spec = spec.with_spread(s)?;
        }
        for (m, t) in r.modality {
            spec = spec.with_modality(m, t)?;
        }
        Ok(spec)
    }
}

impl From<DetectorSpec> for RawSpec {
    fn from(s: DetectorSpec) -> Self {
        RawSpec {
            scheme: s.scheme,
            target_fpr: Some(s.target_fpr),
            tpr: s.tpr,
            spread: Some(s.spread),
            modality: s.modality,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum OracleStatus {
    Exact,
    /// The target was 0 or 1 and has been moved inside the open interval.
    Clamped { target: f64, used: f64 },
}

impl DetectorSpec {
    pub fn new(scheme: SchemeId, tpr: [f64; 5], target_fpr: f64) -> Result<Self, DetectError> {
        let bad = |reason: String| DetectError::Spec { scheme: scheme.to_string(), reason };
        if !(target_fpr > 0.0 && target_fpr < 0.5) {
            return Err(bad(format!("target FPR {target_fpr} outside (0, 0.5)")));
        }
        check_targets(&tpr).map_err(bad)?;
        Ok(DetectorSpec { scheme, target_fpr, tpr, spread: [1.0; 5], modality: BTreeMap::new() })
    }

    /// Standard deviation of the positive score at each tier.
    pub fn with_spread(mut self, spread: [f64; 5]) -> Result<Self, DetectError> {
        if let Some(s) = spread.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(DetectError::Spec { scheme: self.scheme.to_string(), reason: format!("spread {s} must be positive") });
        }
        self.spread = spread;
        Ok(self)
    }

    /// Modality-specific targets, used when sampling one modality.
    pub fn with_modality(mut self, modality: Modality, tpr: [f64; 5]) -> Result<Self, DetectError> {
        check_targets(&tpr).map_err(|reason| DetectError::Spec { scheme: self.scheme.to_string(), reason })?;
        self.modality.insert(modality, tpr);
        Ok(self)
    }

    pub fn scheme(&self) -> &SchemeId {
        &self.scheme
    }

    pub fn target_fpr(&self) -> f64 {
        self.target_fpr
    }

    pub fn tpr_row(&self) -> [f64; 5] {
        self.tpr
    }

    pub fn spread(&self, tier: Tier) -> Result<f64, DetectError> {
        quantitative(tier)?;
        Ok(self.spread[tier.index()])
    }

    pub fn modality_rows(&self) -> &BTreeMap<Modality, [f64; 5]> {
        &self.modality
    }

    pub fn target(&self, tier: Tier, modality: Option<Modality>) -> Result<f64, DetectError> {
        quantitative(tier)?;
        let row = modality.and_then(|m| self.modality.get(&m)).unwrap_or(&self.tpr);
        Ok(row[tier.index()])
    }

    /// Mean of the positive score distribution at `tier`.
    pub fn mu(&self, tier: Tier, modality: Option<Modality>) -> Result<(f64, OracleStatus), DetectError> {
        let target = self.target(tier, modality)?;
        let used = target.clamp(TPR_CLAMP, 1.0 - TPR_CLAMP);
        let status = if used == target { OracleStatus::Exact } else { OracleStatus::Clamped { target, used } };
        let mu = probit(1.0 - self.target_fpr) + self.spread[tier.index()] * probit(used);
        Ok((mu, status))
    }

    /// True when targets never increase with tier.
    pub fn is_monotone(&self) -> bool {
        std::iter::once(&self.tpr).chain(self.modality.values()).all(|r| r.windows(2).all(|w| w[1] <= w[0]))
    }
}

fn check_targets(tpr: &[f64; 5]) -> Result<(), String> {
    match tpr.iter().find(|t| !(t.is_finite() && (0.0..=1.0).contains(*t))) {
        Some(t) => Err(format!("TPR target {t} outside [0, 1]")),
        None => Ok(()),
    }
}

fn quantitative(tier: Tier) -> Result<(), DetectError> {
    if tier.is_quantitative() {
        Ok(())
    } else {
        Err(DetectError::Tier(tier.level()))
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Standard normal quantile.
pub(crate) fn probit(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// How populations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// One draw per equal-probability stratum (Latin hypercube in 1-D).
    #[default]
    Stratified,
    Iid,
}

/// `n` draws from N(mu, sd²), one per stratum `[k/n, (k+1)/n)`, ascending.
pub fn stratified_normal(n: usize, mu: f64, sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let z = std_normal();
    (0..n)
        .map(|k| {
            let u: f64 = rng.sample(Open01);
            mu + sd * z.inverse_cdf((k as f64 + u) / n as f64)
        })
        .collect()
}

fn iid_normal(n: usize, mu: f64, sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let z = std_normal();
    (0..n).map(|_| mu + sd * z.inverse_cdf(rng.sample(Open01))).collect()
}

fn draw(n: usize, mu: f64, sd: f64, rng: &mut ChaCha8Rng, sampling: Sampling) -> Vec<f64> {
    match sampling {
        Sampling::Stratified => {
            let mut v = stratified_normal(n, mu, sd, rng);
            v.shuffle(rng);
            v
        }
        Sampling::Iid => iid_normal(n, mu, sd, rng),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePopulation {
    pub scheme: SchemeId,
    pub tier: Tier,
    pub modality: Option<Modality>,
    pub seed: u64,
    pub positives: Vec<f64>,
    pub nulls: Vec<f64>,
    pub status: OracleStatus,
}

impl ScorePopulation {
    pub fn tpr_at_fpr(&self, fpr: f64) -> Result<f64, DetectError> {
        super::empirical_tpr_at_fpr(&self.positives, &self.nulls, fpr)
    }

    pub fn auc(&self) -> Result<f64, DetectError> {
        super::roc_auc(&self.positives, &self.nulls)
    }
}

fn cell_seed(base: u64, scheme: &SchemeId, tier: Tier, modality: Option<Modality>) -> u64 {
    let m = modality.map_or("all", |m| m.as_str());
    seed::derive(base, &[scheme.as_str(), &tier.to_string(), m])
}

/// Stratified population for one (scheme, tier) cell using the pooled targets.
pub fn synth_scores(
    spec: &DetectorSpec,
    tier: Tier,
    n_pos: usize,
    n_null: usize,
    seed: u64,
) -> Result<ScorePopulation, DetectError> {
    synth_scores_with(spec, tier, None, n_pos, n_null, seed, Sampling::Stratified)
}

pub fn synth_scores_with(
    spec: &DetectorSpec,
    tier: Tier,
    modality: Option<Modality>,
    n_pos: usize,
    n_null: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<ScorePopulation, DetectError> {
    if n_pos == 0 {
        return Err(DetectError::EmptyPositives);
    }
    if n_null == 0 {
        return Err(DetectError::EmptyNull);
    }
    let (mu, status) = spec.mu(tier, modality)?;
    let sd = spec.spread(tier)?;
    let cell = cell_seed(seed, spec.scheme(), tier, modality);
    let positives = draw(n_pos, mu, sd, &mut seed::rng_for(cell, &["positive"]), sampling);
    let nulls = draw(n_null, 0.0, 1.0, &mut seed::rng_for(cell, &["null"]), sampling);
    Ok(ScorePopulation { scheme: spec.scheme().clone(), tier, modality, seed, positives, nulls, status })
}

/// Positive scores for several schemes on the same `n` items. Each marginal
/// is stratified exactly as in [`synth_scores_with`]; the pairing across
/// schemes follows a Gaussian copula key with correlation `rho`, applied by
/// ranks so marginals are untouched.
pub fn synth_coupled(
    specs: &[DetectorSpec],
    tier: Tier,
    modality: Option<Modality>,
    n: usize,
    seed: u64,
    rho: f64,
) -> Result<Vec<(Vec<f64>, OracleStatus)>, DetectError> {
    if n == 0 {
        return Err(DetectError::EmptyPositives);
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(DetectError::Config(format!("coupling {rho} outside [0, 1]")));
    }
    let m = modality.map_or("all", |m| m.as_str());
    let z = std_normal();
    let mut key_rng = seed::rng_for(seed, &["coupling", &tier.to_string(), m]);
    let common: Vec<f64> = (0..n).map(|_| z.inverse_cdf(key_rng.sample(Open01))).collect();
    specs
        .iter()
        .map(|spec| {
            let (mu, status) = spec.mu(tier, modality)?;
            let cell = cell_seed(seed, spec.scheme(), tier, modality);
            let sorted = stratified_normal(n, mu, spec.spread(tier)?, &mut seed::rng_for(cell, &["positive"]));
            let mut own = seed::rng_for(cell, &["coupling-noise"]);
            let keys: Vec<f64> = common
                .iter()
                .map(|c| rho.sqrt() * c + (1.0 - rho).sqrt() * z.inverse_cdf(own.sample(Open01)))
                .collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
            let mut out = vec![0.0; n];
            for (rank, &item) in order.iter().enumerate() {
                out[item] = sorted[rank];
            }
            Ok((out, status))
        })
        .collect()
}

/// Outcome model for manifests on marked items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct C2paModel {
    pub corruption_rate: f64,
    pub strip_from_tier: u8,
}

impl Default for C2paModel {
    fn default() -> Self {
        C2paModel { corruption_rate: 0.0022, strip_from_tier: 2 }
    }
}

/// Contents of a detector config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSet {
    pub format_version: u32,
    #[serde(default = "default_fpr")]
    pub target_fpr: f64,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default)]
    pub c2pa: C2paModel,
    #[serde(rename = "detector")]
    pub detectors: Vec<DetectorSpec>,
}

fn default_fpr() -> f64 {
    super::DEFAULT_FPR
}

fn default_coupling() -> f64 {
    DEFAULT_COUPLING
}

impl DetectorSet {
    pub fn from_toml(text: &str) -> Result<Self, DetectError> {
        let set: DetectorSet = toml::from_str(text).map_err(|e| DetectError::Config(e.to_string()))?;
        if set.format_version != 1 {
            return Err(DetectError::Config(format!("unsupported format_version {}", set.format_version)));
        }
        if !(0.0..=1.0).contains(&set.coupling) {
            return Err(DetectError::Config(format!("coupling {} outside [0, 1]", set.coupling)));
        }
        if !(0.0..=1.0).contains(&set.c2pa.corruption_rate) {
            return Err(DetectError::Config("c2pa corruption_rate outside [0, 1]".into()));
        }
        if set.detectors.iter().any(|d| d.target_fpr() != set.target_fpr) {
            return Err(DetectError::Config("all detectors must share the set's target_fpr".into()));
        }
        if set.get(&SchemeId::FusedWatermark).is_none() {
            return Err(DetectError::Config("a `fused-watermark` detector is required".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &set.detectors {
            if !seen.insert(d.scheme().clone()) {
                return Err(DetectError::Config(format!("scheme {} listed twice", d.scheme())));
            }
        }
        Ok(set)
    }

    pub fn shipped() -> Self {
        DetectorSet::from_toml(SHIPPED_DETECTORS_TOML).expect("shipped detector config parses")
    }

    pub fn get(&self, scheme: &SchemeId) -> Option<&DetectorSpec> {
        self.detectors.iter().find(|d| d.scheme() == scheme)
    }

    pub fn fused(&self) -> &DetectorSpec {
        self.get(&SchemeId::FusedWatermark).expect("validated at load")
    }

    /// Individual watermark schemes, in file order.
    pub fn single_schemes(&self) -> impl Iterator<Item = &DetectorSpec> {
        self.detectors.iter().filter(|d| *d.scheme() != SchemeId::FusedWatermark)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gs() -> DetectorSpec {
        DetectorSet::shipped().get(&SchemeId::GaussianShading).unwrap().clone()
    }

    #[test]
    fn shipped_targets_are_the_published_rows() {
        let set = DetectorSet::shipped();
        assert_eq!(set.target_fpr, 1e-3);
        let row = |s: SchemeId| set.get(&s).unwrap().tpr_row();
        assert_eq!(row(SchemeId::StableSignature), [0.978, 0.961, 0.643, 0.389, 0.127]);
        assert_eq!(row(SchemeId::TreeRing), [0.973, 0.957, 0.718, 0.523, 0.089]);
        assert_eq!(row(SchemeId::GaussianShading), [0.993, 0.981, 0.862, 0.671, 0.243]);
        assert_eq!(row(SchemeId::FusedWatermark), [0.999, 0.997, 0.921, 0.784, 0.413]);
        assert!(set.detectors.iter().all(DetectorSpec::is_monotone));
        assert_eq!(set.c2pa.corruption_rate, 0.0022);
    }

    #[test]
    fn modality_rows_average_to_pooled_row() {
        let fused = DetectorSet::shipped().fused().clone();
        for t in Tier::QUANTITATIVE {
            let mean: f64 = Modality::ALL.iter().map(|&m| fused.target(t, Some(m)).unwrap()).sum::<f64>() / 3.0;
            assert!((mean - fused.target(t, None).unwrap()).abs() < 6e-4, "{t}: {mean}");
        }
    }

    #[test]
    fn mu_for_half_target_is_the_fpr_quantile() {
        let spec = DetectorSpec::new(SchemeId::Custom("x".into()), [0.5; 5], 1e-3).unwrap();
        let (mu, status) = spec.mu(Tier::T2, None).unwrap();
        assert!((mu - 3.090232306167813).abs() < 1e-9, "{mu}");
        assert_eq!(status, OracleStatus::Exact);
    }

    #[test]
    fn degenerate_targets_are_clamped() {
        let spec = DetectorSpec::new(SchemeId::Custom("c".into()), [1.0, 1.0, 0.0, 0.0, 0.0], 1e-3).unwrap();
        let (_, s) = spec.mu(Tier::T0, None).unwrap();
        assert_eq!(s, OracleStatus::Clamped { target: 1.0, used: 1.0 - TPR_CLAMP });
        let pop = synth_scores(&spec, Tier::T3, 100, 100, 1).unwrap();
        assert!(matches!(pop.status, OracleStatus::Clamped { .. }));
        assert!(pop.positives.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn gaussian_shading_tier2_hits_target() {
        let pop = synth_scores(&gs(), Tier::T2, 2000, 2000, seed::DEFAULT_SEED).unwrap();
        let tpr = pop.tpr_at_fpr(1e-3).unwrap();
        assert!((tpr - 0.862).abs() <= 0.03, "{tpr}");
    }

    #[test]
    fn same_seed_same_population() {
        let a = synth_scores(&gs(), Tier::T3, 500, 500, 9).unwrap();
        let b = synth_scores(&gs(), Tier::T3, 500, 500, 9).unwrap();
        assert_eq!(a, b);
        let c = synth_scores(&gs(), Tier::T3, 500, 500, 10).unwrap();
        assert_ne!(a.positives, c.positives);
    }

    #[test]
    fn bad_inputs() {
        assert!(synth_scores(&gs(), Tier::T5, 10, 10, 1).is_err());
        assert!(synth_scores(&gs(), Tier::T0, 0, 10, 1).is_err());
        assert!(DetectorSpec::new(SchemeId::TreeRing, [1.2, 0.0, 0.0, 0.0, 0.0], 1e-3).is_err());
        assert!(DetectorSpec::new(SchemeId::TreeRing, [0.5; 5], 0.5).is_err());
        assert!(gs().with_spread([1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn coupling_keeps_marginals() {
        let set = DetectorSet::shipped();
        let specs: Vec<_> = set.detectors.clone();
        let coupled = synth_coupled(&specs, Tier::T2, Some(Modality::Audio), 400, 3, 0.5).unwrap();
        for (spec, (scores, _)) in specs.iter().zip(&coupled) {
            let alone = synth_scores_with(spec, Tier::T2, Some(Modality::Audio), 400, 1, 3, Sampling::Stratified).unwrap();
            let mut a = alone.positives.clone();
            let mut b = scores.clone();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }
}
