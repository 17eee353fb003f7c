use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GroundTruth, ModelError};
use crate::canonical;
use crate::model::Decision;

/// Tolerance on `w_σ + w_ω + w_ζ = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

pub const SHIPPED_REGIMES_TOML: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/regimes.toml"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegimeId {
    #[serde(rename = "OPLAW-populated")]
    OplawPopulated,
    #[serde(rename = "OPLAW-uninhabited")]
    OplawUninhabited,
    #[serde(rename = "OPLAW-nonkinetic")]
    OplawNonkinetic,
    #[serde(rename = "DOMESTIC")]
    Domestic,
    #[serde(rename = "PRODUCT")]
    Product,
}

/// Which branch of the decision procedure a regime runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Posterior against τ; ACCEPT or DEFER.
    Oplaw,
    /// Likelihood ratio against Λ_min; ACCEPT or REJECT.
    Domestic,
    /// Combined score against τ; ACCEPT or REJECT.
    Product,
}

impl Branch {
    pub fn decisions(self) -> &'static [Decision] {
        match self {
            Branch::Oplaw => &[Decision::Accept, Decision::Defer],
            Branch::Domestic | Branch::Product => &[Decision::Accept, Decision::Reject],
        }
    }
}

impl RegimeId {
    pub const ALL: [RegimeId; 5] = [
        RegimeId::OplawPopulated,
        RegimeId::OplawUninhabited,
        RegimeId::OplawNonkinetic,
        RegimeId::Domestic,
        RegimeId::Product,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeId::OplawPopulated => "OPLAW-populated",
            RegimeId::OplawUninhabited => "OPLAW-uninhabited",
            RegimeId::OplawNonkinetic => "OPLAW-nonkinetic",
            RegimeId::Domestic => "DOMESTIC",
            RegimeId::Product => "PRODUCT",
        }
    }

    pub fn branch(self) -> Branch {
        match self {
            RegimeId::OplawPopulated | RegimeId::OplawUninhabited | RegimeId::OplawNonkinetic => Branch::Oplaw,
            RegimeId::Domestic => Branch::Domestic,
            RegimeId::Product => Branch::Product,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RegimeId::OplawPopulated => "Oplaw kinetic populated",
            RegimeId::OplawUninhabited => "Oplaw kinetic uninhabited",
            RegimeId::OplawNonkinetic => "Oplaw non kinetic",
            RegimeId::Domestic => "Domestic admissibility",
            RegimeId::Product => "Product reg persistence",
        }
    }
}

impl FromStr for RegimeId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegimeId::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::UnknownRegime(s.to_string()))
    }
}

impl fmt::Display for RegimeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Combiner weights `(w_σ, w_ω, w_ζ)` on the unit simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Weights {
    sigma: f64,
    omega: f64,
    zeta: f64,
}

impl Weights {
    /// Starting point of the weight search, also used for the regime-neutral
    /// combined row of the detection tables.
    pub const INITIAL: Weights = Weights { sigma: 0.5, omega: 0.3, zeta: 0.2 };

    pub fn new(sigma: f64, omega: f64, zeta: f64) -> Result<Self, ModelError> {
        let in_range = |w: f64| w.is_finite() && (0.0..=1.0).contains(&w);
        if !(in_range(sigma) && in_range(omega) && in_range(zeta))
            || ((sigma + omega + zeta) - 1.0).abs() > WEIGHT_SUM_TOLERANCE
        {
            return Err(ModelError::OffSimplex(sigma, omega, zeta));
        }
        Ok(Weights { sigma, omega, zeta })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sigma, self.omega, self.zeta]
    }

    /// Largest combined score reachable with these weights (all scores 1).
    pub fn ceiling(&self) -> f64 {
        1.0 - (1.0 - self.sigma) * (1.0 - self.omega) * (1.0 - self.zeta)
    }

    /// Largest per-coordinate distance to another weight vector.
    pub fn max_abs_diff(&self, other: &Weights) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<[f64; 3]> for Weights {
    type Error = ModelError;

    fn try_from(w: [f64; 3]) -> Result<Self, Self::Error> {
        Weights::new(w[0], w[1], w[2])
    }
}

impl From<Weights> for [f64; 3] {
    fn from(w: Weights) -> Self {
        w.as_array()
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.2}, {:.2}, {:.2})", self.sigma, self.omega, self.zeta)
    }
}

/// Costs of one decision under each ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionCosts {
    #[serde(rename = "synthetic-marked")]
    pub synthetic_marked: f64,
    pub natural: f64,
}

impl DecisionCosts {
    pub const ZERO: DecisionCosts = DecisionCosts { synthetic_marked: 0.0, natural: 0.0 };

    pub fn new(synthetic_marked: f64, natural: f64) -> Self {
        DecisionCosts { synthetic_marked, natural }
    }

    fn get(&self, truth: GroundTruth) -> f64 {
        match truth {
            GroundTruth::SyntheticMarked => self.synthetic_marked,
            GroundTruth::Natural => self.natural,
        }
    }
}

/// Cost of each (decision, ground truth) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCost", into = "RawCost")]
pub struct CostMatrix {
    accept: DecisionCosts,
    reject: DecisionCosts,
    defer: DecisionCosts,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    accept: DecisionCosts,
    reject: DecisionCosts,
    defer: DecisionCosts,
}

impl TryFrom<RawCost> for CostMatrix {
    type Error = ModelError;

    fn try_from(raw: RawCost) -> Result<Self, Self::Error> {
        CostMatrix::new(raw.accept, raw.reject, raw.defer)
    }
}

impl From<CostMatrix> for RawCost {
    fn from(c: CostMatrix) -> Self {
        RawCost { accept: c.accept, reject: c.reject, defer: c.defer }
    }
}

impl CostMatrix {
    pub fn new(accept: DecisionCosts, reject: DecisionCosts, defer: DecisionCosts) -> Result<Self, ModelError> {
        for (name, c) in [("accept", accept), ("reject", reject), ("defer", defer)] {
            for v in [c.synthetic_marked, c.natural] {
                if !v.is_finite() || v < 0.0 {
                    return Err(ModelError::Cost(format!("{name} entry {v} must be finite and nonnegative")));
                }
            }
        }
        Ok(CostMatrix { accept, reject, defer })
    }

    pub fn zero() -> Self {
        CostMatrix { accept: DecisionCosts::ZERO, reject: DecisionCosts::ZERO, defer: DecisionCosts::ZERO }
    }

    /// Zero-diagonal matrix: `false_accept` for ACCEPT of a natural item,
    /// `miss` for REJECT or DEFER of a synthetic-marked item.
    pub fn asymmetric(false_accept: f64, miss: f64) -> Result<Self, ModelError> {
        CostMatrix::new(
            DecisionCosts::new(0.0, false_accept),
            DecisionCosts::new(miss, 0.0),
            DecisionCosts::new(miss, 0.0),
        )
    }

    pub fn cost(&self, decision: Decision, truth: GroundTruth) -> f64 {
        match decision {
            Decision::Accept => self.accept.get(truth),
            Decision::Reject => self.reject.get(truth),
            Decision::Defer => self.defer.get(truth),
        }
    }

    pub fn scaled(&self, k: f64) -> Result<Self, ModelError> {
        let s = |c: DecisionCosts| DecisionCosts::new(c.synthetic_marked * k, c.natural * k);
        CostMatrix::new(s(self.accept), s(self.reject), s(self.defer))
    }

    /// Lowest cost achievable for `truth` among the decisions `branch` can emit.
    pub fn oracle_cost(&self, branch: Branch, truth: GroundTruth) -> f64 {
        branch
            .decisions()
            .iter()
            .map(|&d| self.cost(d, truth))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn default_for(regime: RegimeId) -> Self {
        let (false_accept, miss) = match regime {
            RegimeId::OplawPopulated => (10.0, 1.0),
            RegimeId::OplawUninhabited => (5.0, 1.0),
            RegimeId::OplawNonkinetic => (2.0, 1.0),
            RegimeId::Domestic => (1.0, 1.0),
            RegimeId::Product => (1.0, 3.0),
        };
        CostMatrix::asymmetric(false_accept, miss).expect("shipped costs are valid")
    }
}

/// Decision parameters of one regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct RegimeProfile {
    regime: RegimeId,
    weights: Weights,
    tau: f64,
    lambda_min: Option<f64>,
    prior: f64,
    cost: CostMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    id: RegimeId,
    weights: Option<Weights>,
    tau: Option<f64>,
    lambda_min: Option<f64>,
    prior: Option<f64>,
    cost: Option<CostMatrix>,
}

impl TryFrom<RawProfile> for RegimeProfile {
    type Error = ModelError;

    fn try_from(raw: RawProfile) -> Result<Self, Self::Error> {
        let base = regime_defaults(raw.id);
        let lambda_min = raw.lambda_min.or(base.lambda_min);
        let tau = match (raw.tau, raw.id.branch(), lambda_min) {
            (Some(t), _, _) => t,
            (None, Branch::Domestic, Some(l)) => l / (1.0 + l),
            (None, _, _) => base.tau,
        };
        RegimeProfile::new(
            raw.id,
            raw.weights.unwrap_or(base.weights),
            tau,
            lambda_min,
            raw.prior.unwrap_or(base.prior),
            raw.cost.unwrap_or(base.cost),
        )
    }
}

impl From<RegimeProfile> for RawProfile {
    fn from(p: RegimeProfile) -> Self {
        RawProfile {
            id: p.regime,
            weights: Some(p.weights),
            tau: Some(p.tau),
            lambda_min: p.lambda_min,
            prior: Some(p.prior),
            cost: Some(p.cost),
        }
    }
}

impl RegimeProfile {
    pub fn new(
        regime: RegimeId,
        weights: Weights,
        tau: f64,
        lambda_min: Option<f64>,
        prior: f64,
        cost: CostMatrix,
    ) -> Result<Self, ModelError> {
        let bad = |reason: String| ModelError::Profile { regime, reason };
        if !(tau > 0.0 && tau < 1.0) {
            return Err(bad(format!("tau {tau} outside (0, 1)")));
        }
        if !(prior > 0.0 && prior < 1.0) {
            return Err(bad(format!("prior {prior} outside (0, 1)")));
        }
        match (regime.branch(), lambda_min) {
            (Branch::Domestic, Some(l)) if l.is_finite() && l >= 1.0 => {}
            (Branch::Domestic, Some(l)) => return Err(bad(format!("lambda_min {l} must be >= 1"))),
            (Branch::Domestic, None) => return Err(bad("lambda_min is required".into())),
            (_, Some(_)) => return Err(bad("lambda_min applies to DOMESTIC only".into())),
            (_, None) => {}
        }
        Ok(RegimeProfile { regime, weights, tau, lambda_min, prior, cost })
    }

    pub fn regime(&self) -> RegimeId {
        self.regime
    }

    pub fn branch(&self) -> Branch {
        self.regime.branch()
    }

    pub fn weights(&self) -> Weights {
        self.weights
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lambda_min(&self) -> Option<f64> {
        self.lambda_min
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn with_weights(&self, weights: Weights) -> Self {
        RegimeProfile { weights, ..self.clone() }
    }

    pub fn with_prior(&self, prior: f64) -> Result<Self, ModelError> {
        RegimeProfile::new(self.regime, self.weights, self.tau, self.lambda_min, prior, self.cost)
    }

    pub fn with_cost(&self, cost: CostMatrix) -> Self {
        RegimeProfile { cost, ..self.clone() }
    }

    /// Sufficiency threshold on the probability scale: τ, or for DOMESTIC the
    /// probability whose odds equal Λ_min.
    pub fn sufficiency_threshold(&self) -> f64 {
        match (self.branch(), self.lambda_min) {
            (Branch::Domestic, Some(l)) => l / (1.0 + l),
            _ => self.tau,
        }
    }
}

/// Profile with the default thresholds and calibrated weights.
pub fn regime_defaults(regime: RegimeId) -> RegimeProfile {
    let (w, tau, lambda_min) = match regime {
        RegimeId::OplawPopulated => ([0.55, 0.25, 0.20], 0.95, None),
        RegimeId::OplawUninhabited => ([0.50, 0.30, 0.20], 0.85, None),
        RegimeId::OplawNonkinetic => ([0.45, 0.35, 0.20], 0.70, None),
        RegimeId::Domestic => ([0.60, 0.30, 0.10], 10.0 / 11.0, Some(10.0)),
        RegimeId::Product => ([0.35, 0.45, 0.20], 0.70, None),
    };
    RegimeProfile {
        regime,
        weights: Weights::new(w[0], w[1], w[2]).expect("shipped weights lie on the simplex"),
        tau,
        lambda_min,
        prior: 0.5,
        cost: CostMatrix::default_for(regime),
    }
}

/// Contents of a regime config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub format_version: u32,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(rename = "regime")]
    pub regimes: Vec<RegimeProfile>,
}

fn default_resolution() -> f64 {
    0.05
}

impl RegimeConfig {
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let cfg: RegimeConfig = toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        if cfg.format_version != 1 {
            return Err(ModelError::Config(format!("unsupported format_version {}", cfg.format_version)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &cfg.regimes {
            if !seen.insert(p.regime()) {
                return Err(ModelError::Config(format!("regime {} listed twice", p.regime())));
            }
        }
        Ok(cfg)
    }

    pub fn shipped() -> Self {
        RegimeConfig::from_toml(SHIPPED_REGIMES_TOML).expect("shipped regime config parses")
    }

    pub fn profile(&self, id: RegimeId) -> Option<&RegimeProfile> {
        self.regimes.iter().find(|p| p.regime() == id)
    }

    /// Profile from the file, falling back to the built-in defaults.
    pub fn profile_or_default(&self, id: RegimeId) -> RegimeProfile {
        self.profile(id).cloned().unwrap_or_else(|| regime_defaults(id))
    }

    /// SHA-256 over the canonical JSON encoding of the parsed config.
    pub fn canonical_hash(&self) -> Result<String, ModelError> {
        let text = canonical::to_canonical_string(self).map_err(|e| ModelError::Encoding(e.to_string()))?;
        Ok(canonical::sha256_hex(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_thresholds_and_weights() {
        let p = regime_defaults(RegimeId::OplawPopulated);
        assert_eq!(p.tau(), 0.95);
        assert_eq!(p.weights().as_array(), [0.55, 0.25, 0.20]);
        assert_eq!(regime_defaults(RegimeId::OplawUninhabited).tau(), 0.85);
        assert_eq!(regime_defaults(RegimeId::OplawNonkinetic).tau(), 0.70);

        let d = regime_defaults(RegimeId::Domestic);
        assert_eq!(d.lambda_min(), Some(10.0));
        assert_eq!(d.weights().as_array(), [0.60, 0.30, 0.10]);

        let pr = regime_defaults(RegimeId::Product);
        assert_eq!(pr.tau(), 0.70);
        assert_eq!(pr.weights().as_array(), [0.35, 0.45, 0.20]);
    }

    #[test]
    fn default_weights_sum_to_one() {
        for r in RegimeId::ALL {
            let w = regime_defaults(r).weights().as_array();
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOLERANCE, "{r}");
        }
    }

    #[test]
    fn shipped_file_equals_builtin_defaults() {
        let cfg = RegimeConfig::shipped();
        assert_eq!(cfg.resolution, 0.05);
        for r in RegimeId::ALL {
            assert_eq!(cfg.profile(r), Some(&regime_defaults(r)), "{r}");
        }
    }

    #[test]
    fn weights_off_simplex_rejected() {
        assert!(Weights::new(0.5, 0.5, 0.1).is_err());
        assert!(Weights::new(-0.1, 0.6, 0.5).is_err());
        assert!(Weights::new(f64::NAN, 0.5, 0.5).is_err());
        assert!(serde_json::from_str::<Weights>("[0.2,0.2,0.2]").is_err());
        assert!(Weights::new(1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn profile_validation() {
        let w = Weights::INITIAL;
        let c = CostMatrix::zero();
        assert!(RegimeProfile::new(RegimeId::Product, w, 1.0, None, 0.5, c).is_err());
        assert!(RegimeProfile::new(RegimeId::Product, w, 0.7, None, 0.0, c).is_err());
        assert!(RegimeProfile::new(RegimeId::Domestic, w, 0.9, None, 0.5, c).is_err());
        assert!(RegimeProfile::new(RegimeId::Domestic, w, 0.9, Some(0.5), 0.5, c).is_err());
        assert!(RegimeProfile::new(RegimeId::Product, w, 0.7, Some(10.0), 0.5, c).is_err());
    }

    #[test]
    fn partial_entries_fall_back_to_defaults() {
        let cfg = RegimeConfig::from_toml(
            "format_version = 1\n[[regime]]\nid = \"DOMESTIC\"\nlambda_min = 4.0\n",
        )
        .unwrap();
        let d = cfg.profile(RegimeId::Domestic).unwrap();
        assert_eq!(d.lambda_min(), Some(4.0));
        assert!((d.tau() - 0.8).abs() < 1e-15);
        assert_eq!(d.weights(), regime_defaults(RegimeId::Domestic).weights());
        assert_eq!(cfg.profile_or_default(RegimeId::Product), regime_defaults(RegimeId::Product));
    }

    #[test]
    fn duplicate_and_unknown_regimes_rejected() {
        let dup = "format_version = 1\n[[regime]]\nid = \"PRODUCT\"\n[[regime]]\nid = \"PRODUCT\"\n";
        assert!(RegimeConfig::from_toml(dup).is_err());
        let unknown = "format_version = 1\n[[regime]]\nid = \"MARTIAL\"\n";
        assert!(RegimeConfig::from_toml(unknown).is_err());
    }

    #[test]
    fn cost_matrix_rules() {
        let c = CostMatrix::default_for(RegimeId::OplawPopulated);
        assert_eq!(c.cost(Decision::Accept, GroundTruth::Natural), 10.0);
        assert_eq!(c.cost(Decision::Defer, GroundTruth::SyntheticMarked), 1.0);
        assert_eq!(c.cost(Decision::Accept, GroundTruth::SyntheticMarked), 0.0);
        assert_eq!(c.oracle_cost(Branch::Oplaw, GroundTruth::Natural), 0.0);
        let p = CostMatrix::default_for(RegimeId::Product);
        assert_eq!(p.cost(Decision::Reject, GroundTruth::SyntheticMarked), 3.0);
        assert!(CostMatrix::asymmetric(-1.0, 1.0).is_err());
        assert!(CostMatrix::asymmetric(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn regime_ids_parse() {
        for r in RegimeId::ALL {
            assert_eq!(r.as_str().parse::<RegimeId>().unwrap(), r);
        }
        assert!("OPLAW".parse::<RegimeId>().is_err());
    }
}
