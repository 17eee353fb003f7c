use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{Branch, ModelError, RegimeId};

pub const VERDICT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Accept,
    Reject,
    Defer,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Accept => "ACCEPT",
            Decision::Reject => "REJECT",
            Decision::Defer => "DEFER",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The branch-specific statistic compared against the regime threshold.
/// `None` in a likelihood ratio stands for +∞ (saturated combined score).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Statistic {
    Posterior(f64),
    LikelihoodRatio(Option<f64>),
    CombinedScore(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVerdict", into = "RawVerdict")]
pub struct Verdict {
    decision: Decision,
    regime: RegimeId,
    combined_score: f64,
    statistic: Statistic,
    threshold: f64,
    prior: Option<f64>,
    saturated: bool,
    ceiling: f64,
    proof_hash: String,
    timestamp: DateTime<Utc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerdict {
    format_version: u32,
    decision: Decision,
    regime: RegimeId,
    combined_score: f64,
    statistic: Statistic,
    threshold: f64,
    prior: Option<f64>,
    saturated: bool,
    ceiling: f64,
    proof_hash: String,
    timestamp: String,
}

impl TryFrom<RawVerdict> for Verdict {
    type Error = ModelError;

    fn try_from(r: RawVerdict) -> Result<Self, Self::Error> {
        if r.format_version != VERDICT_FORMAT_VERSION {
            return Err(ModelError::Config(format!("unsupported verdict format_version {}", r.format_version)));
        }
        let timestamp = DateTime::parse_from_rfc3339(&r.timestamp)
            .map_err(|e| ModelError::Config(format!("verdict timestamp: {e}")))?
            .with_timezone(&Utc);
        let v = Verdict {
            decision: r.decision,
            regime: r.regime,
            combined_score: r.combined_score,
            statistic: r.statistic,
            threshold: r.threshold,
            prior: r.prior,
            saturated: r.saturated,
            ceiling: r.ceiling,
            proof_hash: r.proof_hash,
            timestamp,
        };
        v.validate()?;
        Ok(v)
    }
}

impl From<Verdict> for RawVerdict {
    fn from(v: Verdict) -> Self {
        RawVerdict {
            format_version: VERDICT_FORMAT_VERSION,
            decision: v.decision,
            regime: v.regime,
            combined_score: v.combined_score,
            statistic: v.statistic,
            threshold: v.threshold,
            prior: v.prior,
            saturated: v.saturated,
            ceiling: v.ceiling,
            proof_hash: v.proof_hash,
            timestamp: v.timestamp.to_rfc3339_opts(SecondsFormat::Millis, true),
        }
    }
}

impl Verdict {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        decision: Decision,
        regime: RegimeId,
        combined_score: f64,
        statistic: Statistic,
        threshold: f64,
        prior: Option<f64>,
        saturated: bool,
        ceiling: f64,
        proof_hash: impl Into<String>,
        timestamp: DateTime<Utc>,
    ) -> Result<Self, ModelError> {
        let v = Verdict {
            decision,
            regime,
            combined_score,
            statistic,
            threshold,
            prior,
            saturated,
            ceiling,
            proof_hash: proof_hash.into(),
            timestamp,
        };
        v.validate()?;
        Ok(v)
    }

    fn validate(&self) -> Result<(), ModelError> {
        super::check_unit("L", self.combined_score)?;
        if !self.regime.branch().decisions().contains(&self.decision) {
            return Err(ModelError::Config(format!("{} cannot be emitted under {}", self.decision, self.regime)));
        }
        match (self.regime.branch(), self.statistic) {
            (Branch::Oplaw, Statistic::Posterior(p)) => {
                super::check_unit("posterior", p)?;
            }
            (Branch::Domestic, Statistic::LikelihoodRatio(l)) => {
                if l.is_some_and(|l| !(l >= 0.0 && l.is_finite())) {
                    return Err(ModelError::Config("likelihood ratio must be >= 0".into()));
                }
            }
            (Branch::Product, Statistic::CombinedScore(_)) => {}
            _ => return Err(ModelError::Config(format!("statistic does not match the {} branch", self.regime))),
        }
        Ok(())
    }

    pub fn decision(&self) -> Decision {
        self.decision
    }

    pub fn regime(&self) -> RegimeId {
        self.regime
    }

    pub fn combined_score(&self) -> f64 {
        self.combined_score
    }

    pub fn statistic(&self) -> Statistic {
        self.statistic
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn prior(&self) -> Option<f64> {
        self.prior
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    /// Largest L reachable under the regime's weights.
    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn proof_hash(&self) -> &str {
        &self.proof_hash
    }

    pub fn timestamp(&self) -> DateTime<Utc> {
        self.timestamp
    }
}
