//! Domain model shared by every stage: the laundering taxonomy, regime
//! profiles, benchmark score records, proof objects and verdicts.

mod proof;
mod record;
mod regime;
mod taxonomy;
mod verdict;

pub use proof::{AttestationRef, ProofObject, ProvenanceRef, WatermarkScore};
pub use record::{GroundTruth, Modality, Partition, ScoreRecord, UnitScores, RECORD_FORMAT_VERSION};
pub use regime::{
    regime_defaults, Branch, CostMatrix, DecisionCosts, RegimeConfig, RegimeId, RegimeProfile, Weights,
    SHIPPED_REGIMES_TOML, WEIGHT_SUM_TOLERANCE,
};
pub use taxonomy::{classify_tier, LaunderingDescriptor, Pipeline, Tier};
pub use verdict::{Decision, Statistic, Verdict, VERDICT_FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown pipeline id `{0}` (expected P1..P6)")]
    UnknownPipeline(String),
    #[error("tier {0} out of range 0..=5")]
    TierOutOfRange(u8),
    #[error("invalid laundering descriptor: {0}")]
    Laundering(&'static str),
    #[error("unknown regime id `{0}`")]
    UnknownRegime(String),
    #[error("weights ({0}, {1}, {2}) are not on the unit simplex")]
    OffSimplex(f64, f64, f64),
    #[error("invalid regime profile for {regime}: {reason}")]
    Profile { regime: RegimeId, reason: String },
    #[error("invalid cost matrix: {0}")]
    Cost(String),
    #[error("score {name} = {value} outside [0, 1]")]
    ScoreRange { name: String, value: f64 },
    #[error("proof object has no evidence component")]
    EmptyProof,
    #[error("record {item_id}: {reason}")]
    Record { item_id: String, reason: String },
    #[error("record {0} already carries a partition tag")]
    PartitionReassigned(String),
    #[error("config: {0}")]
    Config(String),
    #[error("canonical encoding: {0}")]
    Encoding(String),
}

pub(crate) fn check_unit(name: &str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ModelError::ScoreRange { name: name.to_string(), value })
    }
}
