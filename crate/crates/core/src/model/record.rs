use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_unit, ModelError, Pipeline, Tier};

pub const RECORD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Image,
    Audio,
    Video,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Image, Modality::Audio, Modality::Video];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Image => "image",
            Modality::Audio => "audio",
            Modality::Video => "video",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Modality::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::Config(format!("unknown modality `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GroundTruth {
    #[serde(rename = "synthetic-marked")]
    SyntheticMarked,
    #[serde(rename = "natural")]
    Natural,
}

impl GroundTruth {
    pub fn is_marked(self) -> bool {
        matches!(self, GroundTruth::SyntheticMarked)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Calibration,
    Test,
}

/// Component scores `(s_σ, s_ω, s_ζ)`, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUnit", into = "RawUnit")]
pub struct UnitScores {
    sigma: f64,
    omega: f64,
    zeta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUnit {
    sigma: f64,
    omega: f64,
    zeta: f64,
}

impl TryFrom<RawUnit> for UnitScores {
    type Error = ModelError;

    fn try_from(r: RawUnit) -> Result<Self, Self::Error> {
        UnitScores::new(r.sigma, r.omega, r.zeta)
    }
}

impl From<UnitScores> for RawUnit {
    fn from(u: UnitScores) -> Self {
        RawUnit { sigma: u.sigma, omega: u.omega, zeta: u.zeta }
    }
}

impl UnitScores {
    pub fn new(sigma: f64, omega: f64, zeta: f64) -> Result<Self, ModelError> {
        Ok(UnitScores {
            sigma: check_unit("s_sigma", sigma)?,
            omega: check_unit("s_omega", omega)?,
            zeta: check_unit("s_zeta", zeta)?,
        })
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
}

/// One benchmark sample. Laundered variants of the same item share `item_id`.
///
/// Ground truth is fixed at construction and the partition tag can be set
/// once; neither has a setter beyond that.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord", into = "RawRecord")]
pub struct ScoreRecord {
    item_id: String,
    modality: Modality,
    generator: String,
    tier: Tier,
    pipeline: Option<Pipeline>,
    ground_truth: GroundTruth,
    raw_scores: BTreeMap<String, f64>,
    unit_scores: UnitScores,
    partition: Option<Partition>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    format_version: u32,
    item_id: String,
    modality: Modality,
    generator: String,
    tier: Tier,
    #[serde(default)]
    pipeline: Option<Pipeline>,
    ground_truth: GroundTruth,
    #[serde(default)]
    raw_scores: BTreeMap<String, f64>,
    unit_scores: UnitScores,
    #[serde(default)]
    partition: Option<Partition>,
}

impl TryFrom<RawRecord> for ScoreRecord {
    type Error = ModelError;

    fn try_from(r: RawRecord) -> Result<Self, Self::Error> {
        if r.format_version != RECORD_FORMAT_VERSION {
            return Err(ModelError::Record {
                item_id: r.item_id,
                reason: format!("unsupported format_version {}", r.format_version),
            });
        }
        let mut rec = ScoreRecord::new(
            r.item_id,
            r.modality,
            r.generator,
            r.tier,
            r.pipeline,
            r.ground_truth,
            r.raw_scores,
            r.unit_scores,
        )?;
        rec.partition = r.partition;
        Ok(rec)
    }
}

impl From<ScoreRecord> for RawRecord {
    fn from(r: ScoreRecord) -> Self {
        RawRecord {
            format_version: RECORD_FORMAT_VERSION,
            item_id: r.item_id,
            modality: r.modality,
            generator: r.generator,
            tier: r.tier,
            pipeline: r.pipeline,
            ground_truth: r.ground_truth,
            raw_scores: r.raw_scores,
            unit_scores: r.unit_scores,
            partition: r.partition,
        }
    }
}

impl ScoreRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        item_id: impl Into<String>,
        modality: Modality,
        generator: impl Into<String>,
        tier: Tier,
        pipeline: Option<Pipeline>,
        ground_truth: GroundTruth,
        raw_scores: BTreeMap<String, f64>,
        unit_scores: UnitScores,
    ) -> Result<Self, ModelError> {
        let item_id = item_id.into();
        let bad = |reason: &str| ModelError::Record { item_id: item_id.clone(), reason: reason.to_string() };
        if item_id.is_empty() {
            return Err(bad("empty item id"));
        }
        if let Some(p) = pipeline {
            if p.tier() != tier {
                return Err(bad("pipeline does not belong to the record's tier"));
            }
        } else if (2..=4).contains(&tier.level()) {
            return Err(bad("tiers 2-4 require a pipeline id"));
        }
        if ground_truth == GroundTruth::Natural && tier != Tier::T0 {
            return Err(bad("natural items are never laundered"));
        }
        if let Some((name, _)) = raw_scores.iter().find(|(_, v)| !v.is_finite()) {
            return Err(bad(&format!("raw score `{name}` is not finite")));
        }
        Ok(ScoreRecord {
            item_id,
            modality,
            generator: generator.into(),
            tier,
            pipeline,
            ground_truth,
            raw_scores,
            unit_scores,
            partition: None,
        })
    }

    pub fn item_id(&self) -> &str {
        &self.item_id
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    pub fn tier(&self) -> Tier {
        self.tier
    }

    pub fn pipeline(&self) -> Option<Pipeline> {
        self.pipeline
    }

    pub fn ground_truth(&self) -> GroundTruth {
        self.ground_truth
    }

    pub fn raw_scores(&self) -> &BTreeMap<String, f64> {
        &self.raw_scores
    }

    pub fn raw_score(&self, scheme: &str) -> Option<f64> {
        self.raw_scores.get(scheme).copied()
    }

    pub fn unit_scores(&self) -> UnitScores {
        self.unit_scores
    }

    pub fn partition(&self) -> Option<Partition> {
        self.partition
    }

    pub fn assign_partition(&mut self, partition: Partition) -> Result<(), ModelError> {
        if self.partition.is_some() {
            return Err(ModelError::PartitionReassigned(self.item_id.clone()));
        }
        self.partition = Some(partition);
        Ok(())
    }

    /// Variant label: `T0`, `T1`, `P1`..`P6` or `T5`.
    pub fn variant(&self) -> String {
        match self.pipeline {
            Some(p) => p.to_string(),
            None => self.tier.to_string(),
        }
    }
}
