use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Adversary capability tier, 0 (unmodified) through 5 (signing-key compromise).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Tier(u8);

impl Tier {
    pub const T0: Tier = Tier(0);
    pub const T1: Tier = Tier(1);
    pub const T2: Tier = Tier(2);
    pub const T3: Tier = Tier(3);
    pub const T4: Tier = Tier(4);
    pub const T5: Tier = Tier(5);

    /// Tiers with quantitative results. Tier 5 is representable but never
    /// scored: no cryptographic check can detect a forged-but-validly-signed
    /// manifest.
    pub const QUANTITATIVE: [Tier; 5] = [Tier(0), Tier(1), Tier(2), Tier(3), Tier(4)];

    pub fn new(level: u8) -> Result<Self, ModelError> {
        if level <= 5 {
            Ok(Tier(level))
        } else {
            Err(ModelError::TierOutOfRange(level))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_quantitative(self) -> bool {
        self.0 <= 4
    }
}

impl TryFrom<u8> for Tier {
    type Error = ModelError;

    fn try_from(level: u8) -> Result<Self, Self::Error> {
        Tier::new(level)
    }
}

impl From<Tier> for u8 {
    fn from(t: Tier) -> u8 {
        t.0
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

/// The six laundering pipelines of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pipeline {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

impl Pipeline {
    pub const ALL: [Pipeline; 6] = [
        Pipeline::P1,
        Pipeline::P2,
        Pipeline::P3,
        Pipeline::P4,
        Pipeline::P5,
        Pipeline::P6,
    ];

    pub fn tier(self) -> Tier {
        match self {
            Pipeline::P1 | Pipeline::P2 => Tier::T2,
            Pipeline::P3 => Tier::T3,
            // P6 sits at the upper edge of tier 4 but is still scored there.
            Pipeline::P4 | Pipeline::P5 | Pipeline::P6 => Tier::T4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::P1 => "P1",
            Pipeline::P2 => "P2",
            Pipeline::P3 => "P3",
            Pipeline::P4 => "P4",
            Pipeline::P5 => "P5",
            Pipeline::P6 => "P6",
        }
    }

    /// Transform labels recorded in the laundering log.
    pub fn transforms(self) -> &'static [&'static str] {
        match self {
            Pipeline::P1 => &["jpeg-q75", "crop-10pct"],
            Pipeline::P2 => &["platform-reencode"],
            Pipeline::P3 => &["cross-model-regeneration"],
            Pipeline::P4 => &["diffusion-purification"],
            Pipeline::P5 => &["regeneration-attack"],
            Pipeline::P6 => &["diffusion-purification", "regeneration-attack", "annealed-5-step"],
        }
    }
}

impl FromStr for Pipeline {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::UnknownPipeline(s.to_string()))
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps a pipeline identifier to the adversary tier it exercises.
pub fn classify_tier(pipeline: &str) -> Result<Tier, ModelError> {
    pipeline.parse::<Pipeline>().map(Pipeline::tier)
}

/// Laundering history of one artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLaundering")]
pub struct LaunderingDescriptor {
    tier: Tier,
    pipeline: Option<Pipeline>,
    transforms: Vec<String>,
}

#[derive(Deserialize)]
struct RawLaundering {
    tier: Tier,
    pipeline: Option<Pipeline>,
    transforms: Vec<String>,
}

impl TryFrom<RawLaundering> for LaunderingDescriptor {
    type Error = ModelError;

    fn try_from(raw: RawLaundering) -> Result<Self, Self::Error> {
        LaunderingDescriptor::new(raw.tier, raw.pipeline, raw.transforms)
    }
}

impl LaunderingDescriptor {
    pub fn new(tier: Tier, pipeline: Option<Pipeline>, transforms: Vec<String>) -> Result<Self, ModelError> {
        if tier == Tier::T0 && (!transforms.is_empty() || pipeline.is_some()) {
            return Err(ModelError::Laundering("tier 0 carries no transforms"));
        }
        if tier != Tier::T0 && transforms.is_empty() {
            return Err(ModelError::Laundering("laundered artifact needs a transform log"));
        }
        match pipeline {
            Some(p) if p.tier() != tier => {
                return Err(ModelError::Laundering("pipeline does not belong to the stated tier"))
            }
            None if matches!(tier.level(), 2..=4) => {
                return Err(ModelError::Laundering("tiers 2-4 are produced by a named pipeline"))
            }
            _ => {}
        }
        Ok(LaunderingDescriptor { tier, pipeline, transforms })
    }

    pub fn unmodified() -> Self {
        LaunderingDescriptor { tier: Tier::T0, pipeline: None, transforms: Vec::new() }
    }

    /// Tier 1: regeneration through the same model, outside the pipeline set.
    pub fn same_model_resample() -> Self {
        LaunderingDescriptor {
            tier: Tier::T1,
            pipeline: None,
            transforms: vec!["same-model-resample".to_string()],
        }
    }

    pub fn key_compromise() -> Self {
        LaunderingDescriptor {
            tier: Tier::T5,
            pipeline: None,
            transforms: vec!["signing-key-compromise".to_string()],
        }
    }

    pub fn for_pipeline(pipeline: Pipeline) -> Self {
        LaunderingDescriptor {
            tier: pipeline.tier(),
            pipeline: Some(pipeline),
            transforms: pipeline.transforms().iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Descriptor for a benchmark variant described only by tier and pipeline.
    pub fn for_variant(tier: Tier, pipeline: Option<Pipeline>) -> Result<Self, ModelError> {
        match (tier.level(), pipeline) {
            (_, Some(p)) if p.tier() == tier => Ok(Self::for_pipeline(p)),
            (0, None) => Ok(Self::unmodified()),
            (1, None) => Ok(Self::same_model_resample()),
            (5, None) => Ok(Self::key_compromise()),
            _ => Err(ModelError::Laundering("tier and pipeline disagree")),
        }
    }

    pub fn tier(&self) -> Tier {
        self.tier
    }

    pub fn pipeline(&self) -> Option<Pipeline> {
        self.pipeline
    }

    pub fn transforms(&self) -> &[String] {
        &self.transforms
    }
}

impl Default for LaunderingDescriptor {
    fn default() -> Self {
        Self::unmodified()
    }
}
