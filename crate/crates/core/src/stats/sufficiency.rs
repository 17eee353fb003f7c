use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{RegimeId, Tier};

/// Tiers shown in the sufficiency grid.
pub const SUFFICIENCY_TIERS: [Tier; 4] = [Tier::T1, Tier::T2, Tier::T3, Tier::T4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mark {
    NotSupported,
    Contestable,
    Supported,
}

impl Mark {
    pub fn symbol(self) -> &'static str {
        match self {
            Mark::Supported => "✓",
            Mark::Contestable => "○",
            Mark::NotSupported => "×",
        }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

/// ✓ when the CI lower bound clears the threshold, ○ when only the point
/// estimate does, × otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SufficiencyRule;

impl SufficiencyRule {
    pub fn mark(&self, cell: &CellEstimate, threshold: f64) -> Mark {
        if cell.estimate < threshold {
            Mark::NotSupported
        } else if cell.lo >= threshold {
            Mark::Supported
        } else {
            Mark::Contestable
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyTable {
    pub thresholds: BTreeMap<RegimeId, f64>,
    pub marks: BTreeMap<RegimeId, BTreeMap<Tier, Mark>>,
    /// Cells without an estimate; these are never imputed.
    pub missing: Vec<(RegimeId, Tier)>,
}

impl SufficiencyTable {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn get(&self, regime: RegimeId, tier: Tier) -> Option<Mark> {
        self.marks.get(&regime).and_then(|row| row.get(&tier)).copied()
    }
}

/// Marks for every regime in `thresholds` at tiers 1–4.
pub fn sufficiency_table(
    cells: &BTreeMap<(RegimeId, Tier), CellEstimate>,
    thresholds: &BTreeMap<RegimeId, f64>,
    rule: &SufficiencyRule,
) -> SufficiencyTable {
    let mut marks = BTreeMap::new();
    let mut missing = Vec::new();
    for (&regime, &threshold) in thresholds {
        let row: &mut BTreeMap<Tier, Mark> = marks.entry(regime).or_default();
        for tier in SUFFICIENCY_TIERS {
            match cells.get(&(regime, tier)) {
                Some(c) => {
                    row.insert(tier, rule.mark(c, threshold));
                }
                None => missing.push((regime, tier)),
            }
        }
    }
    SufficiencyTable { thresholds: thresholds.clone(), marks, missing }
}
