//! Bootstrap intervals, paired bootstrap tests, multiplicity corrections,
//! Cliff's delta and the sufficiency rule.

mod bootstrap;
mod effect;
mod multiple;
mod sufficiency;

pub use bootstrap::{
    bootstrap_ci, bootstrap_ci_by, paired_bootstrap_by_id, paired_bootstrap_test, percentile, BootStatistic,
    BootstrapConfig, Interval, PairedTest,
};
pub use effect::{cliffs_delta, cliffs_delta_ci, EffectSize};
pub use multiple::{bonferroni, holm};
pub use sufficiency::{sufficiency_table, CellEstimate, Mark, SufficiencyRule, SufficiencyTable, SUFFICIENCY_TIERS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("input is empty")]
    Empty,
    #[error("paired inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("paired inputs have different item ids")]
    UnpairedIds,
    #[error("bootstrap config: {0}")]
    Config(String),
}
