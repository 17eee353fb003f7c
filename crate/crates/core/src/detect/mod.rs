//! Watermark score adapters: threshold calibration at a target FPR, the
//! null-CDF unit score, ROC metrics, and the synthetic detector oracle.

mod oracle;
mod threshold;

pub use oracle::{
    synth_coupled, synth_scores, synth_scores_with, stratified_normal, C2paModel, DetectorSet, DetectorSpec,
    OracleStatus, Sampling, SchemeId, ScorePopulation, DEFAULT_COUPLING, SHIPPED_DETECTORS_TOML, TPR_CLAMP,
};
pub use threshold::{
    calibrate_threshold, empirical_tpr_at_fpr, roc_auc, roc_curve, tpr_at_threshold, unit_score, NullReference,
    RocPoint, DEFAULT_FPR, ROC_FPR_GRID,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectError {
    #[error("null score set is empty")]
    EmptyNull,
    #[error("positive score set is empty")]
    EmptyPositives,
    #[error("target FPR {0} outside (0, 1)")]
    Fpr(f64),
    #[error("score {0} is not finite")]
    NonFinite(f64),
    #[error("tier {0} has no quantitative target")]
    Tier(u8),
    #[error("invalid detector spec `{scheme}`: {reason}")]
    Spec { scheme: String, reason: String },
    #[error("detector config: {0}")]
    Config(String),
}
