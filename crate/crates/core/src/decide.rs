//! Evidence fusion and the regime-conditioned decision procedure.
//!
//! `L = 1 − ∏ (1 − wᵢ·sᵢ)`, `Λ = L / (1 − L)` and the posterior
//! `p = Λ·P / (Λ·P + 1 − P)`. OPLAW regimes compare `p` with τ and DEFER
//! below it; DOMESTIC compares `Λ` with Λ_min; PRODUCT compares `L` with τ.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::model::{
    Branch, Decision, LaunderingDescriptor, ModelError, ProofObject, RegimeId, RegimeProfile, Statistic, UnitScores,
    Verdict, Weights,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecideError {
    #[error("combined score saturated at 1; likelihood ratio is unbounded")]
    Saturated,
    #[error("{name} = {value} out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Laundering-conditioned component scores for one artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub scores: UnitScores,
    pub laundering: LaunderingDescriptor,
}

impl ComponentScores {
    pub fn new(sigma: f64, omega: f64, zeta: f64, laundering: LaunderingDescriptor) -> Result<Self, DecideError> {
        Ok(ComponentScores { scores: UnitScores::new(sigma, omega, zeta)?, laundering })
    }

    pub fn from_proof(proof: &ProofObject) -> Result<Self, DecideError> {
        ComponentScores::new(proof.sigma(), proof.omega(), proof.zeta(), proof.laundering().clone())
    }
}

pub fn ds_combine(weights: &Weights, scores: &UnitScores) -> f64 {
    let w = weights.as_array();
    let s = scores.as_array();
    let keep: f64 = w.iter().zip(s).map(|(w, s)| 1.0 - w * s).product();
    (1.0 - keep).clamp(0.0, 1.0)
}

/// [`ds_combine`] on unchecked arrays.
pub fn ds_combine_checked(weights: [f64; 3], scores: [f64; 3]) -> Result<f64, DecideError> {
    let w = Weights::try_from(weights)?;
    let s = UnitScores::new(scores[0], scores[1], scores[2])?;
    Ok(ds_combine(&w, &s))
}

pub fn likelihood_ratio(l: f64) -> Result<f64, DecideError> {
    if !(0.0..=1.0).contains(&l) {
        return Err(DecideError::OutOfRange { name: "L", value: l });
    }
    if l == 1.0 {
        return Err(DecideError::Saturated);
    }
    Ok(l / (1.0 - l))
}

pub fn bayes_posterior(lambda: f64, prior: f64) -> Result<f64, DecideError> {
    if !(prior > 0.0 && prior < 1.0) {
        return Err(DecideError::OutOfRange { name: "prior", value: prior });
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(DecideError::OutOfRange { name: "likelihood ratio", value: lambda });
    }
    if lambda.is_infinite() {
        return Ok(1.0);
    }
    let num = lambda * prior;
    Ok(num / (num + 1.0 - prior))
}

/// Everything `decide` computes, before it is stamped into a [`Verdict`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assessment {
    pub regime: RegimeId,
    pub decision: Decision,
    pub combined_score: f64,
    pub statistic: Statistic,
    pub threshold: f64,
    pub prior: Option<f64>,
    pub saturated: bool,
    pub ceiling: f64,
}

impl Assessment {
    pub fn verdict(&self, proof_hash: impl Into<String>, timestamp: DateTime<Utc>) -> Result<Verdict, DecideError> {
        Ok(Verdict::new(
            self.decision,
            self.regime,
            self.combined_score,
            self.statistic,
            self.threshold,
            self.prior,
            self.saturated,
            self.ceiling,
            proof_hash,
            timestamp,
        )?)
    }
}

pub fn decide(scores: &UnitScores, profile: &RegimeProfile) -> Assessment {
    decide_combined(ds_combine(&profile.weights(), scores), profile).expect("ds_combine stays in [0, 1]")
}

/// Decision for an already combined score `l`.
pub fn decide_combined(l: f64, profile: &RegimeProfile) -> Result<Assessment, DecideError> {
    let lambda = match likelihood_ratio(l) {
        Ok(v) => Some(v),
        Err(DecideError::Saturated) => None,
        Err(e) => return Err(e),
    };
    let saturated = lambda.is_none();
    let base = |decision, statistic, threshold, prior| Assessment {
        regime: profile.regime(),
        decision,
        combined_score: l,
        statistic,
        threshold,
        prior,
        saturated,
        ceiling: profile.weights().ceiling(),
    };
    Ok(match profile.branch() {
        Branch::Oplaw => {
            let p = match lambda {
                Some(lr) => bayes_posterior(lr, profile.prior())?,
                None => 1.0,
            };
            let d = if p >= profile.tau() { Decision::Accept } else { Decision::Defer };
            base(d, Statistic::Posterior(p), profile.tau(), Some(profile.prior()))
        }
        Branch::Domestic => {
            let min = profile.lambda_min().expect("DOMESTIC profiles carry lambda_min");
            let d = match lambda {
                Some(lr) if lr < min => Decision::Reject,
                _ => Decision::Accept,
            };
            base(d, Statistic::LikelihoodRatio(lambda), min, None)
        }
        Branch::Product => {
            let d = if l >= profile.tau() { Decision::Accept } else { Decision::Reject };
            base(d, Statistic::CombinedScore(l), profile.tau(), None)
        }
    })
}

/// Full verdict for a proof object, hashed over its canonical encoding.
pub fn decide_proof(proof: &ProofObject, profile: &RegimeProfile, at: DateTime<Utc>) -> Result<Verdict, DecideError> {
    let scores = ComponentScores::from_proof(proof)?;
    decide(&scores.scores, profile).verdict(proof.content_hash()?, at)
}
