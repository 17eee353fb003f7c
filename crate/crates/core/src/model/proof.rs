use serde::{Deserialize, Serialize};

use super::{check_unit, LaunderingDescriptor, ModelError};
use crate::canonical;

/// Reference to a verified provenance manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceRef {
    /// SHA-256 of the manifest bytes, hex.
    pub manifest_sha256: String,
    pub status: String,
    pub unit_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WatermarkScore {
    pub scheme: String,
    pub raw: f64,
    pub unit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttestationRef {
    pub model_id: String,
    pub signer_key_id: String,
    pub status: String,
    pub unit_score: f64,
}

/// The evidence tuple (σ, ω, ζ, λ) for one artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProof", into = "RawProof")]
pub struct ProofObject {
    provenance: Option<ProvenanceRef>,
    watermark_scores: Vec<WatermarkScore>,
    attestation: Option<AttestationRef>,
    laundering: LaunderingDescriptor,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProof {
    provenance: Option<ProvenanceRef>,
    #[serde(default)]
    watermark_scores: Vec<WatermarkScore>,
    attestation: Option<AttestationRef>,
    laundering: LaunderingDescriptor,
}

impl TryFrom<RawProof> for ProofObject {
    type Error = ModelError;

    fn try_from(r: RawProof) -> Result<Self, Self::Error> {
        ProofObject::new(r.provenance, r.watermark_scores, r.attestation, r.laundering)
    }
}

impl From<ProofObject> for RawProof {
    fn from(p: ProofObject) -> Self {
        RawProof {
            provenance: p.provenance,
            watermark_scores: p.watermark_scores,
            attestation: p.attestation,
            laundering: p.laundering,
        }
    }
}

impl ProofObject {
    pub fn new(
        provenance: Option<ProvenanceRef>,
        watermark_scores: Vec<WatermarkScore>,
        attestation: Option<AttestationRef>,
        laundering: LaunderingDescriptor,
    ) -> Result<Self, ModelError> {
        if provenance.is_none() && watermark_scores.is_empty() && attestation.is_none() {
            return Err(ModelError::EmptyProof);
        }
        if let Some(p) = &provenance {
            check_unit("s_sigma", p.unit_score)?;
        }
        for w in &watermark_scores {
            check_unit(&format!("s_omega[{}]", w.scheme), w.unit)?;
            if !w.raw.is_finite() {
                return Err(ModelError::ScoreRange { name: format!("raw[{}]", w.scheme), value: w.raw });
            }
        }
        if let Some(a) = &attestation {
            check_unit("s_zeta", a.unit_score)?;
        }
        Ok(ProofObject { provenance, watermark_scores, attestation, laundering })
    }

    pub fn provenance(&self) -> Option<&ProvenanceRef> {
        self.provenance.as_ref()
    }

    pub fn watermark_scores(&self) -> &[WatermarkScore] {
        &self.watermark_scores
    }

    pub fn attestation(&self) -> Option<&AttestationRef> {
        self.attestation.as_ref()
    }

    pub fn laundering(&self) -> &LaunderingDescriptor {
        &self.laundering
    }

    /// s_σ, 0 when no manifest was present.
    pub fn sigma(&self) -> f64 {
        self.provenance.as_ref().map_or(0.0, |p| p.unit_score)
    }

    /// s_ω: the strongest watermark detection, 0 when none was run.
    pub fn omega(&self) -> f64 {
        self.watermark_scores.iter().map(|w| w.unit).fold(0.0, f64::max)
    }

    /// s_ζ, 0 when no attestation was supplied.
    pub fn zeta(&self) -> f64 {
        self.attestation.as_ref().map_or(0.0, |a| a.unit_score)
    }

    pub fn to_canonical_string(&self) -> Result<String, ModelError> {
        canonical::to_canonical_string(self).map_err(|e| ModelError::Encoding(e.to_string()))
    }

    /// SHA-256 (hex) of the canonical encoding.
    pub fn content_hash(&self) -> Result<String, ModelError> {
        Ok(canonical::sha256_hex(self.to_canonical_string()?.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pipeline;

    fn sample() -> ProofObject {
        ProofObject::new(
            None,
            vec![
                WatermarkScore { scheme: "tree-ring".into(), raw: 2.5, unit: 0.97 },
                WatermarkScore { scheme: "gaussian-shading".into(), raw: 5.1, unit: 0.9995 },
            ],
            Some(AttestationRef {
                model_id: "sdxl-1.0".into(),
                signer_key_id: "lab-1".into(),
                status: "DIGEST_MISMATCH".into(),
                unit_score: 0.0,
            }),
            LaunderingDescriptor::for_pipeline(Pipeline::P3),
        )
        .unwrap()
    }

    #[test]
    fn canonical_round_trip_is_a_fixed_point() {
        let p = sample();
        let text = p.to_canonical_string().unwrap();
        let back: ProofObject = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_canonical_string().unwrap(), text);
        assert_eq!(back.content_hash().unwrap(), p.content_hash().unwrap());
    }

    #[test]
    fn component_scores() {
        let p = sample();
        assert_eq!(p.sigma(), 0.0);
        assert_eq!(p.omega(), 0.9995);
        assert_eq!(p.zeta(), 0.0);
    }

    #[test]
    fn invariants_enforced() {
        let none = ProofObject::new(None, vec![], None, LaunderingDescriptor::unmodified());
        assert_eq!(none, Err(ModelError::EmptyProof));
        let bad = ProofObject::new(
            None,
            vec![WatermarkScore { scheme: "x".into(), raw: 1.0, unit: 1.5 }],
            None,
            LaunderingDescriptor::unmodified(),
        );
        assert!(bad.is_err());
        let text = r#"{"attestation":null,"laundering":{"pipeline":null,"tier":0,"transforms":[]},"provenance":null,"watermark_scores":[]}"#;
        assert!(serde_json::from_str::<ProofObject>(text).is_err());
    }
}
