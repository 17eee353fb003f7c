//! Signature-based stand-in for a succinct model-identity proof: the model
//! owner signs (model id, payload digest) with a key from the trust store.

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::format::{verify_sig, DigestAlg, KeyPair};
use super::{TrustStore, ATTEST_DOMAIN};
use crate::canonical;

pub const ATTESTATION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttestationStatement {
    pub format_version: u32,
    pub model_id: String,
    pub digest_alg: String,
    /// Hex digest of the attested payload.
    pub payload_digest: String,
    pub signer_key_id: String,
    /// Hex Ed25519 signature.
    pub signature: String,
}

#[derive(Serialize)]
struct SignedFields<'a> {
    digest_alg: &'a str,
    model_id: &'a str,
    payload_digest: &'a str,
    signer_key_id: &'a str,
}

impl AttestationStatement {
    pub fn sign(model_id: impl Into<String>, alg: DigestAlg, payload: &[u8], signer: &KeyPair) -> Self {
        let mut s = AttestationStatement {
            format_version: ATTESTATION_FORMAT_VERSION,
            model_id: model_id.into(),
            digest_alg: alg.name().to_string(),
            payload_digest: hex::encode(alg.digest(payload)),
            signer_key_id: signer.key_id.clone(),
            signature: String::new(),
        };
        s.signature = hex::encode(signer.sign(&s.message()));
        s
    }

    pub fn message(&self) -> Vec<u8> {
        let fields = SignedFields {
            digest_alg: &self.digest_alg,
            model_id: &self.model_id,
            payload_digest: &self.payload_digest,
            signer_key_id: &self.signer_key_id,
        };
        let mut m = ATTEST_DOMAIN.to_vec();
        m.extend_from_slice(canonical::to_canonical_string(&fields).expect("plain strings encode").as_bytes());
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AttestationStatus {
    Ok,
    Absent,
    Malformed,
    DigestMismatch,
    UntrustedSigner,
    BadSignature,
    Revoked,
    StaleTrust,
}

impl AttestationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AttestationStatus::Ok => "OK",
            AttestationStatus::Absent => "ABSENT",
            AttestationStatus::Malformed => "MALFORMED",
            AttestationStatus::DigestMismatch => "DIGEST_MISMATCH",
            AttestationStatus::UntrustedSigner => "UNTRUSTED_SIGNER",
            AttestationStatus::BadSignature => "BAD_SIGNATURE",
            AttestationStatus::Revoked => "REVOKED",
            AttestationStatus::StaleTrust => "STALE_TRUST",
        }
    }
}

impl fmt::Display for AttestationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttestationOutcome {
    pub score: f64,
    pub status: AttestationStatus,
}

/// Anything that can turn an attestation into s_ζ. A proof-system verifier
/// would implement this in place of the signature check.
pub trait AttestationVerifier: Send + Sync {
    fn verify(
        &self,
        statement: Option<&AttestationStatement>,
        payload: &[u8],
        trust: &TrustStore,
        now: DateTime<Utc>,
    ) -> AttestationOutcome;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SignatureAttestationVerifier;

impl AttestationVerifier for SignatureAttestationVerifier {
    fn verify(
        &self,
        statement: Option<&AttestationStatement>,
        payload: &[u8],
        trust: &TrustStore,
        now: DateTime<Utc>,
    ) -> AttestationOutcome {
        use AttestationStatus::*;
        let fail = |status| AttestationOutcome { score: 0.0, status };
        let Some(s) = statement else {
            return fail(Absent);
        };
        let parsed = DigestAlg::from_name(&s.digest_alg).zip(
            hex::decode(&s.signature).ok().and_then(|b| <[u8; 64]>::try_from(b).ok()),
        );
        let Some((alg, signature)) = parsed else {
            return fail(Malformed);
        };
        if s.format_version != ATTESTATION_FORMAT_VERSION {
            return fail(Malformed);
        }
        if hex::encode(alg.digest(payload)) != s.payload_digest.to_ascii_lowercase() {
            return fail(DigestMismatch);
        }
        let Some(key) = trust.root(&s.signer_key_id) else {
            return fail(UntrustedSigner);
        };
        if !verify_sig(key, &s.message(), &signature) {
            return fail(BadSignature);
        }
        if trust.is_revoked(&s.signer_key_id, now) {
            return fail(Revoked);
        }
        if !trust.is_fresh(now) {
            return fail(StaleTrust);
        }
        AttestationOutcome { score: 1.0, status: Ok }
    }
}

/// s_ζ using the built-in signature verifier.
pub fn verify_attestation(
    statement: Option<&AttestationStatement>,
    payload: &[u8],
    trust: &TrustStore,
    now: DateTime<Utc>,
) -> AttestationOutcome {
    SignatureAttestationVerifier.verify(statement, payload, trust, now)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn setup() -> (KeyPair, TrustStore, DateTime<Utc>) {
        let lab = KeyPair::derived("lab-1", "lab");
        let now = Utc.with_ymd_and_hms(2026, 3, 1, 12, 0, 0).unwrap();
        let trust = TrustStore::new([(lab.key_id.clone(), lab.public_key())], now).unwrap();
        (lab, trust, now)
    }

    #[test]
    fn valid_statement() {
        let (lab, trust, now) = setup();
        let s = AttestationStatement::sign("sdxl-1.0", DigestAlg::Sha256, b"img", &lab);
        assert_eq!(verify_attestation(Some(&s), b"img", &trust, now), AttestationOutcome {
            score: 1.0,
            status: AttestationStatus::Ok
        });
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<AttestationStatement>(&json).unwrap(), s);
    }

    #[test]
    fn failures() {
        let (lab, trust, now) = setup();
        let s = AttestationStatement::sign("sdxl-1.0", DigestAlg::Sha256, b"img", &lab);
        let st = |s: Option<&AttestationStatement>, p: &[u8], t: &TrustStore| verify_attestation(s, p, t, now).status;
        assert_eq!(st(None, b"img", &trust), AttestationStatus::Absent);
        assert_eq!(st(Some(&s), b"other", &trust), AttestationStatus::DigestMismatch);

        let revoked = trust.clone().revoke("lab-1", now - Duration::hours(2));
        assert_eq!(st(Some(&s), b"img", &revoked), AttestationStatus::Revoked);

        let mut renamed = s.clone();
        renamed.model_id = "flux-1".into();
        assert_eq!(st(Some(&renamed), b"img", &trust), AttestationStatus::BadSignature);

        let stranger = KeyPair::derived("lab-2", "other");
        let foreign = AttestationStatement::sign("x", DigestAlg::Sha256, b"img", &stranger);
        assert_eq!(st(Some(&foreign), b"img", &trust), AttestationStatus::UntrustedSigner);

        let mut junk = s.clone();
        junk.signature = "zz".into();
        assert_eq!(st(Some(&junk), b"img", &trust), AttestationStatus::Malformed);

        let later = now + Duration::hours(25);
        assert_eq!(verify_attestation(Some(&s), b"img", &trust, later).status, AttestationStatus::StaleTrust);
    }
}
