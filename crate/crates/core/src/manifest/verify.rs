use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::format::{parse_manifest, verify_sig, Manifest};
use super::TrustStore;

/// Outcome of a provenance check, named after the first check that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProvenanceStatus {
    Ok,
    ManifestAbsent,
    Malformed,
    HashMismatch,
    BadSignature,
    UntrustedChain,
    Revoked,
    StaleTrust,
}

impl ProvenanceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ProvenanceStatus::Ok => "OK",
            ProvenanceStatus::ManifestAbsent => "MANIFEST_ABSENT",
            ProvenanceStatus::Malformed => "MALFORMED",
            ProvenanceStatus::HashMismatch => "HASH_MISMATCH",
            ProvenanceStatus::BadSignature => "BAD_SIGNATURE",
            ProvenanceStatus::UntrustedChain => "UNTRUSTED_CHAIN",
            ProvenanceStatus::Revoked => "REVOKED",
            ProvenanceStatus::StaleTrust => "STALE_TRUST",
        }
    }
}

impl fmt::Display for ProvenanceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceOutcome {
    pub score: f64,
    pub status: ProvenanceStatus,
}

impl ProvenanceOutcome {
    fn fail(status: ProvenanceStatus) -> Self {
        ProvenanceOutcome { score: 0.0, status }
    }
}

/// s_σ for `payload`. Checks run in order: presence, hash binding, claim
/// signature, chain to a trusted root, revocation, revocation freshness.
pub fn verify_provenance(
    manifest: Option<&Manifest>,
    payload: &[u8],
    trust: &TrustStore,
    now: DateTime<Utc>,
) -> ProvenanceOutcome {
    use ProvenanceStatus::*;
    let Some(m) = manifest else {
        return ProvenanceOutcome::fail(ManifestAbsent);
    };
    if m.chain.is_empty() || m.digest.len() != m.digest_alg.output_len() {
        return ProvenanceOutcome::fail(Malformed);
    }
    if m.digest_alg.digest(payload) != m.digest {
        return ProvenanceOutcome::fail(HashMismatch);
    }
    if !verify_sig(&m.leaf().public_key, &m.signed_claim(), &m.signature) {
        return ProvenanceOutcome::fail(BadSignature);
    }
    if !chain_is_trusted(m, trust) {
        return ProvenanceOutcome::fail(UntrustedChain);
    }
    let root_id = &m.chain[m.chain.len() - 1].issuer_id;
    let revoked = m.chain.iter().map(|l| &l.key_id).chain([root_id]).any(|id| trust.is_revoked(id, now));
    if revoked {
        return ProvenanceOutcome::fail(Revoked);
    }
    if !trust.is_fresh(now) {
        return ProvenanceOutcome::fail(StaleTrust);
    }
    ProvenanceOutcome { score: 1.0, status: Ok }
}

fn chain_is_trusted(m: &Manifest, trust: &TrustStore) -> bool {
    for (i, link) in m.chain.iter().enumerate() {
        let issuer_key = match m.chain.get(i + 1) {
            Some(parent) if parent.key_id == link.issuer_id => &parent.public_key,
            Some(_) => return false,
            None => match trust.root(&link.issuer_id) {
                Some(k) => k,
                None => return false,
            },
        };
        if !verify_sig(issuer_key, &link.message(), &link.issuer_signature) {
            return false;
        }
    }
    true
}

/// As [`verify_provenance`], from raw manifest bytes. Unparseable bytes
/// yield `MALFORMED`.
pub fn verify_provenance_bytes(
    manifest: Option<&[u8]>,
    payload: &[u8],
    trust: &TrustStore,
    now: DateTime<Utc>,
) -> ProvenanceOutcome {
    match manifest.map(parse_manifest) {
        None => verify_provenance(None, payload, trust, now),
        Some(Ok(m)) => verify_provenance(Some(&m), payload, trust, now),
        Some(Err(_)) => ProvenanceOutcome::fail(ProvenanceStatus::Malformed),
    }
}
