//! Provenance manifests and attestation statements: a compact binary
//! manifest format, a trust store with revocation freshness, and the
//! pass/fail checks that yield s_σ and s_ζ.

mod attestation;
mod format;
mod trust;
mod verify;

pub use attestation::{
    verify_attestation, AttestationOutcome, AttestationStatement, AttestationStatus, AttestationVerifier,
    SignatureAttestationVerifier, ATTESTATION_FORMAT_VERSION,
};
pub use format::{
    parse_manifest, Assertion, ChainLink, DigestAlg, KeyPair, Manifest, ParseError, ParseErrorKind, MAGIC,
    MANIFEST_VERSION,
};
pub use trust::{FixedClock, Revocation, SystemClock, TimeSource, TrustError, TrustStore, DEFAULT_FRESHNESS_SECS};
pub use verify::{verify_provenance, verify_provenance_bytes, ProvenanceOutcome, ProvenanceStatus};

pub(crate) const CLAIM_DOMAIN: &[u8] = b"proofkit/claim/v1";
pub(crate) const LINK_DOMAIN: &[u8] = b"proofkit/link/v1";
pub(crate) const ATTEST_DOMAIN: &[u8] = b"proofkit/attest/v1";
