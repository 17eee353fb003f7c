//! Binary manifest layout (all integers big-endian):
//!
//! ```text
//! magic        4   "PKMF"
//! version      u8  1
//! digest alg   u8  1 = SHA-256, 2 = SHA-512
//! digest len   u8  must equal the algorithm's output size
//! digest       ..
//! n_assert     u16
//!   key_len u16, key (UTF-8), value_len u32, value (UTF-8)   per assertion
//! signature    64  Ed25519 by the leaf key over CLAIM_DOMAIN ‖ claim bytes
//! n_links      u8  >= 1, leaf first
//!   key_id_len u8, key_id, public key 32,
//!   issuer_id_len u8, issuer_id, issuer signature 64          per link
//! ```
//!
//! Claim bytes run from the version byte through the last assertion. A link
//! signature covers LINK_DOMAIN ‖ key_id ‖ public key ‖ issuer_id, each id
//! length-prefixed. Trailing bytes are an error.

use std::fmt;

use ed25519_dalek::{Signature, Signer, SigningKey, VerifyingKey};
use sha2::{Digest, Sha256, Sha512};

use super::{CLAIM_DOMAIN, LINK_DOMAIN};

pub const MAGIC: &[u8; 4] = b"PKMF";
pub const MANIFEST_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DigestAlg {
    Sha256,
    Sha512,
}

impl DigestAlg {
    pub fn id(self) -> u8 {
        match self {
            DigestAlg::Sha256 => 1,
            DigestAlg::Sha512 => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(DigestAlg::Sha256),
            2 => Some(DigestAlg::Sha512),
            _ => None,
        }
    }

    pub fn output_len(self) -> usize {
        match self {
            DigestAlg::Sha256 => 32,
            DigestAlg::Sha512 => 64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DigestAlg::Sha256 => "sha256",
            DigestAlg::Sha512 => "sha512",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sha256" => Some(DigestAlg::Sha256),
            "sha512" => Some(DigestAlg::Sha512),
            _ => None,
        }
    }

    pub fn digest(self, payload: &[u8]) -> Vec<u8> {
        match self {
            DigestAlg::Sha256 => Sha256::digest(payload).to_vec(),
            DigestAlg::Sha512 => Sha512::digest(payload).to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub key: String,
    pub value: String,
}

impl Assertion {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        Assertion { key: key.into(), value: value.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainLink {
    pub key_id: String,
    pub public_key: [u8; 32],
    pub issuer_id: String,
    pub issuer_signature: [u8; 64],
}

impl ChainLink {
    pub(crate) fn signed_message(key_id: &str, public_key: &[u8; 32], issuer_id: &str) -> Vec<u8> {
        let mut m = LINK_DOMAIN.to_vec();
        m.push(key_id.len() as u8);
        m.extend_from_slice(key_id.as_bytes());
        m.extend_from_slice(public_key);
        m.push(issuer_id.len() as u8);
        m.extend_from_slice(issuer_id.as_bytes());
        m
    }

    pub fn message(&self) -> Vec<u8> {
        ChainLink::signed_message(&self.key_id, &self.public_key, &self.issuer_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub digest_alg: DigestAlg,
    pub digest: Vec<u8>,
    pub assertions: Vec<Assertion>,
    pub signature: [u8; 64],
    pub chain: Vec<ChainLink>,
}

/// Named Ed25519 key used to build fixtures.
#[derive(Clone)]
pub struct KeyPair {
    pub key_id: String,
    signing: SigningKey,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("key_id", &self.key_id).finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn from_seed(key_id: impl Into<String>, seed: [u8; 32]) -> Self {
        KeyPair { key_id: key_id.into(), signing: SigningKey::from_bytes(&seed) }
    }

    /// Deterministic key derived from a label, for fixtures and simulations.
    pub fn derived(key_id: impl Into<String>, label: &str) -> Self {
        let seed: [u8; 32] = Sha256::digest(label.as_bytes()).into();
        KeyPair::from_seed(key_id, seed)
    }

    pub fn public_key(&self) -> [u8; 32] {
        self.signing.verifying_key().to_bytes()
    }

    pub fn verifying_key(&self) -> VerifyingKey {
        self.signing.verifying_key()
    }

    pub fn sign(&self, message: &[u8]) -> [u8; 64] {
        self.signing.sign(message).to_bytes()
    }

    /// Certifies `subject` under this key.
    pub fn issue_link(&self, subject: &KeyPair) -> ChainLink {
        let public_key = subject.public_key();
        let msg = ChainLink::signed_message(&subject.key_id, &public_key, &self.key_id);
        ChainLink {
            key_id: subject.key_id.clone(),
            public_key,
            issuer_id: self.key_id.clone(),
            issuer_signature: self.sign(&msg),
        }
    }
}

pub(crate) fn verify_sig(public_key: &[u8; 32], message: &[u8], signature: &[u8; 64]) -> bool {
    match VerifyingKey::from_bytes(public_key) {
        Ok(vk) => vk.verify_strict(message, &Signature::from_bytes(signature)).is_ok(),
        Err(_) => false,
    }
}

impl Manifest {
    /// Builds and signs a manifest binding `payload`. `chain` runs from the
    /// leaf's certificate upward; the leaf must be `signer`.
    pub fn sign(
        digest_alg: DigestAlg,
        payload: &[u8],
        assertions: Vec<Assertion>,
        signer: &KeyPair,
        chain: Vec<ChainLink>,
    ) -> Manifest {
        let mut m = Manifest {
            digest_alg,
            digest: digest_alg.digest(payload),
            assertions,
            signature: [0; 64],
            chain,
        };
        m.signature = signer.sign(&m.signed_claim());
        m
    }

    pub fn claim_bytes(&self) -> Vec<u8> {
        let mut out = vec![MANIFEST_VERSION, self.digest_alg.id(), self.digest.len() as u8];
        out.extend_from_slice(&self.digest);
        out.extend_from_slice(&(self.assertions.len() as u16).to_be_bytes());
        for a in &self.assertions {
            out.extend_from_slice(&(a.key.len() as u16).to_be_bytes());
            out.extend_from_slice(a.key.as_bytes());
            out.extend_from_slice(&(a.value.len() as u32).to_be_bytes());
            out.extend_from_slice(a.value.as_bytes());
        }
        out
    }

    pub(crate) fn signed_claim(&self) -> Vec<u8> {
        let mut m = CLAIM_DOMAIN.to_vec();
        m.extend_from_slice(&self.claim_bytes());
        m
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&self.claim_bytes());
        out.extend_from_slice(&self.signature);
        out.push(self.chain.len() as u8);
        for link in &self.chain {
            out.push(link.key_id.len() as u8);
            out.extend_from_slice(link.key_id.as_bytes());
            out.extend_from_slice(&link.public_key);
            out.push(link.issuer_id.len() as u8);
            out.extend_from_slice(link.issuer_id.as_bytes());
            out.extend_from_slice(&link.issuer_signature);
        }
        out
    }

    pub fn assertion(&self, key: &str) -> Option<&str> {
        self.assertions.iter().find(|a| a.key == key).map(|a| a.value.as_str())
    }

    pub fn leaf(&self) -> &ChainLink {
        &self.chain[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Truncated,
    BadMagic,
    UnsupportedVersion(u8),
    UnsupportedDigest(u8),
    DigestLength { expected: usize, found: usize },
    InvalidUtf8,
    EmptyChain,
    TrailingBytes,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("manifest parse error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Truncated => f.write_str("truncated input"),
            ParseErrorKind::BadMagic => f.write_str("bad magic"),
            ParseErrorKind::UnsupportedVersion(v) => write!(f, "unsupported version {v}"),
            ParseErrorKind::UnsupportedDigest(a) => write!(f, "unsupported digest algorithm id {a}"),
            ParseErrorKind::DigestLength { expected, found } => {
                write!(f, "digest length {found}, algorithm needs {expected}")
            }
            ParseErrorKind::InvalidUtf8 => f.write_str("string is not UTF-8"),
            ParseErrorKind::EmptyChain => f.write_str("malformed chain: no links"),
            ParseErrorKind::TrailingBytes => f.write_str("trailing bytes"),
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { offset: self.pos, kind }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ParseError> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(ParseErrorKind::Truncated));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ParseError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ParseError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, ParseError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], ParseError> {
        let mut out = [0; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    fn string(&mut self, len: usize) -> Result<String, ParseError> {
        let start = self.pos;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| ParseError { offset: start, kind: ParseErrorKind::InvalidUtf8 })
    }
}

pub fn parse_manifest(bytes: &[u8]) -> Result<Manifest, ParseError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(ParseError { offset: 0, kind: ParseErrorKind::BadMagic });
    }
    let version = r.u8()?;
    if version != MANIFEST_VERSION {
        return Err(ParseError { offset: r.pos - 1, kind: ParseErrorKind::UnsupportedVersion(version) });
    }
    let alg_id = r.u8()?;
    let digest_alg = DigestAlg::from_id(alg_id)
        .ok_or(ParseError { offset: r.pos - 1, kind: ParseErrorKind::UnsupportedDigest(alg_id) })?;
    let len = r.u8()? as usize;
    if len != digest_alg.output_len() {
        return Err(ParseError {
            offset: r.pos - 1,
            kind: ParseErrorKind::DigestLength { expected: digest_alg.output_len(), found: len },
        });
    }
    let digest = r.take(len)?.to_vec();
    let n_assert = r.u16()?;
    let mut assertions = Vec::with_capacity(n_assert.min(1024) as usize);
    for _ in 0..n_assert {
        let klen = r.u16()? as usize;
        let key = r.string(klen)?;
        let vlen = r.u32()? as usize;
        let value = r.string(vlen)?;
        assertions.push(Assertion { key, value });
    }
    let signature = r.array::<64>()?;
    let n_links = r.u8()?;
    if n_links == 0 {
        return Err(ParseError { offset: r.pos - 1, kind: ParseErrorKind::EmptyChain });
    }
    let mut chain = Vec::with_capacity(n_links as usize);
    for _ in 0..n_links {
        let idlen = r.u8()? as usize;
        let key_id = r.string(idlen)?;
        let public_key = r.array::<32>()?;
        let islen = r.u8()? as usize;
        let issuer_id = r.string(islen)?;
        let issuer_signature = r.array::<64>()?;
        chain.push(ChainLink { key_id, public_key, issuer_id, issuer_signature });
    }
    if r.pos != bytes.len() {
        return Err(r.err(ParseErrorKind::TrailingBytes));
    }
    Ok(Manifest { digest_alg, digest, assertions, signature, chain })
}
