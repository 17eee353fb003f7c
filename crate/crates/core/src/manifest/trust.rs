use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

/// Default revocation freshness window: 24 hours.
pub const DEFAULT_FRESHNESS_SECS: i64 = 86_400;

pub trait TimeSource {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl TimeSource for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl TimeSource for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrustError {
    #[error("trust store has no root keys")]
    NoRoots,
    #[error("freshness window must be positive, got {0} s")]
    Window(i64),
    #[error("root `{0}`: public key must be 32 bytes of hex")]
    BadKey(String),
    #[error("root key id `{0}` listed twice")]
    DuplicateRoot(String),
    #[error("unsupported trust store format_version {0}")]
    Version(u32),
    #[error("trust store: {0}")]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Revocation {
    pub key_id: String,
    pub revoked_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RootEntry {
    key_id: String,
    public_key: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrustFile {
    format_version: u32,
    #[serde(default = "default_window")]
    freshness_window_secs: i64,
    revocations_updated_at: DateTime<Utc>,
    #[serde(default, rename = "root")]
    roots: Vec<RootEntry>,
    #[serde(default, rename = "revocation")]
    revocations: Vec<Revocation>,
}

fn default_window() -> i64 {
    DEFAULT_FRESHNESS_SECS
}

/// Trusted root keys plus revocation state. Lookups are by key id.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustStore {
    roots: BTreeMap<String, [u8; 32]>,
    revocations: BTreeMap<String, DateTime<Utc>>,
    revocations_updated_at: DateTime<Utc>,
    freshness_window: Duration,
}

impl TrustStore {
    pub fn new(
        roots: impl IntoIterator<Item = (String, [u8; 32])>,
        revocations_updated_at: DateTime<Utc>,
    ) -> Result<Self, TrustError> {
        let mut map = BTreeMap::new();
        for (id, key) in roots {
            if map.insert(id.clone(), key).is_some() {
                return Err(TrustError::DuplicateRoot(id));
            }
        }
        if map.is_empty() {
            return Err(TrustError::NoRoots);
        }
        Ok(TrustStore {
            roots: map,
            revocations: BTreeMap::new(),
            revocations_updated_at,
            freshness_window: Duration::seconds(DEFAULT_FRESHNESS_SECS),
        })
    }

    pub fn with_freshness_window(mut self, window: Duration) -> Result<Self, TrustError> {
        if window <= Duration::zero() {
            return Err(TrustError::Window(window.num_seconds()));
        }
        self.freshness_window = window;
        Ok(self)
    }

    /// Records a revocation. An earlier time for the same key wins.
    pub fn revoke(mut self, key_id: impl Into<String>, at: DateTime<Utc>) -> Self {
        let entry = self.revocations.entry(key_id.into()).or_insert(at);
        if at < *entry {
            *entry = at;
        }
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, TrustError> {
        let file: TrustFile = toml::from_str(text)?;
        if file.format_version != 1 {
            return Err(TrustError::Version(file.format_version));
        }
        let mut roots = Vec::with_capacity(file.roots.len());
        for r in file.roots {
            let key: [u8; 32] = hex::decode(&r.public_key)
                .ok()
                .and_then(|b| b.try_into().ok())
                .ok_or_else(|| TrustError::BadKey(r.key_id.clone()))?;
            roots.push((r.key_id, key));
        }
        let mut store = TrustStore::new(roots, file.revocations_updated_at)?
            .with_freshness_window(Duration::seconds(file.freshness_window_secs))?;
        for rev in file.revocations {
            store = store.revoke(rev.key_id, rev.revoked_at);
        }
        Ok(store)
    }

    pub fn to_toml(&self) -> String {
        let file = TrustFile {
            format_version: 1,
            freshness_window_secs: self.freshness_window.num_seconds(),
            revocations_updated_at: self.revocations_updated_at,
            roots: self
                .roots
                .iter()
                .map(|(id, k)| RootEntry { key_id: id.clone(), public_key: hex::encode(k) })
                .collect(),
            revocations: self
                .revocations
                .iter()
                .map(|(id, at)| Revocation { key_id: id.clone(), revoked_at: *at })
                .collect(),
        };
        toml::to_string(&file).expect("trust store serializes")
    }

    pub fn root(&self, key_id: &str) -> Option<&[u8; 32]> {
        self.roots.get(key_id)
    }

    pub fn is_revoked(&self, key_id: &str, now: DateTime<Utc>) -> bool {
        self.revocations.get(key_id).is_some_and(|at| *at <= now)
    }

    /// Revocation data may be at most one freshness window old.
    pub fn is_fresh(&self, now: DateTime<Utc>) -> bool {
        now - self.revocations_updated_at <= self.freshness_window
    }

    pub fn freshness_window(&self) -> Duration {
        self.freshness_window
    }

    pub fn revocations_updated_at(&self) -> DateTime<Utc> {
        self.revocations_updated_at
    }
}
