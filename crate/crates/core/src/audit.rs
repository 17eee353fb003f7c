//! Append-only audit log and per-command run manifests.
//!
//! Each audit line is a canonical JSON object whose `line_hash` is the
//! SHA-256 of the same object without `line_hash`; `prev_hash` carries the
//! previous line's hash, so editing or dropping a line breaks the chain.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::canonical::{self, sha256_hex};
use crate::model::{Decision, RegimeId};

pub const AUDIT_FORMAT_VERSION: u32 = 1;
pub const RUN_MANIFEST_FORMAT_VERSION: u32 = 1;
pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("audit line {line}: {reason}")]
    Broken { line: usize, reason: String },
}

/// What happened, without chain fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AuditEvent {
    pub command: String,
    pub artifact_sha256: Option<String>,
    pub proof_hash: Option<String>,
    pub regime: Option<RegimeId>,
    pub decision: Option<Decision>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub format_version: u32,
    pub seq: u64,
    pub timestamp: String,
    #[serde(flatten)]
    pub event: AuditEvent,
    pub prev_hash: String,
    pub line_hash: String,
}

#[derive(Serialize)]
struct Unhashed<'a> {
    format_version: u32,
    seq: u64,
    timestamp: &'a str,
    #[serde(flatten)]
    event: &'a AuditEvent,
    prev_hash: &'a str,
}

impl AuditRecord {
    fn compute_hash(&self) -> String {
        let body = Unhashed {
            format_version: self.format_version,
            seq: self.seq,
            timestamp: &self.timestamp,
            event: &self.event,
            prev_hash: &self.prev_hash,
        };
        sha256_hex(canonical::to_canonical_string(&body).expect("serializable").as_bytes())
    }
}

pub fn timestamp(at: DateTime<Utc>) -> String {
    at.to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> AuditError + '_ {
    move |source| AuditError::Io { path: path.to_path_buf(), source }
}

/// Checks every line's hash and linkage; returns the last record.
pub fn verify_chain(path: &Path) -> Result<Option<AuditRecord>, AuditError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut prev: Option<AuditRecord> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let n = i + 1;
        let broken = |reason: String| AuditError::Broken { line: n, reason };
        let rec: AuditRecord = serde_json::from_str(&line).map_err(|e| broken(e.to_string()))?;
        let (want_prev, want_seq) = match &prev {
            Some(p) => (p.line_hash.as_str(), p.seq + 1),
            None => (GENESIS_HASH, 0),
        };
        if rec.prev_hash != want_prev {
            return Err(broken("prev_hash does not match the preceding line".into()));
        }
        if rec.seq != want_seq {
            return Err(broken(format!("seq {} where {} expected", rec.seq, want_seq)));
        }
        if rec.compute_hash() != rec.line_hash {
            return Err(broken("line_hash does not match content".into()));
        }
        prev = Some(rec);
    }
    Ok(prev)
}

/// Appends one event, chaining it to the current tail. The existing chain is
/// verified first; a broken log is never extended.
pub fn append(path: &Path, event: AuditEvent, at: DateTime<Utc>) -> Result<AuditRecord, AuditError> {
    let tail = verify_chain(path)?;
    let mut rec = AuditRecord {
        format_version: AUDIT_FORMAT_VERSION,
        seq: tail.as_ref().map_or(0, |t| t.seq + 1),
        timestamp: timestamp(at),
        event,
        prev_hash: tail.map_or_else(|| GENESIS_HASH.to_string(), |t| t.line_hash),
        line_hash: String::new(),
    };
    rec.line_hash = rec.compute_hash();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
    canonical::write_json_line(&mut f, &rec).and_then(|_| f.flush()).map_err(io_err(path))?;
    Ok(rec)
}

/// One per command execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    /// SHA-256 over the canonical serialization of the effective config.
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timestamp: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_sha256: String, seed: Option<u64>, at: DateTime<Utc>) -> Self {
        RunManifest {
            format_version: RUN_MANIFEST_FORMAT_VERSION,
            command: command.to_string(),
            config_sha256,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp(at),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Where the manifest for output `out` lives: a `.run.json` sibling.
    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "out".into());
        name.push(".run.json");
        out.with_file_name(name)
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut f = File::create(path)?;
        canonical::write_json_line(&mut f, self)?;
        f.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn at(s: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_772_323_200 + s, 0).unwrap()
    }

    fn event(d: Decision) -> AuditEvent {
        AuditEvent {
            command: "verify".into(),
            artifact_sha256: Some("ab".repeat(32)),
            regime: Some(RegimeId::Product),
            decision: Some(d),
            ..Default::default()
        }
    }

    #[test]
    fn chain_links_and_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("logs/audit.jsonl");
        let a = append(&p, event(Decision::Accept), at(0)).unwrap();
        let b = append(&p, event(Decision::Reject), at(1)).unwrap();
        assert_eq!(a.prev_hash, GENESIS_HASH);
        assert_eq!(b.prev_hash, a.line_hash);
        assert_eq!((a.seq, b.seq), (0, 1));
        assert_eq!(verify_chain(&p).unwrap().unwrap(), b);
        assert_eq!(a.timestamp, "2026-03-01T00:00:00.000Z");
    }

    #[test]
    fn tampering_is_detected_and_blocks_appends() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("audit.jsonl");
        for i in 0..3 {
            append(&p, event(Decision::Reject), at(i)).unwrap();
        }
        let text = fs::read_to_string(&p).unwrap();
        fs::write(&p, text.replacen("REJECT", "ACCEPT", 1)).unwrap();
        assert!(matches!(verify_chain(&p), Err(AuditError::Broken { line: 1, .. })));
        assert!(append(&p, event(Decision::Accept), at(9)).is_err());

        let lines: Vec<&str> = text.lines().collect();
        fs::write(&p, format!("{}\n{}\n", lines[0], lines[2])).unwrap();
        assert!(matches!(verify_chain(&p), Err(AuditError::Broken { line: 2, .. })));
    }

    #[test]
    fn run_manifest_sits_beside_output() {
        assert_eq!(RunManifest::path_for(Path::new("out/records.jsonl")), PathBuf::from("out/records.jsonl.run.json"));
        assert_eq!(RunManifest::path_for(Path::new("bundle")), PathBuf::from("bundle.run.json"));
        let m = RunManifest::new("simulate", "00".repeat(32), Some(5), at(0));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.write(&p).unwrap();
        let back: RunManifest = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
