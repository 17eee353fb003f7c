//! `proofkit` command line: argument model, on-disk formats and exit codes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use proofkit::audit::{self, AuditEvent, RunManifest};
use proofkit::benchmark::{simulate, SimulationConfig};
use proofkit::calibrate::{
    assign_partitions, calibrate_all, check_partitions, CalibrateError, CalibrationOptions, CalibrationResult,
};
use proofkit::canonical::{self, sha256_hex};
use proofkit::decide::decide_proof;
use proofkit::detect::{DetectorSet, DEFAULT_FPR};
use proofkit::manifest::{
    verify_attestation, verify_provenance_bytes, Assertion, AttestationStatement, DigestAlg, KeyPair, Manifest,
    TrustStore,
};
use proofkit::model::{
    AttestationRef, Decision, LaunderingDescriptor, Partition, ProofObject, ProvenanceRef, RegimeConfig, RegimeId,
    ScoreRecord, WatermarkScore,
};
use proofkit::par::Exec;
use proofkit::report::{evaluate, render_calibration, render_text, EvaluateOptions, ReportBundle, ReportError};
use proofkit::seed::DEFAULT_SEED;
use proofkit::stats::BootstrapConfig;

/// Process exit codes. Verdicts map to 0/10/20; everything else is an error
/// class from the BSD `sysexits` range.
pub mod exit {
    use proofkit::model::Decision;

    pub const ACCEPT: u8 = 0;
    pub const REJECT: u8 = 10;
    pub const DEFER: u8 = 20;
    pub const USAGE: u8 = 64;
    pub const DATA: u8 = 65;
    pub const NO_INPUT: u8 = 66;
    /// A report grid has cells that could not be estimated.
    pub const INCOMPLETE: u8 = 68;
    pub const CANT_CREATE: u8 = 73;
    pub const IO: u8 = 74;

    pub fn for_decision(d: Decision) -> u8 {
        match d {
            Decision::Accept => ACCEPT,
            Decision::Reject => REJECT,
            Decision::Defer => DEFER,
        }
    }
}

pub const EVIDENCE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_AUDIT_LOG: &str = "proofkit-audit.jsonl";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    fn usage(m: impl fmt::Display) -> Self {
        CliError::new(exit::USAGE, m.to_string())
    }

    fn data(m: impl fmt::Display) -> Self {
        CliError::new(exit::DATA, m.to_string())
    }

    fn read(path: &Path, e: io::Error) -> Self {
        let code = if e.kind() == io::ErrorKind::NotFound { exit::NO_INPUT } else { exit::IO };
        CliError::new(code, format!("{}: {e}", path.display()))
    }

    fn create(path: &Path, e: io::Error) -> Self {
        CliError::new(exit::CANT_CREATE, format!("{}: {e}", path.display()))
    }

    fn write(path: &Path, e: io::Error) -> Self {
        CliError::new(exit::IO, format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CalibrateError> for CliError {
    fn from(e: CalibrateError) -> Self {
        match e {
            CalibrateError::Resolution(_) | CalibrateError::Ratio(_) => CliError::usage(e),
            _ => CliError::data(e),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { path, source } => CliError::read(&path, source),
            other => CliError::data(other),
        }
    }
}

/// Watermark and attestation evidence handed to `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceFile {
    pub format_version: u32,
    #[serde(default)]
    pub watermarks: Vec<WatermarkScore>,
    #[serde(default)]
    pub attestation: Option<AttestationStatement>,
    /// Unmodified when absent.
    #[serde(default)]
    pub laundering: Option<LaunderingDescriptor>,
}

/// Every input the commands read. Each loader has a default built on
/// [`Inputs::read`]; tests override single loaders to prove which command
/// touches which input.
pub trait Inputs {
    fn read(&self, path: &Path) -> Result<Vec<u8>, CliError>;

    fn read_text(&self, path: &Path) -> Result<String, CliError> {
        String::from_utf8(self.read(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    fn trust_store(&self, path: &Path) -> Result<TrustStore, CliError> {
        TrustStore::from_toml(&self.read_text(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    fn records(&self, path: &Path) -> Result<Vec<ScoreRecord>, CliError> {
        jsonl(&self.read(path)?, path)
    }

    fn calibrations(&self, path: &Path) -> Result<BTreeMap<RegimeId, CalibrationResult>, CliError> {
        let rows: Vec<CalibrationResult> = jsonl(&self.read(path)?, path)?;
        let mut out = BTreeMap::new();
        for r in rows {
            if out.insert(r.regime, r).is_some() {
                return Err(CliError::data(format!("{}: duplicate regime", path.display())));
            }
        }
        Ok(out)
    }

    fn regime_config(&self, path: Option<&Path>) -> Result<RegimeConfig, CliError> {
        match path {
            None => Ok(RegimeConfig::shipped()),
            Some(p) => RegimeConfig::from_toml(&self.read_text(p)?).map_err(|e| CliError::data(format!("{}: {e}", p.display()))),
        }
    }

    fn detector_config(&self, path: Option<&Path>) -> Result<DetectorSet, CliError> {
        match path {
            None => Ok(DetectorSet::shipped()),
            Some(p) => DetectorSet::from_toml(&self.read_text(p)?).map_err(|e| CliError::data(format!("{}: {e}", p.display()))),
        }
    }

    fn evidence(&self, path: &Path) -> Result<EvidenceFile, CliError> {
        let e: EvidenceFile =
            serde_json::from_slice(&self.read(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if e.format_version != EVIDENCE_FORMAT_VERSION {
            return Err(CliError::data(format!("{}: unsupported format_version {}", path.display(), e.format_version)));
        }
        Ok(e)
    }

    fn bundle(&self, dir: &Path) -> Result<ReportBundle, CliError> {
        Ok(ReportBundle::read_from(dir)?)
    }
}

fn jsonl<T: serde::de::DeserializeOwned>(bytes: &[u8], path: &Path) -> Result<Vec<T>, CliError> {
    canonical::read_json_lines(BufReader::new(bytes)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// The real filesystem.
#[derive(Debug, Clone, Copy, Default)]
pub struct FsInputs;

impl Inputs for FsInputs {
    fn read(&self, path: &Path) -> Result<Vec<u8>, CliError> {
        fs::read(path).map_err(|e| CliError::read(path, e))
    }
}

#[derive(Debug, Parser)]
#[command(name = "proofkit", version, about = "Provenance verification and regime-calibrated verdicts for synthetic media")]
pub struct Cli {
    /// Regime config (TOML). The shipped config is used when absent.
    #[arg(long, global = true, env = "PROOFKIT_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify one artifact and print a verdict.
    Verify(VerifyArgs),
    /// Generate a synthetic benchmark as score records.
    Simulate(SimulateArgs),
    /// Grid-search combiner weights per regime on the calibration partition.
    Calibrate(CalibrateArgs),
    /// Evaluate the test partition into a report bundle.
    Evaluate(EvaluateArgs),
    /// Render a report bundle as text.
    Report(ReportArgs),
    /// Write a signed demonstration fixture set.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Evidence file with watermark scores and an optional attestation.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub regime: RegimeId,
    #[arg(long)]
    pub trust_store: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub prior: f64,
    /// Evaluation time (RFC 3339); now when absent.
    #[arg(long)]
    pub at: Option<DateTime<Utc>>,
    #[arg(long, default_value = DEFAULT_AUDIT_LOG)]
    pub audit_log: PathBuf,
    /// Also write the verdict here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Detector config (TOML). The shipped config is used when absent.
    #[arg(long)]
    pub detectors: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub items_per_generator: usize,
    /// Natural items per modality; five per marked item when absent.
    #[arg(long)]
    pub naturals: Option<usize>,
    #[arg(long, default_value_t = 200_000)]
    pub null_reference: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Calibration share of the item-level split.
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub resolution: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Partition untagged records with this calibration share.
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Calibration results (JSON Lines); regime config weights when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Bootstrap seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = DEFAULT_FPR)]
    pub fpr: f64,
    /// Partition untagged records with this calibration share.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Bundle directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Write the text here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Trust store update time (RFC 3339); now when absent.
    #[arg(long)]
    pub at: Option<DateTime<Utc>>,
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

/// Wall clock for run manifests; `SOURCE_DATE_EPOCH` pins it.
fn run_clock() -> DateTime<Utc> {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| Utc.timestamp_opt(s, 0).single())
        .unwrap_or_else(Utc::now)
}

fn writer(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::create(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::create(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), CliError> {
    let mut w = writer(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::write(path, e))
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::new(exit::IO, format!("stdout: {e}")))
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

struct Run {
    manifest: RunManifest,
    path: PathBuf,
}

impl Run {
    fn new(command: &str, config_sha256: String, seed: Option<u64>, manifest_path: PathBuf) -> Self {
        Run { manifest: RunManifest::new(command, config_sha256, seed, run_clock()), path: manifest_path }
    }

    fn input(&mut self, p: &Path) {
        self.manifest.inputs.push(display(p));
    }

    fn output(&mut self, p: &Path) {
        self.manifest.outputs.push(display(p));
    }

    fn finish(self) -> Result<(), CliError> {
        let path = self.path.clone();
        write_file(&path, |w| canonical::write_json_line(w, &self.manifest))
    }
}

fn config_hash(cfg: &RegimeConfig) -> Result<String, CliError> {
    cfg.canonical_hash().map_err(CliError::data)
}

/// Runs one command; returns the exit code on success.
pub fn run(cli: &Cli, inputs: &dyn Inputs, out: &mut dyn Write) -> Result<u8, CliError> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Verify(a) => cmd_verify(a, config, inputs, out),
        Command::Simulate(a) => cmd_simulate(a, inputs, out),
        Command::Calibrate(a) => cmd_calibrate(a, config, inputs, out),
        Command::Evaluate(a) => cmd_evaluate(a, config, inputs, out),
        Command::Report(a) => cmd_report(a, inputs, out),
        Command::Fixture(a) => cmd_fixture(a, out),
    }
}

pub fn cmd_verify(a: &VerifyArgs, config: Option<&Path>, inputs: &dyn Inputs, out: &mut dyn Write) -> Result<u8, CliError> {
    let cfg = inputs.regime_config(config)?;
    let profile = cfg.profile_or_default(a.regime).with_prior(a.prior).map_err(CliError::usage)?;
    let trust = inputs.trust_store(&a.trust_store)?;
    let payload = inputs.read(&a.artifact)?;
    let manifest = a.manifest.as_deref().map(|p| inputs.read(p)).transpose()?;
    let evidence = a.scores.as_deref().map(|p| inputs.evidence(p)).transpose()?;
    let now = a.at.unwrap_or_else(Utc::now);

    let provenance = manifest.as_deref().map(|bytes| {
        let o = verify_provenance_bytes(Some(bytes), &payload, &trust, now);
        ProvenanceRef { manifest_sha256: sha256_hex(bytes), status: o.status.as_str().into(), unit_score: o.score }
    });
    let (watermarks, statement, laundering) = match evidence {
        Some(e) => (e.watermarks, e.attestation, e.laundering),
        None => (Vec::new(), None, None),
    };
    let attestation = statement.map(|s| {
        let o = verify_attestation(Some(&s), &payload, &trust, now);
        AttestationRef {
            model_id: s.model_id,
            signer_key_id: s.signer_key_id,
            status: o.status.as_str().into(),
            unit_score: o.score,
        }
    });
    let detail = format!(
        "provenance={} attestation={} watermarks={}",
        provenance.as_ref().map_or("MANIFEST_ABSENT", |p| p.status.as_str()),
        attestation.as_ref().map_or("ABSENT", |p| p.status.as_str()),
        watermarks.len()
    );
    let proof = ProofObject::new(provenance, watermarks, attestation, laundering.unwrap_or_else(LaunderingDescriptor::unmodified))
        .map_err(CliError::data)?;
    let verdict = decide_proof(&proof, &profile, now).map_err(CliError::data)?;

    let line = canonical::to_canonical_string(&verdict).map_err(CliError::data)? + "\n";
    say(out, &line)?;
    let manifest_path = RunManifest::path_for(a.out.as_deref().unwrap_or(&a.audit_log));
    let mut run = Run::new("verify", config_hash(&cfg)?, None, manifest_path);
    for p in [Some(&a.artifact), a.manifest.as_ref(), a.scores.as_ref(), Some(&a.trust_store)].into_iter().flatten() {
        run.input(p);
    }
    if let Some(p) = &a.out {
        write_file(p, |w| w.write_all(line.as_bytes()))?;
        run.output(p);
    }
    let event = AuditEvent {
        command: "verify".into(),
        artifact_sha256: Some(sha256_hex(&payload)),
        proof_hash: Some(verdict.proof_hash().to_string()),
        regime: Some(a.regime),
        decision: Some(verdict.decision()),
        detail: Some(detail),
    };
    audit::append(&a.audit_log, event, now).map_err(|e| match e {
        audit::AuditError::Io { path, source } => CliError::create(&path, source),
        broken => CliError::data(broken),
    })?;
    run.output(&a.audit_log);
    run.finish()?;
    Ok(exit::for_decision(verdict.decision()))
}

pub fn cmd_simulate(a: &SimulateArgs, inputs: &dyn Inputs, out: &mut dyn Write) -> Result<u8, CliError> {
    let detectors = inputs.detector_config(a.detectors.as_deref())?;
    let cfg = SimulationConfig {
        items_per_generator: a.items_per_generator,
        naturals_per_modality: a.naturals,
        null_reference_size: a.null_reference,
        seed: a.seed,
    };
    let mut records = simulate(&cfg, &detectors, exec(a.sequential)).map_err(CliError::data)?;
    assign_partitions(&mut records, a.ratio, a.seed)?;
    write_file(&a.out, |w| canonical::write_json_lines(w, &records))?;

    let hash = sha256_hex(canonical::to_canonical_string(&detectors).map_err(CliError::data)?.as_bytes());
    let mut run = Run::new("simulate", hash, Some(a.seed), RunManifest::path_for(&a.out));
    if let Some(p) = &a.detectors {
        run.input(p);
    }
    run.output(&a.out);
    run.finish()?;
    say(out, &format!("wrote {} records to {}\n", records.len(), a.out.display()))?;
    Ok(exit::ACCEPT)
}

/// Loads records and makes sure every one carries a partition tag.
fn partitioned(inputs: &dyn Inputs, path: &Path, ratio: Option<f64>, seed: u64) -> Result<Vec<ScoreRecord>, CliError> {
    let mut records = inputs.records(path)?;
    if records.is_empty() {
        return Err(CliError::data(format!("{}: no records", path.display())));
    }
    if let Some(r) = ratio {
        if records.iter().all(|r| r.partition().is_none()) {
            assign_partitions(&mut records, r, seed)?;
        }
    }
    check_partitions(&records)?;
    Ok(records)
}

pub fn cmd_calibrate(
    a: &CalibrateArgs,
    config: Option<&Path>,
    inputs: &dyn Inputs,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    let cfg = inputs.regime_config(config)?;
    let records = partitioned(inputs, &a.records, a.ratio, a.seed)?;
    let cal: Vec<ScoreRecord> = records.into_iter().filter(|r| r.partition() == Some(Partition::Calibration)).collect();
    let opts = CalibrationOptions { resolution: a.resolution, seed: a.seed, exec: exec(a.sequential) };
    let results = calibrate_all(&cal, &cfg, &opts)?;
    let rows: Vec<&CalibrationResult> = RegimeId::ALL.iter().filter_map(|id| results.get(id)).collect();
    write_file(&a.out, |w| canonical::write_json_lines(w, rows))?;
    let table = render_calibration(&results);
    let table_path = a.out.with_extension("txt");
    write_file(&table_path, |w| w.write_all(table.as_bytes()))?;

    let mut run = Run::new("calibrate", config_hash(&cfg)?, Some(a.seed), RunManifest::path_for(&a.out));
    run.input(&a.records);
    run.output(&a.out);
    run.output(&table_path);
    run.finish()?;
    say(out, &table)?;
    Ok(exit::ACCEPT)
}

pub fn cmd_evaluate(
    a: &EvaluateArgs,
    config: Option<&Path>,
    inputs: &dyn Inputs,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    let cfg = inputs.regime_config(config)?;
    let calibrations = a.weights.as_deref().map(|p| inputs.calibrations(p)).transpose()?;
    let records = partitioned(inputs, &a.records, a.ratio, a.seed)?;
    let bootstrap = BootstrapConfig { resamples: a.resamples, level: a.level, seed: a.seed, exec: exec(a.sequential) };
    if bootstrap.resamples < 100 || !(bootstrap.level > 0.0 && bootstrap.level < 1.0) {
        return Err(CliError::usage("need at least 100 resamples and a level in (0, 1)"));
    }
    let opts = EvaluateOptions { bootstrap, target_fpr: a.fpr, ..EvaluateOptions::default() };
    let bundle = evaluate(&records, &cfg, calibrations.as_ref(), &opts)?;
    let written = bundle.write_to(&a.out).map_err(|e| match e {
        ReportError::Io { path, source } => CliError::create(&path, source),
        other => CliError::data(other),
    })?;

    let mut run = Run::new("evaluate", config_hash(&cfg)?, Some(a.seed), RunManifest::path_for(&a.out));
    run.input(&a.records);
    if let Some(p) = &a.weights {
        run.input(p);
    }
    for p in &written {
        run.output(p);
    }
    run.finish()?;
    say(out, &render_text(&bundle))?;
    if bundle.is_complete() {
        Ok(exit::ACCEPT)
    } else {
        eprintln!("proofkit: {} report cells could not be estimated", bundle.missing.len());
        Ok(exit::INCOMPLETE)
    }
}

pub fn cmd_report(a: &ReportArgs, inputs: &dyn Inputs, out: &mut dyn Write) -> Result<u8, CliError> {
    let bundle = inputs.bundle(&a.bundle)?;
    let text = render_text(&bundle);
    let manifest_path = match &a.out {
        Some(p) => RunManifest::path_for(p),
        None => {
            let mut name = a.bundle.file_name().unwrap_or_default().to_os_string();
            name.push(".report.run.json");
            a.bundle.with_file_name(name)
        }
    };
    let hash = sha256_hex(canonical::to_canonical_string(&bundle.metadata).map_err(CliError::data)?.as_bytes());
    let mut run = Run::new("report", hash, Some(bundle.metadata.bootstrap.seed), manifest_path);
    run.input(&a.bundle);
    match &a.out {
        Some(p) => {
            write_file(p, |w| w.write_all(text.as_bytes()))?;
            run.output(p);
        }
        None => say(out, &text)?,
    }
    run.finish()?;
    Ok(if bundle.is_complete() { exit::ACCEPT } else { exit::INCOMPLETE })
}

/// Files written by `fixture`.
pub mod fixture {
    pub const TRUST_STORE: &str = "trust.toml";
    pub const ARTIFACT: &str = "artifact.bin";
    pub const MANIFEST: &str = "manifest.bin";
    pub const EVIDENCE_STRONG: &str = "evidence-strong.json";
    pub const EVIDENCE_ZERO: &str = "evidence-zero.json";
    pub const MODEL_ID: &str = "fixture-model";
}

pub fn cmd_fixture(a: &FixtureArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let at = a.at.unwrap_or_else(Utc::now);
    let key = |id: &str| KeyPair::derived(id, &format!("fixture/{}/{id}", a.seed));
    let (root, leaf, attester) = (key("fixture-root"), key("fixture-leaf"), key("fixture-attester"));
    let trust = TrustStore::new(
        [(root.key_id.clone(), root.public_key()), (attester.key_id.clone(), attester.public_key())],
        at,
    )
    .map_err(CliError::data)?;
    let payload = format!("proofkit fixture artifact, seed {}\n", a.seed).into_bytes();
    let manifest = Manifest::sign(
        DigestAlg::Sha256,
        &payload,
        vec![Assertion::new("generator", fixture::MODEL_ID)],
        &leaf,
        vec![root.issue_link(&leaf)],
    );
    let strong = EvidenceFile {
        format_version: EVIDENCE_FORMAT_VERSION,
        watermarks: vec![WatermarkScore { scheme: "fused-watermark".into(), raw: 6.0, unit: 0.9999 }],
        attestation: Some(AttestationStatement::sign(fixture::MODEL_ID, DigestAlg::Sha256, &payload, &attester)),
        laundering: None,
    };
    let zero = EvidenceFile {
        format_version: EVIDENCE_FORMAT_VERSION,
        watermarks: vec![WatermarkScore { scheme: "fused-watermark".into(), raw: 0.0, unit: 0.0 }],
        attestation: None,
        laundering: None,
    };
    let files: [(&str, Vec<u8>); 5] = [
        (fixture::TRUST_STORE, trust.to_toml().into_bytes()),
        (fixture::ARTIFACT, payload),
        (fixture::MANIFEST, manifest.to_bytes()),
        (fixture::EVIDENCE_STRONG, (canonical::to_canonical_string(&strong).map_err(CliError::data)? + "\n").into_bytes()),
        (fixture::EVIDENCE_ZERO, (canonical::to_canonical_string(&zero).map_err(CliError::data)? + "\n").into_bytes()),
    ];
    let mut run = Run::new("fixture", sha256_hex(b""), Some(a.seed), RunManifest::path_for(&a.out));
    for (name, bytes) in &files {
        let p = a.out.join(name);
        write_file(&p, |w| w.write_all(bytes))?;
        run.output(&p);
    }
    run.finish()?;
    say(out, &format!("wrote fixture set to {}\n", a.out.display()))?;
    Ok(exit::ACCEPT)
}

pub fn decision_of(code: u8) -> Option<Decision> {
    match code {
        exit::ACCEPT => Some(Decision::Accept),
        exit::REJECT => Some(Decision::Reject),
        exit::DEFER => Some(Decision::Defer),
        _ => None,
    }
}
