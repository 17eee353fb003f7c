use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::Parser;
use tempfile::TempDir;

use proofkit::audit::verify_chain;
use proofkit::calibrate::CalibrationResult;
use proofkit::canonical::read_json_lines;
use proofkit::manifest::TrustStore;
use proofkit::model::{Decision, Partition, RegimeId, ScoreRecord, Tier};
use proofkit::report::ReportBundle;
use proofkit_cli::{exit, fixture, run, Cli, CliError, FsInputs, Inputs};

const FIXTURE_AT: &str = "2026-10-15T00:00:00Z";
const VERIFY_AT: &str = "2026-10-15T01:00:00Z";

fn proofkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proofkit"))
        .args(args)
        .env_remove("PROOFKIT_CONFIG")
        .env("SOURCE_DATE_EPOCH", "1772323200")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> u8 {
    o.status.code().expect("exited") as u8
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fx {
    dir: TempDir,
}

impl Fx {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let o = proofkit(&["fixture", "--out", s(&dir.path().join("fx")), "--at", FIXTURE_AT]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        Fx { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join("fx").join(name)
    }

    fn audit(&self) -> PathBuf {
        self.dir.path().join("audit.jsonl")
    }

    fn verify(&self, regime: &str, manifest: bool, evidence: Option<&str>, extra: &[&str]) -> Output {
        let (art, ts, audit) = (self.path(fixture::ARTIFACT), self.path(fixture::TRUST_STORE), self.audit());
        let man = self.path(fixture::MANIFEST);
        let ev = evidence.map(|e| self.path(e));
        let mut args = vec!["verify", "--artifact", s(&art), "--regime", regime, "--trust-store", s(&ts)];
        args.extend(["--audit-log", s(&audit)]);
        if manifest {
            args.extend(["--manifest", s(&man)]);
        }
        if let Some(e) = &ev {
            args.extend(["--scores", s(e)]);
        }
        if !extra.contains(&"--at") {
            args.extend(["--at", VERIFY_AT]);
        }
        args.extend(extra);
        proofkit(&args)
    }
}

fn verdict(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn strong_fixture_accepts_under_nonkinetic_regime() {
    let fx = Fx::new();
    let o = fx.verify("OPLAW-nonkinetic", true, Some(fixture::EVIDENCE_STRONG), &[]);
    assert_eq!(code(&o), exit::ACCEPT);
    let v = verdict(&o);
    assert_eq!(v["decision"], "ACCEPT");
    // 1 − 0.55·(1 − 0.35·0.9999)·0.8, posterior equals L at prior 0.5
    let p = v["statistic"]["value"].as_f64().unwrap();
    assert!((p - 0.713_984_6).abs() < 1e-9 && p >= 0.70);
    assert_eq!(v["prior"], 0.5);
}

#[test]
fn stripped_manifest_with_zero_watermark_rejects_under_product() {
    let fx = Fx::new();
    let o = fx.verify("PRODUCT", false, Some(fixture::EVIDENCE_ZERO), &[]);
    assert_eq!(code(&o), exit::REJECT);
    assert_eq!(verdict(&o)["combined_score"], 0.0);
}

#[test]
fn oplaw_below_threshold_defers() {
    let fx = Fx::new();
    let o = fx.verify("OPLAW-populated", true, Some(fixture::EVIDENCE_STRONG), &[]);
    assert_eq!(code(&o), exit::DEFER);
    let v = verdict(&o);
    assert!(v["combined_score"].as_f64().unwrap() <= v["ceiling"].as_f64().unwrap());
}

#[test]
fn stale_trust_data_zeroes_provenance() {
    let fx = Fx::new();
    let fresh = fx.verify("PRODUCT", true, None, &[]);
    assert_eq!(verdict(&fresh)["combined_score"], 0.35);
    let stale = fx.verify("PRODUCT", true, None, &["--at", "2026-10-16T00:00:01Z"]);
    assert_eq!(code(&stale), exit::REJECT);
    assert_eq!(verdict(&stale)["combined_score"], 0.0);
    let log = fs::read_to_string(fx.audit()).unwrap();
    assert!(log.lines().last().unwrap().contains("provenance=STALE_TRUST"));
}

#[test]
fn tampered_artifact_breaks_hash_binding() {
    let fx = Fx::new();
    let art = fx.path(fixture::ARTIFACT);
    let mut bytes = fs::read(&art).unwrap();
    bytes[0] ^= 0x80;
    fs::write(&art, bytes).unwrap();
    let o = fx.verify("OPLAW-nonkinetic", true, Some(fixture::EVIDENCE_STRONG), &[]);
    assert_eq!(code(&o), exit::DEFER);
    let log = fs::read_to_string(fx.audit()).unwrap();
    assert!(log.contains("provenance=HASH_MISMATCH attestation=DIGEST_MISMATCH"));
}

#[test]
fn verify_usage_and_input_errors() {
    let fx = Fx::new();
    let missing = fx.dir.path().join("absent.toml");
    let art = fx.path(fixture::ARTIFACT);
    let o = proofkit(&["verify", "--artifact", s(&art), "--regime", "PRODUCT", "--trust-store", s(&missing)]);
    assert_eq!(code(&o), exit::NO_INPUT);
    assert!(!o.stderr.is_empty());
    let o = proofkit(&["verify", "--artifact", s(&art), "--regime", "PRODUCT"]);
    assert_eq!(code(&o), exit::USAGE);
    let o = fx.verify("MARTIAL", true, None, &[]);
    assert_eq!(code(&o), exit::USAGE);
    let o = fx.verify("OPLAW-populated", true, None, &["--prior", "1.5"]);
    assert_eq!(code(&o), exit::USAGE);
    fs::write(fx.path(fixture::TRUST_STORE), "format_version = 1\n").unwrap();
    let o = fx.verify("PRODUCT", true, None, &[]);
    assert_eq!(code(&o), exit::DATA);
    assert!(code(&proofkit(&["frobnicate"])) >= 64);
}

#[test]
fn audit_log_chains_every_verification() {
    let fx = Fx::new();
    for regime in ["PRODUCT", "DOMESTIC", "OPLAW-uninhabited"] {
        fx.verify(regime, true, Some(fixture::EVIDENCE_STRONG), &[]);
    }
    let tail = verify_chain(&fx.audit()).unwrap().unwrap();
    assert_eq!(tail.seq, 2);
    assert_eq!(tail.event.regime, Some(RegimeId::OplawUninhabited));
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.dir.path().join("audit.jsonl.run.json")).unwrap()).unwrap();
    assert_eq!(run["command"], "verify");
    assert_eq!(run["timestamp"], "2026-03-01T00:00:00.000Z");
}

#[test]
fn config_env_var_sets_default_config() {
    let fx = Fx::new();
    let shipped = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/regimes.toml")).unwrap();
    let strict = shipped.replace("tau = 0.70\nprior = 0.5\n[regime.cost]\naccept = { synthetic-marked = 0.0, natural = 1.0 }\nreject = { synthetic-marked = 3.0", "tau = 0.80\nprior = 0.5\n[regime.cost]\naccept = { synthetic-marked = 0.0, natural = 1.0 }\nreject = { synthetic-marked = 3.0");
    assert_ne!(strict, shipped);
    let cfg = fx.dir.path().join("strict.toml");
    fs::write(&cfg, strict).unwrap();

    let base = fx.verify("PRODUCT", true, Some(fixture::EVIDENCE_STRONG), &[]);
    assert_eq!(code(&base), exit::ACCEPT);
    let (art, ts, man, ev) = (
        fx.path(fixture::ARTIFACT),
        fx.path(fixture::TRUST_STORE),
        fx.path(fixture::MANIFEST),
        fx.path(fixture::EVIDENCE_STRONG),
    );
    let audit = fx.audit();
    let o = Command::new(env!("CARGO_BIN_EXE_proofkit"))
        .args(["verify", "--artifact", s(&art), "--manifest", s(&man), "--scores", s(&ev), "--regime", "PRODUCT"])
        .args(["--trust-store", s(&ts), "--at", VERIFY_AT, "--audit-log", s(&audit)])
        .env("PROOFKIT_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), exit::REJECT);
}

fn simulate(dir: &Path, name: &str, n: usize, seed: u64) -> PathBuf {
    let out = dir.join(name);
    let o = proofkit(&[
        "simulate",
        "--items-per-generator",
        &n.to_string(),
        "--null-reference",
        "20000",
        "--seed",
        &seed.to_string(),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn records(path: &Path) -> Vec<ScoreRecord> {
    read_json_lines(std::io::BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

fn write_records(path: &Path, recs: &[ScoreRecord]) {
    let mut f = fs::File::create(path).unwrap();
    proofkit::canonical::write_json_lines(&mut f, recs).unwrap();
}

#[test]
fn simulate_is_deterministic_and_covers_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.jsonl", 3, 11);
    let b = simulate(dir.path(), "b.jsonl", 3, 11);
    let c = simulate(dir.path(), "c.jsonl", 3, 12);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let one = simulate(dir.path(), "one.jsonl", 1, 11);
    let recs = records(&one);
    let mut cells = BTreeMap::new();
    for r in recs.iter().filter(|r| r.ground_truth().is_marked()) {
        *cells.entry((r.modality(), r.generator().to_string(), r.variant())).or_insert(0) += 1;
    }
    assert_eq!(cells.len(), 3 * 2 * 8);
    assert!(cells.values().all(|&c| c == 1));
    assert!(recs.iter().all(|r| r.partition().is_some()));
    assert!(dir.path().join("one.jsonl.run.json").exists());
}

#[test]
fn calibrate_writes_results_and_guards_leakage() {
    let dir = tempfile::tempdir().unwrap();
    let recs_path = simulate(dir.path(), "rec.jsonl", 20, 5);
    let out = dir.path().join("cal.jsonl");
    let o = proofkit(&["calibrate", "--records", s(&recs_path), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<CalibrationResult> = read_json_lines(std::io::BufReader::new(fs::File::open(&out).unwrap())).unwrap();
    assert_eq!(rows.iter().map(|r| r.regime).collect::<Vec<_>>(), RegimeId::ALL.to_vec());
    assert!(rows.iter().all(|r| r.candidates == 231));
    assert!(fs::read_to_string(dir.path().join("cal.txt")).unwrap().contains("Domestic admissibility"));

    // one item split across partitions
    let mut recs = records(&recs_path);
    let mut moved = recs.iter().find(|r| r.partition() == Some(Partition::Test)).unwrap().clone();
    let raw: serde_json::Value = serde_json::to_value(&moved).unwrap();
    let mut raw = raw.as_object().unwrap().clone();
    raw.insert("partition".into(), "calibration".into());
    moved = serde_json::from_value(raw.into()).unwrap();
    recs.push(moved);
    let leaky = dir.path().join("leaky.jsonl");
    write_records(&leaky, &recs);
    let o = proofkit(&["calibrate", "--records", s(&leaky), "--out", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(code(&o), exit::DATA);
    assert!(String::from_utf8_lossy(&o.stderr).contains("both partitions"));

    // untagged records need a ratio
    let untagged: Vec<ScoreRecord> = records(&recs_path).into_iter().map(strip_partition).collect();
    let bare = dir.path().join("bare.jsonl");
    write_records(&bare, &untagged);
    let o = proofkit(&["calibrate", "--records", s(&bare), "--out", s(&dir.path().join("y.jsonl"))]);
    assert_eq!(code(&o), exit::DATA);
    let o = proofkit(&["calibrate", "--records", s(&bare), "--ratio", "0.8", "--out", s(&dir.path().join("y.jsonl"))]);
    assert_eq!(code(&o), 0);
    let o = proofkit(&["calibrate", "--records", s(&recs_path), "--resolution", "0.3", "--out", s(&dir.path().join("z.jsonl"))]);
    assert_eq!(code(&o), exit::USAGE);
}

fn strip_partition(r: ScoreRecord) -> ScoreRecord {
    let mut v = serde_json::to_value(&r).unwrap();
    v.as_object_mut().unwrap().remove("partition");
    serde_json::from_value(v).unwrap()
}

#[test]
fn evaluate_bundle_is_byte_stable_and_flags_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let recs_path = simulate(dir.path(), "rec.jsonl", 40, 9);
    let eval = |recs: &Path, out: &Path| {
        proofkit(&["evaluate", "--records", s(recs), "--resamples", "200", "--out", s(out)])
    };
    let (b1, b2) = (dir.path().join("b1"), dir.path().join("b2"));
    assert_eq!(code(&eval(&recs_path, &b1)), 0);
    assert_eq!(code(&eval(&recs_path, &b2)), 0);
    for f in proofkit::report::BUNDLE_FILES {
        assert_eq!(fs::read(b1.join(f)).unwrap(), fs::read(b2.join(f)).unwrap(), "{f}");
    }
    assert!(dir.path().join("b1.run.json").exists());

    let o = proofkit(&["report", "--bundle", s(&b1)]);
    assert_eq!(code(&o), 0);
    assert_eq!(o.stdout, fs::read(b1.join("tables.txt")).unwrap());

    let no_t4: Vec<ScoreRecord> = records(&recs_path).into_iter().filter(|r| r.tier() != Tier::T4).collect();
    let gappy = dir.path().join("gappy.jsonl");
    write_records(&gappy, &no_t4);
    let b3 = dir.path().join("b3");
    assert_eq!(code(&eval(&gappy, &b3)), exit::INCOMPLETE);
    let bundle = ReportBundle::read_from(&b3).unwrap();
    assert!(!bundle.missing.is_empty());
    assert_eq!(code(&proofkit(&["report", "--bundle", s(&b3)])), exit::INCOMPLETE);

    let cal_only: Vec<ScoreRecord> =
        records(&recs_path).into_iter().filter(|r| r.partition() == Some(Partition::Calibration)).collect();
    let no_test = dir.path().join("no-test.jsonl");
    write_records(&no_test, &cal_only);
    let o = eval(&no_test, &dir.path().join("b4"));
    assert_eq!(code(&o), exit::DATA);
    assert!(String::from_utf8_lossy(&o.stderr).contains("test partition"));

    assert_eq!(code(&proofkit(&["report", "--bundle", s(&dir.path().join("nowhere"))])), exit::NO_INPUT);
    let blocked = dir.path().join("rec.jsonl").join("bundle");
    assert_eq!(code(&eval(&recs_path, &blocked)), exit::CANT_CREATE);
}

#[test]
fn evaluate_uses_calibrated_weights_when_given() {
    let dir = tempfile::tempdir().unwrap();
    let recs = simulate(dir.path(), "rec.jsonl", 20, 4);
    let cal = dir.path().join("cal.jsonl");
    assert_eq!(code(&proofkit(&["calibrate", "--records", s(&recs), "--out", s(&cal)])), 0);
    let out = dir.path().join("bundle");
    let o = proofkit(&["evaluate", "--records", s(&recs), "--weights", s(&cal), "--resamples", "100", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let b = ReportBundle::read_from(&out).unwrap();
    assert!(b.weights.iter().all(|w| w.regret.is_some()));
}

/// Loader whose trust store and benchmark readers fail loudly.
struct Fenced {
    no_trust: bool,
    no_benchmark: bool,
}

impl Inputs for Fenced {
    fn read(&self, path: &Path) -> Result<Vec<u8>, CliError> {
        FsInputs.read(path)
    }

    fn trust_store(&self, path: &Path) -> Result<TrustStore, CliError> {
        assert!(!self.no_trust, "trust store read by a command that must not need it");
        FsInputs.trust_store(path)
    }

    fn records(&self, path: &Path) -> Result<Vec<ScoreRecord>, CliError> {
        assert!(!self.no_benchmark, "benchmark records read by verify");
        FsInputs.records(path)
    }

    fn calibrations(&self, path: &Path) -> Result<BTreeMap<RegimeId, CalibrationResult>, CliError> {
        assert!(!self.no_benchmark, "calibration results read by verify");
        FsInputs.calibrations(path)
    }

    fn bundle(&self, dir: &Path) -> Result<ReportBundle, CliError> {
        assert!(!self.no_benchmark, "report bundle read by verify");
        FsInputs.bundle(dir)
    }
}

#[test]
fn verify_and_evaluate_touch_disjoint_inputs() {
    let fx = Fx::new();
    let (art, ts, man, audit) =
        (fx.path(fixture::ARTIFACT), fx.path(fixture::TRUST_STORE), fx.path(fixture::MANIFEST), fx.audit());
    let cli = Cli::try_parse_from([
        "proofkit", "verify", "--artifact", s(&art), "--manifest", s(&man), "--regime", "DOMESTIC",
        "--trust-store", s(&ts), "--at", VERIFY_AT, "--audit-log", s(&audit),
    ])
    .unwrap();
    let mut out = Vec::new();
    let code = run(&cli, &Fenced { no_trust: false, no_benchmark: true }, &mut out).unwrap();
    assert_eq!(proofkit_cli::decision_of(code), Some(Decision::Reject));

    let recs = simulate(fx.dir.path(), "rec.jsonl", 10, 2);
    let bundle = fx.dir.path().join("bundle");
    let cli = Cli::try_parse_from([
        "proofkit", "evaluate", "--records", s(&recs), "--resamples", "100", "--out", s(&bundle),
    ])
    .unwrap();
    let code = run(&cli, &Fenced { no_trust: true, no_benchmark: false }, &mut Vec::new()).unwrap();
    assert!(code == exit::ACCEPT || code == exit::INCOMPLETE);
}

#[test]
fn failing_loader_surfaces_as_io_error() {
    struct Broken;
    impl Inputs for Broken {
        fn read(&self, path: &Path) -> Result<Vec<u8>, CliError> {
            Err(CliError::new(exit::IO, format!("{}: device unavailable", path.display())))
        }
    }
    let cli = Cli::try_parse_from(["proofkit", "verify", "--artifact", "a", "--regime", "PRODUCT", "--trust-store", "t"])
        .unwrap();
    let err = run(&cli, &Broken, &mut Vec::new()).unwrap_err();
    assert_eq!(err.code, exit::IO);
}

#[test]
fn full_synthetic_run_reproduces_combined_tier_two() {
    let dir = tempfile::tempdir().unwrap();
    let recs = dir.path().join("rec.jsonl");
    assert_eq!(code(&proofkit(&["simulate", "--out", s(&recs)])), 0);
    let out = dir.path().join("bundle");
    assert_eq!(code(&proofkit(&["evaluate", "--records", s(&recs), "--out", s(&out)])), 0);
    let b = ReportBundle::read_from(&out).unwrap();
    let cell = b.detection_cell("combined-ds", Tier::T2).unwrap();
    assert!((cell.tpr - 0.921).abs() <= 0.02, "{}", cell.tpr);
}
