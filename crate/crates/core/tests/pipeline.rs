//! End-to-end runs over a small synthetic benchmark.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use chrono::{TimeZone, Utc};

use proofkit::benchmark::{simulate, SimulationConfig, COMBINED_LABEL};
use proofkit::calibrate::{assign_partitions, calibrate_all, check_partitions, CalibrationOptions, CalibrateError};
use proofkit::canonical::{read_json_lines, write_json_lines};
use proofkit::decide::decide_proof;
use proofkit::detect::DetectorSet;
use proofkit::model::{
    Decision, GroundTruth, LaunderingDescriptor, Partition, ProofObject, ProvenanceRef, RegimeConfig, RegimeId,
    ScoreRecord, Tier, WatermarkScore,
};
use proofkit::par::Exec;
use proofkit::report::{evaluate, render_text, EvaluateOptions, ReportBundle, ReportError, WeightSource};
use proofkit::stats::BootstrapConfig;

fn small() -> SimulationConfig {
    SimulationConfig { items_per_generator: 60, naturals_per_modality: Some(1500), null_reference_size: 20_000, seed: 7 }
}

fn records() -> &'static Vec<ScoreRecord> {
    static R: OnceLock<Vec<ScoreRecord>> = OnceLock::new();
    R.get_or_init(|| {
        let mut r = simulate(&small(), &DetectorSet::shipped(), Exec::Parallel).unwrap();
        assign_partitions(&mut r, 0.8, 7).unwrap();
        r
    })
}

fn opts(exec: Exec) -> EvaluateOptions {
    EvaluateOptions { bootstrap: BootstrapConfig { resamples: 200, exec, ..BootstrapConfig::default() }, ..Default::default() }
}

#[test]
fn simulation_is_schedule_independent() {
    let a = simulate(&small(), &DetectorSet::shipped(), Exec::Sequential).unwrap();
    let mut b = a.clone();
    assign_partitions(&mut b, 0.8, 7).unwrap();
    assert_eq!(&b, records());
    // 3 modalities x 2 generators x 60 items x 8 variants, plus naturals.
    let marked = a.iter().filter(|r| r.ground_truth() == GroundTruth::SyntheticMarked).count();
    assert_eq!(marked, 3 * 2 * 60 * 8);
    assert_eq!(a.len() - marked, 3 * 1500);
    check_partitions(records()).unwrap();
}

#[test]
fn records_round_trip_through_json_lines() {
    let mut buf = Vec::new();
    write_json_lines(&mut buf, records().iter().take(200)).unwrap();
    let back: Vec<ScoreRecord> = read_json_lines(&buf[..]).unwrap();
    assert_eq!(back, records()[..200]);
}

#[test]
fn calibration_refuses_test_items() {
    let all = records();
    let err = calibrate_all(all, &RegimeConfig::shipped(), &CalibrationOptions::default()).unwrap_err();
    assert!(matches!(err, CalibrateError::Leak(_)));

    let cal: Vec<ScoreRecord> = all.iter().filter(|r| r.partition() == Some(Partition::Calibration)).cloned().collect();
    let opts = CalibrationOptions { resolution: 0.1, ..Default::default() };
    let seq = calibrate_all(&cal, &RegimeConfig::shipped(), &CalibrationOptions { exec: Exec::Sequential, ..opts }).unwrap();
    let par = calibrate_all(&cal, &RegimeConfig::shipped(), &opts).unwrap();
    assert_eq!(seq, par);
    assert_eq!(seq.len(), 5);
    assert!(seq.values().all(|r| r.candidates == 66));
}

#[test]
fn evaluation_is_complete_and_reproducible() {
    let config = RegimeConfig::shipped();
    let a = evaluate(records(), &config, None, &opts(Exec::Parallel)).unwrap();
    let b = evaluate(records(), &config, None, &opts(Exec::Sequential)).unwrap();
    assert!(a.is_complete(), "{:?}", a.missing);
    assert_eq!((&a.detection, &a.effect, &a.sufficiency), (&b.detection, &b.effect, &b.sufficiency));

    for tier in Tier::QUANTITATIVE {
        let c = a.detection_cell(COMBINED_LABEL, tier).unwrap();
        assert!(c.lo <= c.tpr && c.tpr <= c.hi);
        assert!(c.n > 0);
    }
    assert!(a.detection_cell("c2pa", Tier::T2).unwrap().tpr == 0.0);
    assert!(a.weights.iter().all(|w| w.source == WeightSource::Config));
    let text = render_text(&a);
    assert!(text.contains("T4"));
}

#[test]
fn bundle_survives_disk_round_trip() {
    let bundle = evaluate(records(), &RegimeConfig::shipped(), None, &opts(Exec::Parallel)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = bundle.write_to(dir.path()).unwrap();
    assert!(written.iter().any(|p| p.ends_with("tables.txt")));
    let back = ReportBundle::read_from(dir.path()).unwrap();
    assert_eq!(back.detection, bundle.detection);
    assert_eq!(back.effect, bundle.effect);
    assert_eq!(back.metadata.thresholds, bundle.metadata.thresholds);
}

#[test]
fn evaluation_needs_test_items() {
    let cal_only: Vec<ScoreRecord> =
        records().iter().filter(|r| r.partition() == Some(Partition::Calibration)).cloned().collect();
    let err = evaluate(&cal_only, &RegimeConfig::shipped(), None, &opts(Exec::Parallel)).unwrap_err();
    assert!(matches!(err, ReportError::EmptyTest), "{err}");
}

#[test]
fn calibrated_weights_replace_config_weights() {
    let cal: Vec<ScoreRecord> =
        records().iter().filter(|r| r.partition() == Some(Partition::Calibration)).cloned().collect();
    let results = calibrate_all(&cal, &RegimeConfig::shipped(), &CalibrationOptions { resolution: 0.25, ..Default::default() })
        .unwrap();
    let bundle = evaluate(records(), &RegimeConfig::shipped(), Some(&results), &opts(Exec::Parallel)).unwrap();
    let by: BTreeMap<RegimeId, _> = bundle.weights.iter().map(|w| (w.regime, w)).collect();
    for (id, r) in &results {
        assert_eq!(by[id].weights, r.weights);
        assert_eq!(by[id].source, WeightSource::Calibrated);
    }
}

#[test]
fn proof_objects_drive_verdicts() {
    let at = Utc.with_ymd_and_hms(2026, 3, 1, 0, 0, 0).unwrap();
    let proof = ProofObject::new(
        Some(ProvenanceRef { manifest_sha256: "00".repeat(32), status: "OK".into(), unit_score: 1.0 }),
        vec![WatermarkScore { scheme: "fused-watermark".into(), raw: 4.2, unit: 0.999 }],
        None,
        LaunderingDescriptor::unmodified(),
    )
    .unwrap();
    let config = RegimeConfig::shipped();
    let product = decide_proof(&proof, &config.profile_or_default(RegimeId::Product), at).unwrap();
    // 1 − 0.65·(1 − 0.45·0.999) ≈ 0.6425, below τ = 0.70.
    assert_eq!(product.decision(), Decision::Reject);
    let populated = decide_proof(&proof, &config.profile_or_default(RegimeId::OplawPopulated), at).unwrap();
    assert_eq!(populated.decision(), Decision::Defer);
    assert_eq!(product.proof_hash(), populated.proof_hash());
    assert_eq!(product.proof_hash(), proof.content_hash().unwrap());
}
