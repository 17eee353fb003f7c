//! Synthetic benchmark: marked items from two generators per modality, each
//! in eight variants (T0, T1, P1–P6), plus natural items. Watermark scores
//! come from the detector oracle; manifests and attestations are real
//! Ed25519 artifacts pushed through the verifiers.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use crate::detect::{
    self, synth_coupled, synth_scores_with, C2paModel, DetectError, DetectorSet, NullReference, Sampling, SchemeId,
    ScorePopulation,
};
use crate::manifest::{
    verify_attestation, verify_provenance, Assertion, AttestationStatement, DigestAlg, KeyPair, Manifest, TrustStore,
};
use crate::model::{GroundTruth, Modality, ModelError, Pipeline, ScoreRecord, Tier, UnitScores, Weights};
use crate::par::Exec;
use crate::seed;

/// Scheme label of the fused combined-system population.
pub const COMBINED_LABEL: &str = "combined-ds";
pub const NATURAL_GENERATOR: &str = "natural";

pub fn generators(m: Modality) -> [&'static str; 2] {
    match m {
        Modality::Image => ["SDXL", "FLUX.1"],
        Modality::Audio => ["Stable Audio 2", "Suno v4"],
        Modality::Video => ["Veo 2", "Sora"],
    }
}

/// The eight variants of a marked item, in record order.
pub fn variants() -> Vec<(Tier, Option<Pipeline>)> {
    let mut v = vec![(Tier::T0, None), (Tier::T1, None)];
    v.extend(Pipeline::ALL.iter().map(|&p| (p.tier(), Some(p))));
    v
}

fn variant_label(tier: Tier, pipeline: Option<Pipeline>) -> String {
    pipeline.map_or_else(|| tier.to_string(), |p| p.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("simulation: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub items_per_generator: usize,
    /// Defaults to five natural items per marked item.
    pub naturals_per_modality: Option<usize>,
    pub null_reference_size: usize,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            items_per_generator: 2000,
            naturals_per_modality: None,
            null_reference_size: 200_000,
            seed: seed::DEFAULT_SEED,
        }
    }
}

impl SimulationConfig {
    pub fn naturals(&self) -> usize {
        self.naturals_per_modality.unwrap_or(10 * self.items_per_generator)
    }
}

impl C2paModel {
    pub fn manifest_survives(&self, tier: Tier) -> bool {
        tier.level() < self.strip_from_tier
    }

    /// Items per population whose manifest is corrupt from the start.
    pub fn corrupted_count(&self, n: usize) -> usize {
        (self.corruption_rate * n as f64).round() as usize
    }
}

/// Fixed signing world used by the simulator.
pub struct CryptoWorld {
    root: KeyPair,
    leaves: BTreeMap<&'static str, KeyPair>,
    attesters: BTreeMap<&'static str, KeyPair>,
    pub trust: TrustStore,
    pub now: DateTime<Utc>,
}

impl CryptoWorld {
    pub fn new(seed: u64) -> Self {
        let key = |id: &str| KeyPair::derived(id, &format!("{seed}/{id}"));
        let root = key("c2pa-root");
        let mut leaves = BTreeMap::new();
        let mut attesters = BTreeMap::new();
        for m in Modality::ALL {
            for g in generators(m) {
                leaves.insert(g, key(&format!("c2pa-leaf/{g}")));
                attesters.insert(g, key(&format!("attest/{g}")));
            }
        }
        let updated = Utc.with_ymd_and_hms(2026, 3, 1, 0, 0, 0).unwrap();
        let roots = std::iter::once((root.key_id.clone(), root.public_key()))
            .chain(attesters.values().map(|k| (k.key_id.clone(), k.public_key())));
        let trust = TrustStore::new(roots, updated).expect("simulated trust store has roots");
        CryptoWorld { root, leaves, attesters, trust, now: updated + Duration::hours(1) }
    }

    fn manifest(&self, generator: &'static str, payload: &[u8], corrupt: bool) -> Manifest {
        let leaf = &self.leaves[generator];
        let mut m = Manifest::sign(
            DigestAlg::Sha256,
            payload,
            vec![Assertion::new("generator", generator), Assertion::new("created", "2026-03-01T00:00:00Z")],
            leaf,
            vec![self.root.issue_link(leaf)],
        );
        if corrupt {
            m.signature[0] ^= 0x01;
        }
        m
    }

    fn attestation(&self, generator: &'static str, payload: &[u8]) -> AttestationStatement {
        AttestationStatement::sign(generator, DigestAlg::Sha256, payload, &self.attesters[generator])
    }
}

fn payload(seed: u64, item: &str, variant: &str) -> Vec<u8> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(item.as_bytes());
    h.update([0x1f]);
    h.update(variant.as_bytes());
    h.finalize().to_vec()
}

/// Reference null sample defining the watermark unit score.
pub fn null_reference(size: usize, seed: u64) -> Result<NullReference, DetectError> {
    let z = detect::stratified_normal(size, 0.0, 1.0, &mut seed::rng_for(seed, &["null-reference"]));
    NullReference::new(&z)
}

/// Generates the full record set.
pub fn simulate(cfg: &SimulationConfig, detectors: &DetectorSet, exec: Exec) -> Result<Vec<ScoreRecord>, BenchmarkError> {
    if cfg.items_per_generator == 0 || cfg.naturals() == 0 || cfg.null_reference_size == 0 {
        return Err(BenchmarkError::Config("counts must be positive".into()));
    }
    let reference = null_reference(cfg.null_reference_size, cfg.seed)?;
    let world = CryptoWorld::new(cfg.seed);
    let schemes: Vec<SchemeId> = detectors.detectors.iter().map(|d| d.scheme().clone()).collect();
    let fused_idx = schemes.iter().position(|s| *s == SchemeId::FusedWatermark).expect("validated");
    let mut records = Vec::new();

    for m in Modality::ALL {
        let n_mod = 2 * cfg.items_per_generator;
        // per variant, per scheme, per item
        let mut scores: Vec<Vec<Vec<f64>>> = Vec::new();
        for (tier, pipeline) in variants() {
            let vseed = seed::derive(cfg.seed, &["variant", &variant_label(tier, pipeline)]);
            let cols = synth_coupled(&detectors.detectors, tier, Some(m), n_mod, vseed, detectors.coupling)?;
            scores.push(cols.into_iter().map(|(v, _)| v).collect());
        }
        let mut order: Vec<usize> = (0..n_mod).collect();
        order.shuffle(&mut seed::rng_for(cfg.seed, &["c2pa-corruption", m.as_str()]));
        let mut corrupt = vec![false; n_mod];
        for &i in &order[..detectors.c2pa.corrupted_count(n_mod)] {
            corrupt[i] = true;
        }

        let per_item = exec.map_range(n_mod, |i| -> Result<Vec<ScoreRecord>, BenchmarkError> {
            let generator = generators(m)[i / cfg.items_per_generator];
            let item = format!("{}-{}-{:05}", m.as_str(), slug(generator), i % cfg.items_per_generator);
            let original = payload(cfg.seed, &item, "T0");
            let original_statement = world.attestation(generator, &original);
            let mut out = Vec::with_capacity(8);
            for (v, (tier, pipeline)) in variants().into_iter().enumerate() {
                let label = variant_label(tier, pipeline);
                let bytes = payload(cfg.seed, &item, &label);
                let (manifest, statement) = if detectors.c2pa.manifest_survives(tier) {
                    (Some(world.manifest(generator, &bytes, corrupt[i])), world.attestation(generator, &bytes))
                } else {
                    (None, original_statement.clone())
                };
                let sigma = verify_provenance(manifest.as_ref(), &bytes, &world.trust, world.now).score;
                let zeta = verify_attestation(Some(&statement), &bytes, &world.trust, world.now).score;
                let raw: BTreeMap<String, f64> =
                    schemes.iter().enumerate().map(|(s, id)| (id.to_string(), scores[v][s][i])).collect();
                let omega = reference.unit_score(scores[v][fused_idx][i]);
                out.push(ScoreRecord::new(
                    item.clone(),
                    m,
                    generator,
                    tier,
                    pipeline,
                    GroundTruth::SyntheticMarked,
                    raw,
                    UnitScores::new(sigma, omega, zeta)?,
                )?);
            }
            Ok(out)
        });
        for r in per_item {
            records.extend(r?);
        }

        let n_nat = cfg.naturals();
        let nat: Vec<Vec<f64>> = schemes
            .iter()
            .map(|s| {
                let mut rng = seed::rng_for(cfg.seed, &["natural", m.as_str(), s.as_str()]);
                let mut v = detect::stratified_normal(n_nat, 0.0, 1.0, &mut rng);
                v.shuffle(&mut rng);
                v
            })
            .collect();
        #[allow(clippy::needless_range_loop)]
        for i in 0..n_nat {
            let raw: BTreeMap<String, f64> = schemes.iter().enumerate().map(|(s, id)| (id.to_string(), nat[s][i])).collect();
            let omega = reference.unit_score(nat[fused_idx][i]);
            records.push(ScoreRecord::new(
                format!("{}-natural-{:06}", m.as_str(), i),
                m,
                NATURAL_GENERATOR,
                Tier::T0,
                None,
                GroundTruth::Natural,
                raw,
                UnitScores::new(0.0, omega, 0.0)?,
            )?);
        }
    }
    Ok(records)
}

fn slug(generator: &str) -> String {
    generator.to_ascii_lowercase().replace([' ', '.'], "")
}

/// One reproduced detection cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CellRepro {
    pub scheme: String,
    pub tier: Tier,
    pub target: f64,
    pub tpr: f64,
    pub n_pos: usize,
    pub n_null: usize,
}

/// Combined-system population for one tier: positives and naturals mapped
/// through the combiner with `weights`. Manifest and attestation outcomes
/// follow the C2PA outcome model; the watermark slot is the fused detector.
pub fn combined_population(
    detectors: &DetectorSet,
    weights: &Weights,
    tier: Tier,
    modality: Option<Modality>,
    n_pos: usize,
    n_null: usize,
    seed: u64,
) -> Result<ScorePopulation, BenchmarkError> {
    let fused = synth_scores_with(detectors.fused(), tier, modality, n_pos, n_null, seed, Sampling::Stratified)?;
    let reference = NullReference::new(&fused.nulls)?;
    let survives = detectors.c2pa.manifest_survives(tier);
    let corrupted = if survives { detectors.c2pa.corrupted_count(n_pos) } else { n_pos };
    let combine = |s: f64, u: f64, z: f64| {
        crate::decide::ds_combine(weights, &UnitScores::new(s, u, z).expect("unit scores"))
    };
    let zeta = if survives { 1.0 } else { 0.0 };
    let positives = fused
        .positives
        .iter()
        .enumerate()
        .map(|(i, &raw)| combine(if i < corrupted { 0.0 } else { 1.0 }, reference.unit_score(raw), zeta))
        .collect();
    let nulls = fused.nulls.iter().map(|&raw| combine(0.0, reference.unit_score(raw), 0.0)).collect();
    Ok(ScorePopulation {
        scheme: SchemeId::Custom(COMBINED_LABEL.into()),
        tier,
        modality,
        seed,
        positives,
        nulls,
        status: fused.status,
    })
}

/// Every detection cell at tiers 0–4: C2PA from the outcome model, each
/// watermark scheme from its oracle population, and the combined system
/// under `weights`. Positives per cell are `n_pos`; nulls `n_null`.
pub fn reproduce_detection_cells(
    detectors: &DetectorSet,
    weights: &Weights,
    n_pos: usize,
    n_null: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<CellRepro>, BenchmarkError> {
    let fpr = detectors.target_fpr;
    let mut jobs: Vec<(Option<&detect::DetectorSpec>, Tier)> = Vec::new();
    for spec in detectors.single_schemes() {
        jobs.extend(Tier::QUANTITATIVE.iter().map(|&t| (Some(spec), t)));
    }
    jobs.extend(Tier::QUANTITATIVE.iter().map(|&t| (None, t)));
    let cells = exec.map_slice(&jobs, |&(spec, tier)| -> Result<CellRepro, BenchmarkError> {
        let (scheme, target, pop) = match spec {
            Some(s) => (s.scheme().to_string(), s.target(tier, None)?, synth_scores_with(s, tier, None, n_pos, n_null, seed, Sampling::Stratified)?),
            None => (
                COMBINED_LABEL.to_string(),
                detectors.fused().target(tier, None)?,
                combined_population(detectors, weights, tier, None, n_pos, n_null, seed)?,
            ),
        };
        Ok(CellRepro { scheme, tier, target, tpr: pop.tpr_at_fpr(fpr)?, n_pos, n_null })
    });
    let mut out: Vec<CellRepro> = Tier::QUANTITATIVE
        .iter()
        .map(|&tier| {
            let survives = detectors.c2pa.manifest_survives(tier);
            let bad = if survives { detectors.c2pa.corrupted_count(n_pos) } else { n_pos };
            CellRepro {
                scheme: "c2pa".into(),
                tier,
                target: if survives { 1.0 - detectors.c2pa.corruption_rate } else { 0.0 },
                tpr: (n_pos - bad) as f64 / n_pos as f64,
                n_pos,
                n_null,
            }
        })
        .collect();
    for c in cells {
        out.push(c?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Partition;

    fn small() -> SimulationConfig {
        SimulationConfig { items_per_generator: 3, naturals_per_modality: Some(5), null_reference_size: 1000, seed: 11 }
    }

    #[test]
    fn layout_and_crypto_outcomes() {
        let set = DetectorSet::shipped();
        let recs = simulate(&small(), &set, Exec::Sequential).unwrap();
        assert_eq!(recs.len(), 3 * (6 * 8 + 5));
        for r in recs.iter().filter(|r| r.ground_truth() == GroundTruth::SyntheticMarked) {
            let u = r.unit_scores();
            if r.tier().level() < 2 {
                assert_eq!((u.sigma(), u.zeta()), (1.0, 1.0), "{}", r.item_id());
            } else {
                assert_eq!((u.sigma(), u.zeta()), (0.0, 0.0));
            }
            assert_eq!(r.raw_scores().len(), 4);
            assert_eq!(r.partition(), None::<Partition>);
        }
        let again = simulate(&small(), &set, Exec::Parallel).unwrap();
        assert_eq!(recs, again);
    }

    #[test]
    fn corrupted_manifests_fail_verification() {
        let mut set = DetectorSet::shipped();
        set.c2pa.corruption_rate = 0.5;
        let recs = simulate(&small(), &set, Exec::Sequential).unwrap();
        let t0: Vec<_> = recs
            .iter()
            .filter(|r| r.ground_truth() == GroundTruth::SyntheticMarked && r.tier() == Tier::T0)
            .collect();
        let failed = t0.iter().filter(|r| r.unit_scores().sigma() == 0.0).count();
        assert_eq!(failed, 3 * 3);
        // same items fail at T1
        for r in &t0 {
            let t1 = recs
                .iter()
                .find(|x| x.item_id() == r.item_id() && x.tier() == Tier::T1)
                .unwrap();
            assert_eq!(t1.unit_scores().sigma(), r.unit_scores().sigma());
        }
    }

    #[test]
    fn c2pa_cells_follow_outcome_model() {
        let set = DetectorSet::shipped();
        let cells = reproduce_detection_cells(&set, &Weights::INITIAL, 2000, 2000, 1, Exec::Sequential).unwrap();
        let c2pa: Vec<f64> = cells.iter().filter(|c| c.scheme == "c2pa").map(|c| c.tpr).collect();
        assert_eq!(c2pa, vec![0.998, 0.998, 0.0, 0.0, 0.0]);
        assert_eq!(cells.len(), 5 * 5);
    }
}
