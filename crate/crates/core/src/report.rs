//! Evaluation of a partitioned record set and the report bundle built from it.
//!
//! Detection thresholds are calibrated on calibration-partition naturals at
//! the target FPR; every rate, interval and test is computed on the test
//! partition. A bundle is a directory:
//!
//! | file               | content                                        |
//! |--------------------|------------------------------------------------|
//! | `metadata.json`    | methods, seeds, thresholds, counts             |
//! | `detection.jsonl`  | TPR by system and tier                         |
//! | `modality.jsonl`   | combined-system TPR by modality and tier       |
//! | `sufficiency.jsonl`| regime × tier marks                            |
//! | `weights.jsonl`    | combiner weights per regime                    |
//! | `effect.jsonl`     | Cliff's delta and paired tests per tier        |
//! | `roc.jsonl`        | ROC coordinates                                |
//! | `auc.jsonl`        | AUC by system and tier                         |
//! | `missing.jsonl`    | cells that could not be estimated              |
//! | `tables.txt`       | all of the above as aligned text               |

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibrate::CalibrationResult;
use crate::canonical::{self, JsonLinesError};
use crate::decide::ds_combine;
use crate::detect::{
    calibrate_threshold, roc_auc, roc_curve, DetectError, DetectorSet, SchemeId, DEFAULT_FPR, ROC_FPR_GRID,
};
use crate::model::{regime_defaults, GroundTruth, Modality, Partition, RegimeConfig, RegimeId, ScoreRecord, Tier, Weights};
use crate::seed;
use crate::stats::{
    bonferroni, bootstrap_ci, cliffs_delta_ci, holm, paired_bootstrap_by_id, sufficiency_table, BootStatistic,
    BootstrapConfig, CellEstimate, Mark, StatsError, SufficiencyRule, SUFFICIENCY_TIERS,
};

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const C2PA_LABEL: &str = "c2pa";
pub const COMBINED_LABEL: &str = crate::benchmark::COMBINED_LABEL;

pub const BUNDLE_FILES: [&str; 10] = [
    "metadata.json",
    "detection.jsonl",
    "modality.jsonl",
    "sufficiency.jsonl",
    "weights.jsonl",
    "effect.jsonl",
    "roc.jsonl",
    "auc.jsonl",
    "missing.jsonl",
    "tables.txt",
];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("record {0} has no partition tag")]
    Untagged(String),
    #[error("test partition has no marked items")]
    EmptyTest,
    #[error("{0} partition has no natural items")]
    NoNaturals(&'static str),
    #[error("record {item} has no raw score for {scheme}")]
    MissingScore { item: String, scheme: String },
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: JsonLinesError },
    #[error("bundle: {0}")]
    Bundle(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    pub bootstrap: BootstrapConfig,
    pub target_fpr: f64,
    /// Weights of the combined system in the detection, modality and effect tables.
    pub reference_weights: Weights,
    /// Single watermark schemes, in table order.
    pub schemes: Vec<String>,
    /// Raw score standing for the combined system in effect sizes.
    pub fused: String,
    /// Single scheme the combined system is tested against.
    pub comparator: String,
    pub roc_grid: Vec<f64>,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            bootstrap: BootstrapConfig::default(),
            target_fpr: DEFAULT_FPR,
            reference_weights: Weights::INITIAL,
            schemes: DetectorSet::shipped().single_schemes().map(|d| d.scheme().to_string()).collect(),
            fused: SchemeId::FusedWatermark.to_string(),
            comparator: SchemeId::GaussianShading.to_string(),
            roc_grid: ROC_FPR_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionCell {
    pub system: String,
    pub tier: Tier,
    pub tpr: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityCell {
    pub modality: Modality,
    pub tier: Tier,
    pub tpr: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyCell {
    pub regime: RegimeId,
    pub tier: Tier,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub threshold: f64,
    pub mark: Mark,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSource {
    Config,
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub regime: RegimeId,
    pub weights: Weights,
    pub default_weights: Weights,
    pub source: WeightSource,
    pub regret: Option<f64>,
    pub tied_candidates: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub tier: Tier,
    pub delta: f64,
    pub delta_lo: f64,
    pub delta_hi: f64,
    /// Combined minus comparator TPR on the paired items.
    pub tpr_difference: f64,
    pub p_raw: f64,
    pub p_bonferroni: f64,
    pub p_holm: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocRow {
    pub system: String,
    pub tier: Tier,
    pub target_fpr: f64,
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub system: String,
    pub tier: Tier,
    pub auc: f64,
    pub n_pos: usize,
    pub n_null: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MissingCell {
    pub table: String,
    pub row: String,
    pub tier: Tier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordCounts {
    pub calibration: usize,
    pub calibration_natural: usize,
    pub test: usize,
    pub test_marked: usize,
    pub test_natural: usize,
    /// Marked test items at tiers without quantitative results.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub format_version: u32,
    pub bootstrap: BootstrapConfig,
    pub ci_method: String,
    pub effect_size_method: String,
    pub effect_size_statistic: String,
    pub paired_statistic: String,
    pub comparisons: usize,
    pub p_value_floor: f64,
    pub target_fpr: f64,
    pub reference_weights: Weights,
    pub comparator: String,
    pub thresholds: BTreeMap<String, f64>,
    pub records: RecordCounts,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: ReportMetadata,
    pub detection: Vec<DetectionCell>,
    pub modality: Vec<ModalityCell>,
    pub sufficiency: Vec<SufficiencyCell>,
    pub weights: Vec<WeightRow>,
    pub effect: Vec<EffectRow>,
    pub roc: Vec<RocRow>,
    pub auc: Vec<AucRow>,
    pub missing: Vec<MissingCell>,
}

#[derive(Debug, Clone)]
enum System {
    C2pa,
    Scheme(String),
    Combined(Weights),
}

impl System {
    fn score(&self, r: &ScoreRecord) -> Result<f64, ReportError> {
        match self {
            System::C2pa => Ok(r.unit_scores().sigma()),
            System::Scheme(s) => r
                .raw_score(s)
                .ok_or_else(|| ReportError::MissingScore { item: r.item_id().into(), scheme: s.clone() }),
            System::Combined(w) => Ok(ds_combine(w, &r.unit_scores())),
        }
    }

    fn scores(&self, records: &[&ScoreRecord]) -> Result<Vec<f64>, ReportError> {
        records.iter().map(|r| self.score(r)).collect()
    }
}

/// Test-partition view of the records.
struct Split<'a> {
    calibration_natural: Vec<&'a ScoreRecord>,
    test_natural: Vec<&'a ScoreRecord>,
    test_marked: BTreeMap<Tier, Vec<&'a ScoreRecord>>,
    counts: RecordCounts,
}

fn split(records: &[ScoreRecord]) -> Result<Split<'_>, ReportError> {
    let mut s = Split {
        calibration_natural: Vec::new(),
        test_natural: Vec::new(),
        test_marked: BTreeMap::new(),
        counts: RecordCounts {
            calibration: 0,
            calibration_natural: 0,
            test: 0,
            test_marked: 0,
            test_natural: 0,
            excluded: 0,
        },
    };
    for r in records {
        let natural = r.ground_truth() == GroundTruth::Natural;
        match r.partition() {
            None => return Err(ReportError::Untagged(r.item_id().into())),
            Some(Partition::Calibration) => {
                s.counts.calibration += 1;
                if natural {
                    s.calibration_natural.push(r);
                }
            }
            Some(Partition::Test) => {
                s.counts.test += 1;
                if natural {
                    s.test_natural.push(r);
                } else if r.tier().is_quantitative() {
                    s.test_marked.entry(r.tier()).or_default().push(r);
                } else {
                    s.counts.excluded += 1;
                }
            }
        }
    }
    s.counts.calibration_natural = s.calibration_natural.len();
    s.counts.test_natural = s.test_natural.len();
    s.counts.test_marked = s.test_marked.values().map(Vec::len).sum();
    if s.counts.test_marked == 0 {
        return Err(ReportError::EmptyTest);
    }
    if s.calibration_natural.is_empty() {
        return Err(ReportError::NoNaturals("calibration"));
    }
    if s.test_natural.is_empty() {
        return Err(ReportError::NoNaturals("test"));
    }
    Ok(s)
}

struct Ctx<'a> {
    split: Split<'a>,
    opts: &'a EvaluateOptions,
    missing: Vec<MissingCell>,
    thresholds: BTreeMap<String, f64>,
}

impl<'a> Ctx<'a> {
    fn threshold(&mut self, label: &str, system: &System) -> Result<f64, ReportError> {
        let t = calibrate_threshold(&system.scores(&self.split.calibration_natural)?, self.opts.target_fpr)?;
        self.thresholds.insert(label.to_string(), t);
        Ok(t)
    }

    fn cfg(&self, labels: &[&str]) -> BootstrapConfig {
        self.opts.bootstrap.with_seed(seed::derive(self.opts.bootstrap.seed, labels))
    }

    /// TPR and interval over `positives`, or `None` when there are none.
    fn rate(
        &mut self,
        table: &str,
        row: &str,
        tier: Tier,
        system: &System,
        threshold: f64,
        positives: &[&ScoreRecord],
    ) -> Result<Option<(f64, f64, f64, usize)>, ReportError> {
        if positives.is_empty() {
            self.missing.push(MissingCell { table: table.into(), row: row.into(), tier });
            return Ok(None);
        }
        let hits: Vec<f64> = system.scores(positives)?.into_iter().map(|s| (s > threshold) as u8 as f64).collect();
        let ci = bootstrap_ci(&hits, BootStatistic::Mean, &self.cfg(&[table, row, &tier.to_string()]))?;
        Ok(Some((ci.point, ci.lo, ci.hi, positives.len())))
    }

    fn marked(&self, tier: Tier) -> Vec<&'a ScoreRecord> {
        self.split.test_marked.get(&tier).cloned().unwrap_or_default()
    }
}

/// Weights per regime: a calibration result when one is supplied, the
/// config otherwise.
pub fn regime_weights(
    config: &RegimeConfig,
    calibrations: Option<&BTreeMap<RegimeId, CalibrationResult>>,
) -> Vec<WeightRow> {
    RegimeId::ALL
        .iter()
        .map(|&id| {
            let default_weights = regime_defaults(id).weights();
            match calibrations.and_then(|c| c.get(&id)) {
                Some(c) => WeightRow {
                    regime: id,
                    weights: c.weights,
                    default_weights,
                    source: WeightSource::Calibrated,
                    regret: Some(c.regret),
                    tied_candidates: Some(c.tied_candidates),
                },
                None => WeightRow {
                    regime: id,
                    weights: config.profile_or_default(id).weights(),
                    default_weights,
                    source: WeightSource::Config,
                    regret: None,
                    tied_candidates: None,
                },
            }
        })
        .collect()
}

/// Evaluates partition-tagged records into a report bundle.
pub fn evaluate(
    records: &[ScoreRecord],
    config: &RegimeConfig,
    calibrations: Option<&BTreeMap<RegimeId, CalibrationResult>>,
    opts: &EvaluateOptions,
) -> Result<ReportBundle, ReportError> {
    let mut cx = Ctx { split: split(records)?, opts, missing: Vec::new(), thresholds: BTreeMap::new() };
    let combined = System::Combined(opts.reference_weights);

    let mut systems = vec![(C2PA_LABEL.to_string(), System::C2pa)];
    systems.extend(opts.schemes.iter().map(|s| (s.clone(), System::Scheme(s.clone()))));
    systems.push((COMBINED_LABEL.to_string(), combined.clone()));

    let mut detection = Vec::new();
    let mut system_thresholds = Vec::new();
    for (label, system) in &systems {
        let t = cx.threshold(label, system)?;
        system_thresholds.push(t);
        for tier in Tier::QUANTITATIVE {
            if let Some((tpr, lo, hi, n)) = cx.rate("detection", label, tier, system, t, &cx.marked(tier))? {
                detection.push(DetectionCell { system: label.clone(), tier, tpr, lo, hi, n });
            }
        }
    }
    let combined_t = *system_thresholds.last().expect("combined row");

    let mut modality = Vec::new();
    for m in Modality::ALL {
        for tier in Tier::QUANTITATIVE {
            let pos: Vec<&ScoreRecord> = cx.marked(tier).into_iter().filter(|r| r.modality() == m).collect();
            if let Some((tpr, lo, hi, n)) = cx.rate("modality", m.as_str(), tier, &combined, combined_t, &pos)? {
                modality.push(ModalityCell { modality: m, tier, tpr, lo, hi, n });
            }
        }
    }

    let weights = regime_weights(config, calibrations);
    let mut estimates = BTreeMap::new();
    let mut sizes = BTreeMap::new();
    let mut suff_thresholds = BTreeMap::new();
    for row in &weights {
        let system = System::Combined(row.weights);
        let t = cx.threshold(&format!("{COMBINED_LABEL}/{}", row.regime), &system)?;
        suff_thresholds.insert(row.regime, config.profile_or_default(row.regime).sufficiency_threshold());
        for tier in SUFFICIENCY_TIERS {
            if let Some((estimate, lo, hi, n)) =
                cx.rate("sufficiency", row.regime.as_str(), tier, &system, t, &cx.marked(tier))?
            {
                estimates.insert((row.regime, tier), CellEstimate { estimate, lo, hi });
                sizes.insert((row.regime, tier), n);
            }
        }
    }
    let table = sufficiency_table(&estimates, &suff_thresholds, &SufficiencyRule);
    let mut sufficiency = Vec::new();
    for (&(regime, tier), c) in &estimates {
        sufficiency.push(SufficiencyCell {
            regime,
            tier,
            estimate: c.estimate,
            lo: c.lo,
            hi: c.hi,
            threshold: table.thresholds[&regime],
            mark: table.get(regime, tier).expect("estimated cell"),
            n: sizes[&(regime, tier)],
        });
    }
    // Regime order, not enum order, for the rows.
    sufficiency.sort_by_key(|c| (RegimeId::ALL.iter().position(|r| *r == c.regime), c.tier));

    let effect = effect_rows(&mut cx, &combined, combined_t)?;

    let mut roc = Vec::new();
    let mut auc = Vec::new();
    for (label, system) in systems.iter().skip(1) {
        let nulls = system.scores(&cx.split.test_natural)?;
        for tier in Tier::QUANTITATIVE {
            let pos = system.scores(&cx.marked(tier))?;
            if pos.is_empty() {
                continue;
            }
            for p in roc_curve(&pos, &nulls, &opts.roc_grid)? {
                roc.push(RocRow {
                    system: label.clone(),
                    tier,
                    target_fpr: p.target_fpr,
                    threshold: p.threshold,
                    fpr: p.fpr,
                    tpr: p.tpr,
                });
            }
            auc.push(AucRow {
                system: label.clone(),
                tier,
                auc: roc_auc(&pos, &nulls)?,
                n_pos: pos.len(),
                n_null: nulls.len(),
            });
        }
    }

    cx.missing.sort();
    cx.missing.dedup();
    let metadata = ReportMetadata {
        format_version: REPORT_FORMAT_VERSION,
        bootstrap: opts.bootstrap,
        ci_method: "percentile".into(),
        effect_size_method: "percentile-bootstrap".into(),
        effect_size_statistic: format!("cliffs-delta({} raw, {} raw)", opts.fused, opts.comparator),
        paired_statistic: "tpr-difference-at-calibrated-threshold".into(),
        comparisons: Tier::QUANTITATIVE.len(),
        p_value_floor: 1.0 / (opts.bootstrap.resamples as f64 + 1.0),
        target_fpr: opts.target_fpr,
        reference_weights: opts.reference_weights,
        comparator: opts.comparator.clone(),
        thresholds: cx.thresholds,
        records: cx.split.counts,
        complete: cx.missing.is_empty(),
    };
    Ok(ReportBundle { metadata, detection, modality, sufficiency, weights, effect, roc, auc, missing: cx.missing })
}

fn effect_rows(cx: &mut Ctx<'_>, combined: &System, combined_t: f64) -> Result<Vec<EffectRow>, ReportError> {
    let opts = cx.opts;
    let fused = System::Scheme(opts.fused.clone());
    let comparator = System::Scheme(opts.comparator.clone());
    let comparator_t = cx.threshold(&opts.comparator, &comparator)?;
    let mut rows = Vec::new();
    for tier in Tier::QUANTITATIVE {
        let pos = cx.marked(tier);
        if pos.is_empty() {
            cx.missing.push(MissingCell { table: "effect".into(), row: opts.comparator.clone(), tier });
            continue;
        }
        let tier_s = tier.to_string();
        let x = fused.scores(&pos)?;
        let y = comparator.scores(&pos)?;
        let delta = cliffs_delta_ci(&x, &y, &cx.cfg(&["effect", "delta", &tier_s]))?;
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        for r in &pos {
            let key = format!("{}/{}", r.item_id(), r.variant());
            a.insert(key.clone(), combined.score(r)? > combined_t);
            b.insert(key, comparator.score(r)? > comparator_t);
        }
        let test = paired_bootstrap_by_id(&a, &b, &cx.cfg(&["effect", "paired", &tier_s]))?;
        rows.push(EffectRow {
            tier,
            delta: delta.delta,
            delta_lo: delta.ci.lo,
            delta_hi: delta.ci.hi,
            tpr_difference: test.difference,
            p_raw: test.p_value,
            p_bonferroni: bonferroni(test.p_value, Tier::QUANTITATIVE.len()),
            p_holm: 0.0,
            n: pos.len(),
        });
    }
    let adjusted = holm(&rows.iter().map(|r| r.p_raw).collect::<Vec<_>>());
    for (r, p) in rows.iter_mut().zip(adjusted) {
        r.p_holm = p;
    }
    Ok(rows)
}

impl ReportBundle {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn detection_cell(&self, system: &str, tier: Tier) -> Option<&DetectionCell> {
        self.detection.iter().find(|c| c.system == system && c.tier == tier)
    }

    pub fn effect_row(&self, tier: Tier) -> Option<&EffectRow> {
        self.effect.iter().find(|r| r.tier == tier)
    }

    /// Writes every bundle file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
        fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.into(), source })?;
        let mut written = Vec::new();
        let mut put = |name: &str, f: &dyn Fn(&mut dyn Write) -> io::Result<()>| -> Result<(), ReportError> {
            let path = dir.join(name);
            let io_err = |source| ReportError::Io { path: path.clone(), source };
            let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
            f(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
            written.push(path);
            Ok(())
        };
        put("metadata.json", &|w| canonical::write_json_line(w, &self.metadata))?;
        put("detection.jsonl", &|w| canonical::write_json_lines(w, &self.detection))?;
        put("modality.jsonl", &|w| canonical::write_json_lines(w, &self.modality))?;
        put("sufficiency.jsonl", &|w| canonical::write_json_lines(w, &self.sufficiency))?;
        put("weights.jsonl", &|w| canonical::write_json_lines(w, &self.weights))?;
        put("effect.jsonl", &|w| canonical::write_json_lines(w, &self.effect))?;
        put("roc.jsonl", &|w| canonical::write_json_lines(w, &self.roc))?;
        put("auc.jsonl", &|w| canonical::write_json_lines(w, &self.auc))?;
        put("missing.jsonl", &|w| canonical::write_json_lines(w, &self.missing))?;
        put("tables.txt", &|w| w.write_all(render_text(self).as_bytes()))?;
        Ok(written)
    }

    pub fn read_from(dir: &Path) -> Result<Self, ReportError> {
        let metadata: Vec<ReportMetadata> = read(dir, "metadata.json")?;
        let metadata = match <[ReportMetadata; 1]>::try_from(metadata) {
            Ok([m]) => m,
            Err(_) => return Err(ReportError::Bundle("metadata.json must hold exactly one record".into())),
        };
        if metadata.format_version != REPORT_FORMAT_VERSION {
            return Err(ReportError::Bundle(format!("unsupported format_version {}", metadata.format_version)));
        }
        Ok(ReportBundle {
            metadata,
            detection: read(dir, "detection.jsonl")?,
            modality: read(dir, "modality.jsonl")?,
            sufficiency: read(dir, "sufficiency.jsonl")?,
            weights: read(dir, "weights.jsonl")?,
            effect: read(dir, "effect.jsonl")?,
            roc: read(dir, "roc.jsonl")?,
            auc: read(dir, "auc.jsonl")?,
            missing: read(dir, "missing.jsonl")?,
        })
    }
}

fn read<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Vec<T>, ReportError> {
    let path = dir.join(name);
    let file = File::open(&path).map_err(|source| ReportError::Io { path: path.clone(), source })?;
    canonical::read_json_lines(BufReader::new(file)).map_err(|source| ReportError::Parse { path, source })
}

fn text_table(title: &str, header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = vec![0; cols];
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (i, cell) in row.iter().enumerate() {
            width[i] = width[i].max(cell.chars().count());
        }
    }
    let line = |row: &[String]| {
        let mut s = String::new();
        for (i, cell) in row.iter().enumerate() {
            s.push_str(cell);
            if i + 1 < cols {
                s.push_str(&" ".repeat(width[i] - cell.chars().count() + 2));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = format!("{title}\n");
    out.push_str(&line(header));
    let rule: usize = width.iter().sum::<usize>() + 2 * (cols - 1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

fn tier_header(first: &str, tiers: &[Tier]) -> Vec<String> {
    std::iter::once(first.to_string()).chain(tiers.iter().map(Tier::to_string)).collect()
}

fn rate_cell(tpr: f64, lo: f64, hi: f64) -> String {
    format!("{tpr:.4} ({lo:.3}, {hi:.3})")
}

fn weights_cell(w: &Weights) -> String {
    format!("({:.2}, {:.2}, {:.2})", w.sigma(), w.omega(), w.zeta())
}

/// All bundle tables as aligned text.
pub fn render_text(b: &ReportBundle) -> String {
    let na = || "n/a".to_string();
    let m = &b.metadata;
    let tiers = Tier::QUANTITATIVE;
    let mut out = String::new();

    let mut systems: Vec<&str> = Vec::new();
    for c in &b.detection {
        if !systems.contains(&c.system.as_str()) {
            systems.push(&c.system);
        }
    }
    let rows: Vec<Vec<String>> = systems
        .iter()
        .map(|s| {
            std::iter::once(s.to_string())
                .chain(tiers.iter().map(|&t| b.detection_cell(s, t).map_or_else(na, |c| rate_cell(c.tpr, c.lo, c.hi))))
                .collect()
        })
        .collect();
    out += &text_table(
        &format!("TPR at FPR {:e} by adversary tier ({:.0}% {} bootstrap CI)", m.target_fpr, m.bootstrap.level * 100.0, m.ci_method),
        &tier_header("system", &tiers),
        &rows,
    );

    out += "\n";
    let rows: Vec<Vec<String>> = Modality::ALL
        .iter()
        .map(|&md| {
            std::iter::once(md.as_str().to_string())
                .chain(tiers.iter().map(|&t| {
                    b.modality
                        .iter()
                        .find(|c| c.modality == md && c.tier == t)
                        .map_or_else(na, |c| rate_cell(c.tpr, c.lo, c.hi))
                }))
                .collect()
        })
        .collect();
    out += &text_table(
        &format!("Combined TPR at FPR {:e} by modality, weights {}", m.target_fpr, weights_cell(&m.reference_weights)),
        &tier_header("modality", &tiers),
        &rows,
    );

    out += "\n";
    let rows: Vec<Vec<String>> = RegimeId::ALL
        .iter()
        .map(|&r| {
            let cell = |t| b.sufficiency.iter().find(|c| c.regime == r && c.tier == t);
            let threshold = SUFFICIENCY_TIERS.iter().find_map(|&t| cell(t)).map_or_else(na, |c| format!("{:.3}", c.threshold));
            std::iter::once(r.label().to_string())
                .chain(SUFFICIENCY_TIERS.iter().map(|&t| {
                    cell(t).map_or_else(na, |c| format!("{} {:.3} ({:.3})", c.mark.symbol(), c.estimate, c.lo))
                }))
                .chain(std::iter::once(threshold))
                .collect()
        })
        .collect();
    let mut header = tier_header("regime", &SUFFICIENCY_TIERS);
    header.push("threshold".into());
    out += &text_table("Regime sufficiency: mark, estimate (CI lower bound)", &header, &rows);

    out += "\n";
    let rows: Vec<Vec<String>> = b
        .weights
        .iter()
        .map(|w| {
            vec![
                w.regime.label().to_string(),
                format!("{:.2}", w.weights.sigma()),
                format!("{:.2}", w.weights.omega()),
                format!("{:.2}", w.weights.zeta()),
                weights_cell(&w.default_weights),
                match w.source {
                    WeightSource::Config => "config".into(),
                    WeightSource::Calibrated => "calibrated".into(),
                },
                w.regret.map_or_else(|| "-".into(), |r| format!("{r:.4}")),
            ]
        })
        .collect();
    let header: Vec<String> =
        ["regime", "w_sigma", "w_omega", "w_zeta", "default", "source", "regret"].iter().map(|s| s.to_string()).collect();
    out += &text_table("Combiner weights per regime", &header, &rows);

    out += "\n";
    let rows: Vec<Vec<String>> = b
        .effect
        .iter()
        .map(|e| {
            vec![
                e.tier.to_string(),
                format!("{:.3}", e.delta),
                format!("({:.3}, {:.3})", e.delta_lo, e.delta_hi),
                format!("{:+.4}", e.tpr_difference),
                format!("{:.4}", e.p_raw),
                format!("{:.4}", e.p_bonferroni),
                format!("{:.4}", e.p_holm),
            ]
        })
        .collect();
    let header: Vec<String> = ["tier", "delta", "delta CI", "TPR diff", "p", "p Bonferroni", "p Holm"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out += &text_table(
        &format!("Effect size and corrected significance, combined vs {} (k = {})", m.comparator, m.comparisons),
        &header,
        &rows,
    );

    out += "\n";
    let mut auc_systems: Vec<&str> = Vec::new();
    for a in &b.auc {
        if !auc_systems.contains(&a.system.as_str()) {
            auc_systems.push(&a.system);
        }
    }
    let rows: Vec<Vec<String>> = auc_systems
        .iter()
        .map(|s| {
            std::iter::once(s.to_string())
                .chain(tiers.iter().map(|&t| {
                    b.auc.iter().find(|a| a.system == *s && a.tier == t).map_or_else(na, |a| format!("{:.4}", a.auc))
                }))
                .collect()
        })
        .collect();
    out += &text_table("ROC AUC by tier", &tier_header("system", &tiers), &rows);

    if !b.missing.is_empty() {
        out += "\nMissing cells (not imputed)\n";
        for c in &b.missing {
            out += &format!("  {} / {} / {}\n", c.table, c.row, c.tier);
        }
    }
    out
}

/// Calibration results laid out like the weights table.
pub fn render_calibration(results: &BTreeMap<RegimeId, CalibrationResult>) -> String {
    let rows: Vec<Vec<String>> = RegimeId::ALL
        .iter()
        .filter_map(|id| results.get(id))
        .map(|c| {
            vec![
                c.regime.label().to_string(),
                format!("{:.2}", c.weights.sigma()),
                format!("{:.2}", c.weights.omega()),
                format!("{:.2}", c.weights.zeta()),
                weights_cell(&regime_defaults(c.regime).weights()),
                format!("{:.2}", c.distance_to_default),
                format!("{:.4}", c.regret),
                c.tied_candidates.to_string(),
            ]
        })
        .collect();
    let header: Vec<String> = ["regime", "w_sigma", "w_omega", "w_zeta", "default", "distance", "regret", "ties"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let res = results.values().next().map_or(0.0, |c| c.resolution);
    text_table(&format!("Calibrated combiner weights (grid resolution {res})"), &header, &rows)
}
