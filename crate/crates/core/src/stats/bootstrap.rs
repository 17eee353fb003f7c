use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::par::Exec;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { resamples: 1000, level: 0.95, seed: seed::DEFAULT_SEED, exec: Exec::default() }
    }
}

impl BootstrapConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        BootstrapConfig { seed, ..self }
    }

    fn validate(&self) -> Result<(), StatsError> {
        if self.resamples == 0 {
            return Err(StatsError::Config("resample count must be positive".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(StatsError::Config(format!("level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }

    /// Generator for resample `b`; independent of how resamples are scheduled.
    fn rng(&self, family: &str, b: usize) -> rand_chacha::ChaCha8Rng {
        seed::rng(seed::derive_indexed(self.seed, family, b as u64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "kebab-case")]
pub enum BootStatistic {
    Mean,
    /// Fraction of values strictly above a fixed detection threshold.
    TprAtThreshold(f64),
}

impl BootStatistic {
    fn eval(&self, values: &[f64], idx: impl Iterator<Item = usize>) -> f64 {
        let (mut acc, mut n) = (0.0, 0usize);
        for i in idx {
            acc += match self {
                BootStatistic::Mean => values[i],
                BootStatistic::TprAtThreshold(t) => (values[i] > *t) as u8 as f64,
            };
            n += 1;
        }
        acc / n as f64
    }
}

/// Linear interpolation between order statistics (R type 7).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn resample_indices<'a>(rng: &'a mut impl Rng, n: usize) -> impl Iterator<Item = usize> + 'a {
    (0..n).map(move |_| rng.gen_range(0..n))
}

fn interval(point: f64, mut stats: Vec<f64>, level: f64) -> Interval {
    stats.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    Interval { point, lo: percentile(&stats, a), hi: percentile(&stats, 1.0 - a) }
}

/// Percentile bootstrap interval.
pub fn bootstrap_ci(values: &[f64], statistic: BootStatistic, cfg: &BootstrapConfig) -> Result<Interval, StatsError> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = values.len();
    let point = statistic.eval(values, 0..n);
    let stats = cfg.exec.map_range(cfg.resamples, |b| {
        let mut rng = cfg.rng("bootstrap", b);
        statistic.eval(values, resample_indices(&mut rng, n))
    });
    Ok(interval(point, stats, cfg.level))
}

/// Percentile bootstrap of an arbitrary statistic over resampled indices.
pub fn bootstrap_ci_by<F>(n: usize, statistic: F, cfg: &BootstrapConfig) -> Result<Interval, StatsError>
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    cfg.validate()?;
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let all: Vec<usize> = (0..n).collect();
    let point = statistic(&all);
    let stats = cfg.exec.map_range(cfg.resamples, |b| {
        let mut rng = cfg.rng("bootstrap", b);
        let idx: Vec<usize> = resample_indices(&mut rng, n).collect();
        statistic(&idx)
    });
    Ok(interval(point, stats, cfg.level))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    /// Observed mean of `a − b`.
    pub difference: f64,
    /// Two-sided p, never below `1 / (B + 1)`.
    pub p_value: f64,
    pub resamples: usize,
    pub ci: Interval,
}

/// Paired bootstrap test of `mean(a) = mean(b)` on per-item detection
/// indicators. p = 2·min(#{d* ≤ 0}, #{d* ≥ 0}) / B, capped at 1.
pub fn paired_bootstrap_test(a: &[bool], b: &[bool], cfg: &BootstrapConfig) -> Result<PairedTest, StatsError> {
    cfg.validate()?;
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = a.len();
    let d: Vec<i8> = a.iter().zip(b).map(|(&x, &y)| x as i8 - y as i8).collect();
    let mean = |idx: &mut dyn Iterator<Item = usize>| -> (i64, f64) {
        let s: i64 = idx.map(|i| d[i] as i64).sum();
        (s, s as f64 / n as f64)
    };
    let (_, observed) = mean(&mut (0..n));
    let draws = cfg.exec.map_range(cfg.resamples, |r| {
        let mut rng = cfg.rng("paired", r);
        let mut idx = resample_indices(&mut rng, n);
        mean(&mut idx)
    });
    let le = draws.iter().filter(|(s, _)| *s <= 0).count();
    let ge = draws.iter().filter(|(s, _)| *s >= 0).count();
    let bsz = cfg.resamples as f64;
    let p = (2.0 * le.min(ge) as f64 / bsz).min(1.0).max(1.0 / (bsz + 1.0));
    let ci = interval(observed, draws.into_iter().map(|(_, m)| m).collect(), cfg.level);
    Ok(PairedTest { difference: observed, p_value: p, resamples: cfg.resamples, ci })
}

/// [`paired_bootstrap_test`] with pairing by item id. The canonical id order
/// makes the result independent of input order.
pub fn paired_bootstrap_by_id(
    a: &BTreeMap<String, bool>,
    b: &BTreeMap<String, bool>,
    cfg: &BootstrapConfig,
) -> Result<PairedTest, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if !a.keys().eq(b.keys()) {
        return Err(StatsError::UnpairedIds);
    }
    let av: Vec<bool> = a.values().copied().collect();
    let bv: Vec<bool> = b.values().copied().collect();
    paired_bootstrap_test(&av, &bv, cfg)
}
