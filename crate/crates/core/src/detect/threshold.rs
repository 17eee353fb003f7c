use super::DetectError;

pub const DEFAULT_FPR: f64 = 1e-3;

/// FPR operating points exported as ROC coordinates.
pub const ROC_FPR_GRID: [f64; 13] = [1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5, 0.9];

fn check_fpr(fpr: f64) -> Result<(), DetectError> {
    if fpr > 0.0 && fpr < 1.0 {
        Ok(())
    } else {
        Err(DetectError::Fpr(fpr))
    }
}

fn sorted_copy(scores: &[f64]) -> Result<Vec<f64>, DetectError> {
    if let Some(&bad) = scores.iter().find(|v| !v.is_finite()) {
        return Err(DetectError::NonFinite(bad));
    }
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Order-statistic index for the (1 − fpr) quantile, taking the higher
/// order statistic. A small epsilon keeps `(1 − 0.1)·10` at 9.
fn quantile_index(n: usize, fpr: f64) -> usize {
    let x = (1.0 - fpr) * n as f64;
    ((x + 1e-9).floor() as usize).min(n - 1)
}

/// Threshold `t` with at most `fpr·n` null scores strictly above it.
pub fn calibrate_threshold(null_scores: &[f64], target_fpr: f64) -> Result<f64, DetectError> {
    check_fpr(target_fpr)?;
    if null_scores.is_empty() {
        return Err(DetectError::EmptyNull);
    }
    let sorted = sorted_copy(null_scores)?;
    Ok(sorted[quantile_index(sorted.len(), target_fpr)])
}

/// Empirical null CDF at `raw`: the fraction of null scores `<= raw`.
pub fn unit_score(raw: f64, null_scores: &[f64]) -> Result<f64, DetectError> {
    NullReference::new(null_scores).map(|r| r.unit_score(raw))
}

/// Sorted null sample, reused across many lookups.
#[derive(Debug, Clone, PartialEq)]
pub struct NullReference {
    sorted: Vec<f64>,
}

impl NullReference {
    pub fn new(null_scores: &[f64]) -> Result<Self, DetectError> {
        if null_scores.is_empty() {
            return Err(DetectError::EmptyNull);
        }
        Ok(NullReference { sorted: sorted_copy(null_scores)? })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn unit_score(&self, raw: f64) -> f64 {
        if raw.is_nan() {
            return 0.0;
        }
        let below = self.sorted.partition_point(|&x| x <= raw);
        (below as f64 / self.sorted.len() as f64).clamp(0.0, 1.0)
    }

    pub fn threshold(&self, target_fpr: f64) -> Result<f64, DetectError> {
        check_fpr(target_fpr)?;
        Ok(self.sorted[quantile_index(self.sorted.len(), target_fpr)])
    }

    /// Fraction of null scores strictly above `t`.
    pub fn exceedance(&self, t: f64) -> f64 {
        let above = self.sorted.len() - self.sorted.partition_point(|&x| x <= t);
        above as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// Fraction of positives strictly above `t`.
pub fn tpr_at_threshold(positives: &[f64], t: f64) -> Result<f64, DetectError> {
    if positives.is_empty() {
        return Err(DetectError::EmptyPositives);
    }
    Ok(positives.iter().filter(|&&x| x > t).count() as f64 / positives.len() as f64)
}

pub fn empirical_tpr_at_fpr(positives: &[f64], null_scores: &[f64], fpr: f64) -> Result<f64, DetectError> {
    if positives.is_empty() {
        return Err(DetectError::EmptyPositives);
    }
    let t = calibrate_threshold(null_scores, fpr)?;
    tpr_at_threshold(positives, t)
}

/// Mann–Whitney AUC, ties counted one half.
pub fn roc_auc(positives: &[f64], null_scores: &[f64]) -> Result<f64, DetectError> {
    if positives.is_empty() {
        return Err(DetectError::EmptyPositives);
    }
    let nulls = NullReference::new(null_scores)?;
    let s = nulls.sorted();
    let mut wins = 0.0;
    for &p in positives {
        if !p.is_finite() {
            return Err(DetectError::NonFinite(p));
        }
        let lt = s.partition_point(|&x| x < p);
        let le = s.partition_point(|&x| x <= p);
        wins += lt as f64 + 0.5 * (le - lt) as f64;
    }
    Ok(wins / (positives.len() as f64 * s.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RocPoint {
    pub target_fpr: f64,
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC coordinates at each target FPR in `grid`, using calibrated thresholds.
pub fn roc_curve(positives: &[f64], null_scores: &[f64], grid: &[f64]) -> Result<Vec<RocPoint>, DetectError> {
    let nulls = NullReference::new(null_scores)?;
    grid.iter()
        .map(|&target| {
            let t = nulls.threshold(target)?;
            Ok(RocPoint { target_fpr: target, threshold: t, fpr: nulls.exceedance(t), tpr: tpr_at_threshold(positives, t)? })
        })
        .collect()
}
