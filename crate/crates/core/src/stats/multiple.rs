/// Bonferroni-adjusted p for `k` comparisons.
pub fn bonferroni(p: f64, k: usize) -> f64 {
    (p * k.max(1) as f64).min(1.0)
}

/// Holm step-down adjusted p-values, in input order.
pub fn holm(ps: &[f64]) -> Vec<f64> {
    let m = ps.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| ps[a].total_cmp(&ps[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * ps[i]).min(1.0));
        out[i] = running;
    }
    out
}
