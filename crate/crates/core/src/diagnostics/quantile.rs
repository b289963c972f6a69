/// Linear-interpolation sample quantile (Hyndman-Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Inverse empirical CDF averaged at discontinuities (type 2). Depends on
/// the data only through its ECDF, so duplicating a sample leaves it
/// unchanged, and it is symmetric under negation.
pub fn ecdf_quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let np = n as f64 * p.clamp(0.0, 1.0);
    let k = np.round();
    let idx = |i: f64| sorted[(i as usize).clamp(1, n) - 1];
    if (np - k).abs() < 1e-9 * n as f64 {
        0.5 * (idx(k) + idx(k + 1.0))
    } else {
        idx(np.ceil())
    }
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}
