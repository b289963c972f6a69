use super::quantile::{ecdf_quantile_sorted, sorted};
use crate::{LhfiError, Result};

const LOWER: f64 = 0.1;
const UPPER: f64 = 0.9;
/// Minimum draws per chain.
pub const BGR_MIN_DRAWS: usize = 10;
const MAX_CURVE_POINTS: usize = 50;

/// Pooled and mean within-chain 80% interval widths over growing prefixes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BgrCurves {
    /// Prefix length (draws per chain) at each point.
    pub prefix: Vec<usize>,
    pub pooled: Vec<f64>,
    pub within: Vec<f64>,
    pub ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BgrResult {
    pub rhat: f64,
    pub pooled_width: f64,
    pub within_width: f64,
    pub curves: BgrCurves,
}

fn width(values: &[f64]) -> f64 {
    let s = sorted(values);
    ecdf_quantile_sorted(&s, UPPER) - ecdf_quantile_sorted(&s, LOWER)
}

/// `(pooled width, mean within-chain width)` over the given draws.
fn widths(chains: &[&[f64]]) -> (f64, f64) {
    let pooled: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
    let within = chains.iter().map(|c| width(c)).sum::<f64>() / chains.len() as f64;
    (width(&pooled), within)
}

/// Interval-based Brooks-Gelman-Rubin statistic: the ratio of the pooled
/// 80% interval width to the mean within-chain width, over all supplied
/// draws. Curves use the second half of each growing prefix.
pub fn bgr_statistic(chains: &[&[f64]]) -> Result<BgrResult> {
    if chains.len() < 2 {
        return Err(LhfiError::invalid(format!("BGR needs at least 2 chains, got {}", chains.len())));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(LhfiError::invalid("BGR chains must have equal lengths"));
    }
    if n < BGR_MIN_DRAWS {
        return Err(LhfiError::invalid(format!("BGR needs at least {BGR_MIN_DRAWS} draws per chain, got {n}")));
    }
    if chains.iter().flat_map(|c| c.iter()).any(|v| !v.is_finite()) {
        return Err(LhfiError::invalid("BGR draws must be finite"));
    }
    let (pooled_width, within_width) = widths(chains);
    if !(within_width > 0.0) {
        return Err(LhfiError::DegenerateInput("within-chain interval width is zero".into()));
    }

    let mut curves = BgrCurves::default();
    let points = MAX_CURVE_POINTS.min(n / 2);
    for k in 1..=points {
        let len = (n * k / points).max(2);
        let halves: Vec<&[f64]> = chains.iter().map(|c| &c[len / 2..len]).collect();
        let (p, w) = widths(&halves);
        if w > 0.0 {
            curves.prefix.push(len);
            curves.pooled.push(p);
            curves.within.push(w);
            curves.ratio.push(p / w);
        }
    }
    Ok(BgrResult { rhat: pooled_width / within_width, pooled_width, within_width, curves })
}
