use super::bgr::{bgr_statistic, BGR_MIN_DRAWS};
use super::quantile::{quantile_sorted, sorted};
use crate::{LhfiError, Result};

pub const DEFAULT_LEVELS: [f64; 3] = [0.8, 0.95, 0.99];

/// Draws of one scalar parameter, split by chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDraws {
    pub name: String,
    pub chains: Vec<Vec<f64>>,
}

impl ParameterDraws {
    pub fn pooled(&self) -> Vec<f64> {
        self.chains.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

impl CredibleInterval {
    /// Whether the interval excludes zero.
    pub fn is_credible(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }

    pub fn overlaps(&self, other: &CredibleInterval) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    /// Equal-tailed intervals, one per requested level, in the given order.
    pub intervals: Vec<CredibleInterval>,
    /// Pooled BGR statistic when at least two chains of usable length exist.
    pub rhat: Option<f64>,
    pub ess: f64,
    /// Monte Carlo standard error of the mean.
    pub mcse: f64,
}

impl PosteriorSummary {
    pub fn interval(&self, level: f64) -> Option<&CredibleInterval> {
        self.intervals.iter().find(|ci| (ci.level - level).abs() < 1e-12)
    }
}

pub fn credible_interval(sorted_draws: &[f64], level: f64) -> CredibleInterval {
    let tail = (1.0 - level) / 2.0;
    CredibleInterval {
        level,
        lower: quantile_sorted(sorted_draws, tail),
        upper: quantile_sorted(sorted_draws, 1.0 - tail),
    }
}

/// Autocorrelation time by Geyer's initial positive sequence, averaging the
/// autocovariances of equal-length chains.
fn autocorrelation_time(chains: &[Vec<f64>]) -> f64 {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 4 {
        return 1.0;
    }
    let autocov = |lag: usize| -> f64 {
        chains
            .iter()
            .map(|c| {
                let c = &c[..n];
                let m = c.iter().sum::<f64>() / n as f64;
                (0..n - lag).map(|t| (c[t] - m) * (c[t + lag] - m)).sum::<f64>() / n as f64
            })
            .sum::<f64>()
            / chains.len() as f64
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) {
        return 1.0;
    }
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    tau.max(1.0 / n as f64)
}

/// Effective sample size of pooled draws.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let total: usize = chains.iter().map(Vec::len).sum();
    (total as f64 / autocorrelation_time(chains)).min(total as f64 * 10.0)
}

/// Summaries of pooled draws with equal-tailed intervals at each level.
pub fn summarize(params: &[ParameterDraws], levels: &[f64]) -> Result<Vec<PosteriorSummary>> {
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(LhfiError::invalid(format!("credible level {l} outside (0, 1)")));
    }
    params.iter().map(|p| summarize_one(p, levels)).collect()
}

fn summarize_one(p: &ParameterDraws, levels: &[f64]) -> Result<PosteriorSummary> {
    let pooled = p.pooled();
    if pooled.is_empty() {
        return Err(LhfiError::invalid(format!("no draws for '{}'", p.name)));
    }
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(LhfiError::invalid(format!("non-finite draw for '{}'", p.name)));
    }
    let n = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / n;
    let var = if pooled.len() > 1 { pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let s = sorted(&pooled);
    let rhat = if p.chains.len() >= 2 && p.chains.iter().all(|c| c.len() == p.chains[0].len()) {
        let refs: Vec<&[f64]> = p.chains.iter().map(Vec::as_slice).collect();
        if p.chains[0].len() >= BGR_MIN_DRAWS {
            bgr_statistic(&refs).ok().map(|r| r.rhat)
        } else {
            None
        }
    } else {
        None
    };
    let ess = effective_sample_size(&p.chains);
    Ok(PosteriorSummary {
        name: p.name.clone(),
        mean,
        median: quantile_sorted(&s, 0.5),
        sd: var.sqrt(),
        intervals: levels.iter().map(|&l| credible_interval(&s, l)).collect(),
        rhat,
        ess,
        mcse: (var / ess).sqrt(),
    })
}
