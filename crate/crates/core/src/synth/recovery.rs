use std::collections::BTreeMap;

use statrs::distribution::{Binomial, DiscreteCDF};

use super::design::SynthDesign;
use super::generate::generate;
use crate::diagnostics::{coefficient_label, monitored_draws, summarize};
use crate::model::{CovarianceSpec, ModelData, ModelSpec};
use crate::sampler::{run_chains, NoProgress, SamplerConfig};
use crate::Result;

const LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryRow {
    pub name: String,
    pub truth: f64,
    pub fits: usize,
    pub covered: usize,
    pub mean_width: f64,
}

impl RecoveryRow {
    pub fn coverage(&self) -> f64 {
        if self.fits == 0 {
            f64::NAN
        } else {
            self.covered as f64 / self.fits as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecoveryReport {
    pub replications: usize,
    pub rows: Vec<RecoveryRow>,
    /// Replications whose generation or fit failed, with the error.
    pub failures: Vec<(usize, String)>,
}

impl RecoveryReport {
    pub fn row(&self, name: &str) -> Option<&RecoveryRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Parameters whose coverage is implausibly low for nominal 95%
    /// intervals (one-sided binomial test at the 5% level).
    pub fn flagged(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| {
                r.fits > 0
                    && Binomial::new(LEVEL, r.fits as u64).map(|b| b.cdf(r.covered as u64) < 0.05).unwrap_or(false)
            })
            .map(|r| r.name.clone())
            .collect()
    }
}

/// True values of the design's monitored scalars that keep their meaning
/// under `fit`.
fn truth_labels(design: &SynthDesign, fit: &ModelSpec) -> Vec<(String, f64)> {
    let reg = &design.spec.regression;
    let t = &design.truth;
    let mut out = vec![("alpha0".to_string(), t.intercept)];
    for (name, &c) in reg.covariates.iter().zip(&t.coefficients) {
        out.push((coefficient_label(name), c));
    }
    if let (true, Some(slope)) = (reg.is_two_level(), t.dd_slope) {
        if fit.regression.is_two_level() {
            out.push((coefficient_label(&reg.dd), slope));
        }
    } else if !reg.is_two_level() && fit.regression.is_two_level() {
        out.retain(|(n, _)| *n != coefficient_label(&reg.dd));
    }
    out.push(("sigma_h".into(), t.health_sd));
    out.push(("theta2".into(), t.group_effect));
    if let Some(sd) = t.salinity_sd.filter(|_| reg.is_two_level() && fit.regression.is_two_level()) {
        out.push(("sigma_delta".into(), sd));
    }
    if design.spec.covariance == CovarianceSpec::Diagonal && fit.covariance == CovarianceSpec::Diagonal {
        out.push(("sigma_beta".into(), t.metric_cov[0][0].sqrt()));
    }
    if let Some(r) = t.coef_correlation.filter(|_| fit.regression.is_correlated()) {
        out.push(("rho".into(), r));
    }
    out
}

/// Repeatedly simulates from `design` and fits `fit`, recording whether each
/// true value falls in its 95% credible interval. Replication `r` uses
/// design seed `design.seed + r` and sampler seed `config.seed + r`.
pub fn recovery_study(
    design: &SynthDesign,
    fit: &ModelSpec,
    config: &SamplerConfig,
    n_replications: usize,
) -> RecoveryReport {
    let truths = truth_labels(design, fit);
    let mut acc: BTreeMap<String, (usize, usize, f64)> = BTreeMap::new();
    let mut report = RecoveryReport { replications: n_replications, ..Default::default() };
    for r in 0..n_replications {
        match replicate(design, fit, config, r) {
            Ok(intervals) => {
                for (name, truth) in &truths {
                    if let Some(&(lo, hi)) = intervals.get(name) {
                        let e = acc.entry(name.clone()).or_default();
                        e.0 += 1;
                        e.1 += usize::from(lo <= *truth && *truth <= hi);
                        e.2 += hi - lo;
                    }
                }
            }
            Err(e) => report.failures.push((r, e.to_string())),
        }
    }
    report.rows = truths
        .iter()
        .filter_map(|(name, truth)| {
            acc.get(name).map(|&(fits, covered, width)| RecoveryRow {
                name: name.clone(),
                truth: *truth,
                fits,
                covered,
                mean_width: width / fits as f64,
            })
        })
        .collect();
    report
}

fn replicate(
    design: &SynthDesign,
    fit: &ModelSpec,
    config: &SamplerConfig,
    r: usize,
) -> Result<BTreeMap<String, (f64, f64)>> {
    let design = SynthDesign { seed: design.seed.wrapping_add(r as u64), ..design.clone() };
    let data = generate(&design)?;
    let model = ModelData::assemble(&data.observations, &data.table, fit)?;
    let config = SamplerConfig { seed: config.seed.wrapping_add(r as u64), ..config.clone() };
    let chains = run_chains(&model, fit, &config, &NoProgress)?;
    let draws = monitored_draws(&chains, fit, &model.site_ids())?;
    let summaries = summarize(&draws, &[LEVEL])?;
    Ok(summaries
        .into_iter()
        .map(|s| {
            let ci = s.intervals[0];
            (s.name, (ci.lower, ci.upper))
        })
        .collect())
}
