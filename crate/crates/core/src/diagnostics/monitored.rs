use crate::model::{variance_ratio, CovarianceSpec, ModelSpec, ParameterState, N_METRICS};
use crate::sampler::ChainOutput;
use crate::{LhfiError, Result};

use super::summary::ParameterDraws;

/// Output label of the health-regression coefficient of `covariate`.
pub fn coefficient_label(covariate: &str) -> String {
    format!("alpha_{covariate}")
}

pub fn health_label(site_id: u32) -> String {
    format!("H[{site_id}]")
}

type Extractor = Box<dyn Fn(&ParameterState) -> f64>;

/// Scalar quantities reported for a fitted model, in output order.
///
/// Regression terms come first, then scale parameters, the group effect,
/// the two-level quantities, covariance terms and finally per-site health.
/// Metric effects themselves are nuisance parameters and are not listed.
pub fn monitored_quantities(spec: &ModelSpec, site_ids: &[u32]) -> Result<Vec<(String, Extractor)>> {
    let reg = &spec.regression;
    let mut out: Vec<(String, Extractor)> = vec![("alpha0".into(), Box::new(|s: &ParameterState| s.intercept))];
    for (i, name) in reg.covariates.iter().enumerate() {
        out.push((coefficient_label(name), Box::new(move |s: &ParameterState| s.coefficients[i])));
    }
    if reg.is_two_level() {
        out.push((coefficient_label(&reg.dd), Box::new(|s: &ParameterState| s.dd_slope.unwrap_or(f64::NAN))));
    }
    match spec.covariance {
        CovarianceSpec::Diagonal => {
            out.push(("sigma_beta".into(), Box::new(|s: &ParameterState| s.metric_variance().sqrt())));
        }
        _ => {
            for i in 0..N_METRICS {
                for j in i..N_METRICS {
                    out.push((
                        format!("Sigma[{},{}]", i + 1, j + 1),
                        Box::new(move |s: &ParameterState| s.metric_cov[(i, j)]),
                    ));
                }
            }
            if spec.covariance == CovarianceSpec::StructuredOffset {
                out.push(("offset".into(), Box::new(|s: &ParameterState| s.offset.unwrap_or(f64::NAN))));
            }
        }
    }
    out.push(("sigma_h".into(), Box::new(|s: &ParameterState| s.health_var.sqrt())));
    out.push(("theta2".into(), Box::new(|s: &ParameterState| s.group_effect)));
    if reg.is_two_level() {
        let sal = reg
            .covariate_index(&reg.salinity)
            .ok_or_else(|| LhfiError::invalid("two-level spec without salinity coefficient"))?;
        out.push((
            "sigma_delta".into(),
            Box::new(|s: &ParameterState| s.salinity_var.unwrap_or(f64::NAN).sqrt()),
        ));
        out.push((
            "variance_ratio".into(),
            Box::new(move |s: &ParameterState| {
                variance_ratio(s.health_var, s.coefficients[sal], s.salinity_var.unwrap_or(f64::NAN))
                    .unwrap_or(f64::NAN)
            }),
        ));
    }
    if reg.is_correlated() {
        out.push(("rho".into(), Box::new(|s: &ParameterState| s.coef_correlation.unwrap_or(f64::NAN))));
    }
    for (i, &id) in site_ids.iter().enumerate() {
        out.push((health_label(id), Box::new(move |s: &ParameterState| s.health[i])));
    }
    Ok(out)
}

/// Per-chain draw series of every monitored quantity.
pub fn monitored_draws(chains: &[ChainOutput], spec: &ModelSpec, site_ids: &[u32]) -> Result<Vec<ParameterDraws>> {
    Ok(monitored_quantities(spec, site_ids)?
        .into_iter()
        .map(|(name, f)| ParameterDraws { name, chains: chains.iter().map(|c| c.draws.iter().map(&f).collect()).collect() })
        .collect())
}

/// Variance ratio evaluated at the posterior means of `σ_H²`, `α_sal` and
/// `σ_δ²`, as opposed to the per-draw ratio.
pub fn plug_in_variance_ratio(chains: &[ChainOutput], spec: &ModelSpec) -> Result<f64> {
    let reg = &spec.regression;
    if !reg.is_two_level() {
        return Err(LhfiError::NotApplicable("variance ratio requires a two-level spec".into()));
    }
    let sal = reg.covariate_index(&reg.salinity).expect("validated two-level spec");
    let draws: Vec<&ParameterState> = chains.iter().flat_map(|c| c.draws.iter()).collect();
    if draws.is_empty() {
        return Err(LhfiError::invalid("no draws"));
    }
    let n = draws.len() as f64;
    let mean = |f: &dyn Fn(&ParameterState) -> f64| draws.iter().map(|s| f(s)).sum::<f64>() / n;
    variance_ratio(
        mean(&|s| s.health_var),
        mean(&|s| s.coefficients[sal]),
        mean(&|s| s.salinity_var.unwrap_or(f64::NAN)),
    )
}
