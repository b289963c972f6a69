use nalgebra::DMatrix;

use super::data::{ModelData, SiteData};
use super::density::{inv_gamma_logpdf, inv_wishart_logpdf, mvn_zero_logpdf, normal_logpdf, uniform_logpdf};
use super::grouping::N_METRICS;
use super::likelihood::{multinomial_loglik, negative_group_loglik, positive_group_loglik};
use super::links::{link_inverse_negative, link_inverse_positive};
use super::spec::{CoefSlot, CovarianceSpec, ModelSpec};
use super::state::ParameterState;
use crate::{LhfiError, Result};

/// Prior variance of the intercept, regression coefficients, group effect
/// and covariance offset.
pub const PRIOR_LOCATION_VARIANCE: f64 = 100.0;
const IG_SHAPE: f64 = 1.0;
const IG_SCALE: f64 = 1.0;

/// `α_0 + α'x`.
pub fn latent_health_mean(intercept: f64, coefficients: &[f64], x: &[f64]) -> Result<f64> {
    if coefficients.len() != x.len() {
        return Err(LhfiError::invalid(format!(
            "{} coefficients but {} covariates",
            coefficients.len(),
            x.len()
        )));
    }
    Ok(intercept + coefficients.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
}

/// Log prior of the regression coefficients (health covariates and, for
/// two-level models, the DD slope).
///
/// Under the correlated prior the (salinity, DD) pair is bivariate normal,
/// written as `p(first) · p(second | first)`. With `ρ = 0` the conditional
/// reduces to the marginal with bit-identical arithmetic, so the result
/// equals the independent prior exactly.
pub fn log_coefficient_prior(state: &ParameterState, spec: &ModelSpec) -> Result<f64> {
    state.check_against(spec)?;
    let reg = &spec.regression;
    let mut slots: Vec<CoefSlot> = (0..reg.covariates.len()).map(CoefSlot::Covariate).collect();
    if reg.is_two_level() {
        slots.push(CoefSlot::DdSlope);
    }
    let pair = if reg.is_correlated() { reg.correlated_pair() } else { None };
    let rho = state.coef_correlation.unwrap_or(0.0);

    let mut lp = 0.0;
    for (k, &slot) in slots.iter().enumerate() {
        let x = state.coefficient(slot);
        let conditional_on = pair.and_then(|(a, b)| {
            let partner = if slot == a {
                b
            } else if slot == b {
                a
            } else {
                return None;
            };
            // Only the later member of the pair is conditioned.
            slots[..k].contains(&partner).then_some(partner)
        });
        lp += match conditional_on {
            Some(partner) => normal_logpdf(
                x,
                rho * state.coefficient(partner),
                PRIOR_LOCATION_VARIANCE * (1.0 - rho * rho),
            ),
            None => normal_logpdf(x, 0.0, PRIOR_LOCATION_VARIANCE),
        };
    }
    Ok(lp)
}

/// Log prior of the metric-effect covariance under `spec.covariance`.
pub(crate) fn log_metric_cov_prior(state: &ParameterState, covariance: CovarianceSpec) -> f64 {
    let sigma = &state.metric_cov;
    match covariance {
        CovarianceSpec::Diagonal => inv_gamma_logpdf(sigma[(0, 0)], IG_SHAPE, IG_SCALE),
        CovarianceSpec::UnstructuredIw => {
            let s = DMatrix::from_iterator(5, 5, sigma.iter().copied());
            inv_wishart_logpdf(&s, 5.0, &DMatrix::identity(5, 5))
        }
        CovarianceSpec::BlockDiagonal => block_iw_logpdf(state, 0.0),
        CovarianceSpec::StructuredOffset => {
            let offset = state.offset.unwrap_or_default();
            if !state.metric_cov_is_pd() {
                return f64::NEG_INFINITY;
            }
            block_iw_logpdf(state, offset) + normal_logpdf(offset, 0.0, PRIOR_LOCATION_VARIANCE)
        }
    }
}

/// `IW_2(Σ_+ − ςJ) + IW_3(Σ_− − ςJ)`.
fn block_iw_logpdf(state: &ParameterState, offset: f64) -> f64 {
    let sigma = &state.metric_cov;
    let pos = DMatrix::from_fn(2, 2, |i, j| sigma[(i, j)] - offset);
    let neg = DMatrix::from_fn(3, 3, |i, j| sigma[(2 + i, 2 + j)] - offset);
    inv_wishart_logpdf(&pos, 2.0, &DMatrix::identity(2, 2))
        + inv_wishart_logpdf(&neg, 3.0, &DMatrix::identity(3, 3))
}

/// Sum of all prior log-densities. Excludes the metric-effect and
/// latent-regression terms, which belong to the hierarchy rather than the
/// priors.
pub fn log_prior(state: &ParameterState, spec: &ModelSpec) -> Result<f64> {
    let reg = &spec.regression;
    let mut lp = normal_logpdf(state.intercept, 0.0, PRIOR_LOCATION_VARIANCE);
    lp += log_coefficient_prior(state, spec)?;
    lp += normal_logpdf(state.group_effect, 0.0, PRIOR_LOCATION_VARIANCE);
    lp += inv_gamma_logpdf(state.health_var, IG_SHAPE, IG_SCALE);
    if reg.is_two_level() {
        lp += inv_gamma_logpdf(state.salinity_var.unwrap_or_default(), IG_SHAPE, IG_SCALE);
    }
    lp += log_metric_cov_prior(state, spec.covariance);
    if reg.is_correlated() {
        lp += uniform_logpdf(state.coef_correlation.unwrap_or_default(), -1.0, 1.0);
    }
    Ok(lp)
}

/// Both groups' multinomial log-likelihood at one site, from pooled
/// sufficient statistics. `nu` is in canonical metric order.
pub fn site_log_likelihood(site: &SiteData, nu: &[f64; N_METRICS]) -> f64 {
    let s = &site.stats;
    s.log_coefficient
        + positive_group_loglik(&s.positive_totals, s.cardinality, [nu[0], nu[1]])
        + negative_group_loglik(&s.negative_totals, s.cardinality, [nu[2], nu[3], nu[4]])
}

/// Total multinomial log-likelihood, replicate by replicate, through the
/// link inverses and the multinomial PMF.
pub fn multinomial_log_likelihood(state: &ParameterState, data: &ModelData) -> Result<f64> {
    if state.health.len() != data.n_sites() {
        return Err(LhfiError::invalid(format!(
            "state has {} health values for {} sites",
            state.health.len(),
            data.n_sites()
        )));
    }
    let mut ll = 0.0;
    for (site, nu) in data.sites.iter().zip(state.linear_predictors()) {
        let p_pos = link_inverse_positive([nu[0], nu[1]])?;
        let p_neg = link_inverse_negative([nu[2], nu[3], nu[4]])?;
        for (c, obs) in site.canonical_counts.iter().zip(&site.replicates) {
            ll += multinomial_loglik(&[c[0], c[1]], obs.cardinality, &p_pos)?;
            ll += multinomial_loglik(&[c[2], c[3], c[4]], obs.cardinality, &p_neg)?;
        }
    }
    Ok(ll)
}

/// `−2 ×` the total multinomial log-likelihood.
pub fn deviance(state: &ParameterState, data: &ModelData) -> Result<f64> {
    Ok(-2.0 * multinomial_log_likelihood(state, data)?)
}

/// Unnormalized joint log-posterior of `state` given `data` under `spec`.
pub fn joint_log_posterior(state: &ParameterState, data: &ModelData, spec: &ModelSpec) -> Result<f64> {
    let lp = log_prior(state, spec)?;
    if state.health.len() != data.n_sites() {
        return Err(LhfiError::invalid(format!(
            "state has {} health values for {} sites",
            state.health.len(),
            data.n_sites()
        )));
    }
    if lp == f64::NEG_INFINITY || !(state.health_var > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut total = lp + multinomial_log_likelihood(state, data)?;
    for (site, &h) in data.sites.iter().zip(&state.health) {
        let mean = latent_health_mean(state.intercept, &state.coefficients, &site.covariates)?;
        total += normal_logpdf(h, mean, state.health_var);
    }
    let cov = DMatrix::from_iterator(5, 5, state.metric_cov.iter().copied());
    total += mvn_zero_logpdf(&state.metric_effects, &cov);
    if spec.regression.is_two_level() {
        let slope = state.dd_slope.unwrap_or_default();
        let var = state.salinity_var.unwrap_or_default();
        for site in &data.sites {
            let (Some(sal), Some(dd)) = (site.salinity, site.dd) else {
                return Err(LhfiError::invalid(format!(
                    "site {} lacks salinity/DD values required by a two-level spec",
                    site.site_id
                )));
            };
            total += normal_logpdf(sal, slope * dd, var);
        }
    }
    Ok(total)
}
