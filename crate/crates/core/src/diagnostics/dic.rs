use crate::model::{deviance, ModelData, ParameterState};
use crate::sampler::ChainOutput;
use crate::{LhfiError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dic {
    pub dic: f64,
    pub p_d: f64,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
}

/// `D̄ + p_D` with `p_D = D̄ − D(θ̄)`.
pub fn dic(deviance_draws: &[f64], deviance_at_mean: f64) -> Result<Dic> {
    if deviance_draws.is_empty() {
        return Err(LhfiError::invalid("DIC needs at least one deviance draw"));
    }
    let mean_deviance = deviance_draws.iter().sum::<f64>() / deviance_draws.len() as f64;
    let p_d = mean_deviance - deviance_at_mean;
    Ok(Dic { dic: mean_deviance + p_d, p_d, mean_deviance, deviance_at_mean })
}

/// Posterior mean of every continuous field across pooled draws.
pub fn posterior_mean_state<'a>(draws: impl IntoIterator<Item = &'a ParameterState>) -> Result<ParameterState> {
    let mut iter = draws.into_iter();
    let first = iter.next().ok_or_else(|| LhfiError::invalid("no draws to average"))?;
    let mut acc = first.clone();
    let mut n = 1.0;
    let add = |a: &mut f64, b: f64| *a += b;
    for d in iter {
        n += 1.0;
        acc.health.iter_mut().zip(&d.health).for_each(|(a, b)| add(a, *b));
        add(&mut acc.intercept, d.intercept);
        acc.coefficients.iter_mut().zip(&d.coefficients).for_each(|(a, b)| add(a, *b));
        if let (Some(a), Some(b)) = (acc.dd_slope.as_mut(), d.dd_slope) {
            add(a, b);
        }
        add(&mut acc.group_effect, d.group_effect);
        acc.metric_effects.iter_mut().zip(&d.metric_effects).for_each(|(a, b)| add(a, *b));
        add(&mut acc.health_var, d.health_var);
        if let (Some(a), Some(b)) = (acc.salinity_var.as_mut(), d.salinity_var) {
            add(a, b);
        }
        acc.metric_cov += d.metric_cov;
        if let (Some(a), Some(b)) = (acc.offset.as_mut(), d.offset) {
            add(a, b);
        }
        if let (Some(a), Some(b)) = (acc.coef_correlation.as_mut(), d.coef_correlation) {
            add(a, b);
        }
    }
    let div = |a: &mut f64| *a /= n;
    acc.health.iter_mut().for_each(div);
    div(&mut acc.intercept);
    acc.coefficients.iter_mut().for_each(div);
    acc.dd_slope.as_mut().map(div);
    div(&mut acc.group_effect);
    acc.metric_effects.iter_mut().for_each(div);
    div(&mut acc.health_var);
    acc.salinity_var.as_mut().map(div);
    acc.metric_cov /= n;
    acc.offset.as_mut().map(div);
    acc.coef_correlation.as_mut().map(div);
    Ok(acc)
}

/// DIC of a fitted model from pooled chain output; the plug-in deviance
/// uses the posterior means of health, group effect and metric effects.
pub fn model_dic(chains: &[ChainOutput], data: &ModelData) -> Result<Dic> {
    let draws: Vec<f64> = chains.iter().flat_map(|c| c.deviance.iter().copied()).collect();
    let mean = posterior_mean_state(chains.iter().flat_map(|c| c.draws.iter()))?;
    dic(&draws, deviance(&mean, data)?)
}
