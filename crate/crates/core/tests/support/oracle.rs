//! Term-by-term evaluation of the joint log-posterior, written directly
//! from the model definition without using any library internals beyond
//! the data types.

#![allow(dead_code)]

use lhfi::model::{CovarianceSpec, ModelData, ModelSpec, ParameterState};
use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

fn ln_fact(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

fn normal(x: f64, m: f64, v: f64) -> f64 {
    -0.5 * (2.0 * PI * v).ln() - (x - m) * (x - m) / (2.0 * v)
}

fn inv_gamma(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - b / x
}

/// Inverse-Wishart density by determinant, inverse and trace.
fn inv_wishart(sigma: &DMatrix<f64>, nu: f64, scale: &DMatrix<f64>) -> f64 {
    let d = sigma.nrows() as f64;
    let det = sigma.determinant();
    if det <= 0.0 || sigma.clone().cholesky().is_none() {
        return f64::NEG_INFINITY;
    }
    let inv = sigma.clone().try_inverse().unwrap();
    let mut log_gamma_d = d * (d - 1.0) / 4.0 * PI.ln();
    for j in 1..=sigma.nrows() {
        log_gamma_d += ln_gamma(nu / 2.0 + (1.0 - j as f64) / 2.0);
    }
    nu / 2.0 * scale.determinant().ln() - nu * d / 2.0 * 2f64.ln() - log_gamma_d - (nu + d + 1.0) / 2.0 * det.ln()
        - 0.5 * (scale * inv).trace()
}

fn mvn(x: &[f64], cov: &DMatrix<f64>) -> f64 {
    let d = x.len() as f64;
    let det = cov.determinant();
    if det <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let inv = cov.clone().try_inverse().unwrap();
    let v = nalgebra::DVector::from_column_slice(x);
    -0.5 * d * (2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * (v.transpose() * inv * &v)[(0, 0)]
}

/// Probabilities of the named categories and residual, by direct
/// exponentiation (fine for the small linear predictors used here).
fn probs(nu: &[f64], sign: f64) -> (Vec<f64>, f64) {
    let e: Vec<f64> = nu.iter().map(|v| (sign * v).exp()).collect();
    let denom = 1.0 + e.iter().sum::<f64>();
    (e.iter().map(|x| x / denom).collect(), 1.0 / denom)
}

fn multinomial(counts: &[u32], n: u32, p: &[f64], residual: f64) -> f64 {
    let used: u32 = counts.iter().sum();
    let rest = n - used;
    let mut ll = ln_fact(n) - ln_fact(rest) + rest as f64 * residual.ln();
    for (&c, &pj) in counts.iter().zip(p) {
        ll += -ln_fact(c) + c as f64 * pj.ln();
    }
    ll
}

pub fn joint_log_posterior(state: &ParameterState, data: &ModelData, spec: &ModelSpec) -> f64 {
    let reg = &spec.regression;
    let v0 = 100.0;
    let mut lp = normal(state.intercept, 0.0, v0);
    lp += normal(state.group_effect, 0.0, v0);
    lp += inv_gamma(state.health_var, 1.0, 1.0);

    // Regression coefficients, with the (salinity, DD) pair jointly normal.
    let sal = reg.covariates.iter().position(|c| *c == reg.salinity);
    let dd_in_health = reg.covariates.iter().position(|c| *c == reg.dd);
    let pair: Option<(f64, f64)> = if reg.coefficient_prior == lhfi::model::CoefficientPrior::Correlated {
        let a = state.coefficients[sal.unwrap()];
        let b = if reg.is_two_level() { state.dd_slope.unwrap() } else { state.coefficients[dd_in_health.unwrap()] };
        Some((a, b))
    } else {
        None
    };
    for (i, &c) in state.coefficients.iter().enumerate() {
        let in_pair = pair.is_some() && (Some(i) == sal || (!reg.is_two_level() && Some(i) == dd_in_health));
        if !in_pair {
            lp += normal(c, 0.0, v0);
        }
    }
    if reg.is_two_level() && pair.is_none() {
        lp += normal(state.dd_slope.unwrap(), 0.0, v0);
    }
    if let Some((a, b)) = pair {
        let r = state.coef_correlation.unwrap();
        if r.abs() >= 1.0 {
            return f64::NEG_INFINITY;
        }
        let cov = DMatrix::from_row_slice(2, 2, &[v0, r * v0, r * v0, v0]);
        lp += mvn(&[a, b], &cov);
        lp += (0.5f64).ln();
    }
    if reg.is_two_level() {
        lp += inv_gamma(state.salinity_var.unwrap(), 1.0, 1.0);
    }

    let sigma = DMatrix::from_fn(5, 5, |i, j| state.metric_cov[(i, j)]);
    lp += match spec.covariance {
        CovarianceSpec::Diagonal => inv_gamma(sigma[(0, 0)], 1.0, 1.0),
        CovarianceSpec::UnstructuredIw => inv_wishart(&sigma, 5.0, &DMatrix::identity(5, 5)),
        CovarianceSpec::BlockDiagonal | CovarianceSpec::StructuredOffset => {
            let o = if spec.covariance == CovarianceSpec::StructuredOffset { state.offset.unwrap() } else { 0.0 };
            if sigma.clone().cholesky().is_none() {
                return f64::NEG_INFINITY;
            }
            let p = DMatrix::from_fn(2, 2, |i, j| sigma[(i, j)] - o);
            let n = DMatrix::from_fn(3, 3, |i, j| sigma[(2 + i, 2 + j)] - o);
            let mut t = inv_wishart(&p, 2.0, &DMatrix::identity(2, 2)) + inv_wishart(&n, 3.0, &DMatrix::identity(3, 3));
            if spec.covariance == CovarianceSpec::StructuredOffset {
                t += normal(o, 0.0, v0);
            }
            t
        }
    };

    lp += mvn(&state.metric_effects, &sigma);

    for (i, site) in data.sites.iter().enumerate() {
        let h = state.health[i];
        let mean = state.intercept + state.coefficients.iter().zip(&site.covariates).map(|(a, x)| a * x).sum::<f64>();
        lp += normal(h, mean, state.health_var);
        if reg.is_two_level() {
            lp += normal(site.salinity.unwrap(), state.dd_slope.unwrap() * site.dd.unwrap(), state.salinity_var.unwrap());
        }
        let b = &state.metric_effects;
        let t = state.group_effect;
        let nu_pos = [h + b[0], h + b[1]];
        let nu_neg = [h + t + b[2], h + t + b[3], h + t + b[4]];
        let (pp, pr) = probs(&nu_pos, 1.0);
        let (np, nr) = probs(&nu_neg, -1.0);
        for (rep, c) in site.replicates.iter().zip(&site.canonical_counts) {
            lp += multinomial(&c[..2], rep.cardinality, &pp, pr);
            lp += multinomial(&c[2..], rep.cardinality, &np, nr);
        }
    }
    lp
}
