use super::spec::LatentRegressionSpec;
use crate::{LhfiError, Result};

/// Health regression with salinity substituted out:
/// `H = α_0 + α'_{−sal} x_{−sal} + (α_sal α_DD) x_DD + α_sal δ + ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedRegression {
    /// Remaining covariates followed by DD.
    pub covariates: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Loading `α_sal` of the salinity residual in the error term.
    pub error_loading: f64,
}

impl CollapsedRegression {
    pub fn dd_coefficient(&self) -> f64 {
        *self.coefficients.last().expect("collapsed regression always ends with DD")
    }
}

pub fn collapse_two_level(
    spec: &LatentRegressionSpec,
    coefficients: &[f64],
    dd_slope: f64,
) -> Result<CollapsedRegression> {
    if coefficients.len() != spec.covariates.len() {
        return Err(LhfiError::invalid("coefficient count does not match covariates"));
    }
    let sal = spec.covariate_index(&spec.salinity).ok_or_else(|| {
        LhfiError::invalid(format!("no '{}' coefficient to collapse", spec.salinity))
    })?;
    let alpha_sal = coefficients[sal];
    let mut covariates = Vec::with_capacity(spec.covariates.len());
    let mut collapsed = Vec::with_capacity(spec.covariates.len());
    for (i, (name, &c)) in spec.covariates.iter().zip(coefficients).enumerate() {
        if i != sal {
            covariates.push(name.clone());
            collapsed.push(c);
        }
    }
    covariates.push(spec.dd.clone());
    collapsed.push(alpha_sal * dd_slope);
    Ok(CollapsedRegression { covariates, coefficients: collapsed, error_loading: alpha_sal })
}

/// Share of the collapsed error variance not explained by the implicit
/// salinity covariate: `σ_H² / (α_sal² σ_δ² + σ_H²)`.
pub fn variance_ratio(health_var: f64, alpha_sal: f64, salinity_var: f64) -> Result<f64> {
    if !(health_var > 0.0) || !(salinity_var > 0.0) {
        return Err(LhfiError::invalid(format!(
            "variances must be positive (σ_H² = {health_var}, σ_δ² = {salinity_var})"
        )));
    }
    if !alpha_sal.is_finite() {
        return Err(LhfiError::invalid("salinity coefficient not finite"));
    }
    Ok(health_var / (alpha_sal * alpha_sal * salinity_var + health_var))
}
