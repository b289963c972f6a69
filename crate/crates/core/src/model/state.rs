use nalgebra::{Cholesky, Matrix5};

use super::grouping::N_METRICS;
use super::spec::{CoefSlot, CovarianceSpec, ModelSpec};
use crate::{LhfiError, Result};

pub type MetricMatrix = Matrix5<f64>;

/// One point in the parameter space of an LHFI model.
///
/// Metric effects and their covariance use canonical metric order (positive
/// group first). The positive group effect is fixed at zero and is not
/// stored. Fields that only some [`ModelSpec`]s use are `Option`s; fields a
/// spec does not use are ignored during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterState {
    /// Latent health per site, in [`super::ModelData`] site order.
    pub health: Vec<f64>,
    pub intercept: f64,
    /// Health-regression coefficients aligned with the spec's covariates.
    pub coefficients: Vec<f64>,
    /// Slope of salinity on DD (two-level models).
    pub dd_slope: Option<f64>,
    /// Effect of the negative metric group.
    pub group_effect: f64,
    pub metric_effects: [f64; N_METRICS],
    /// Health-regression error variance `σ_H²`.
    pub health_var: f64,
    /// Salinity-regression error variance `σ_δ²` (two-level models).
    pub salinity_var: Option<f64>,
    pub metric_cov: MetricMatrix,
    /// Common covariance offset `ς` (structured-offset covariance).
    pub offset: Option<f64>,
    /// Prior correlation `ρ` of the (salinity, DD) coefficients.
    pub coef_correlation: Option<f64>,
}

impl ParameterState {
    /// The deterministic starting point: locations at 0, variances at 1,
    /// `Σ = I`, `ς = 0`, `ρ = 0`.
    pub fn initial(n_sites: usize, spec: &ModelSpec) -> Self {
        let reg = &spec.regression;
        Self {
            health: vec![0.0; n_sites],
            intercept: 0.0,
            coefficients: vec![0.0; reg.covariates.len()],
            dd_slope: reg.is_two_level().then_some(0.0),
            group_effect: 0.0,
            metric_effects: [0.0; N_METRICS],
            health_var: 1.0,
            salinity_var: reg.is_two_level().then_some(1.0),
            metric_cov: MetricMatrix::identity(),
            offset: (spec.covariance == CovarianceSpec::StructuredOffset).then_some(0.0),
            coef_correlation: reg.is_correlated().then_some(0.0),
        }
    }

    /// Verifies that every field the spec needs is present with the right
    /// shape. Extra optional fields are allowed and ignored.
    pub fn check_against(&self, spec: &ModelSpec) -> Result<()> {
        let reg = &spec.regression;
        if self.coefficients.len() != reg.covariates.len() {
            return Err(LhfiError::invalid(format!(
                "state has {} regression coefficients, spec has {} covariates",
                self.coefficients.len(),
                reg.covariates.len()
            )));
        }
        if reg.is_two_level() {
            if self.dd_slope.is_none() {
                return Err(LhfiError::invalid("two-level spec requires a DD slope"));
            }
            if self.salinity_var.is_none() {
                return Err(LhfiError::invalid("two-level spec requires a salinity variance"));
            }
        }
        if spec.covariance == CovarianceSpec::StructuredOffset && self.offset.is_none() {
            return Err(LhfiError::invalid("structured-offset covariance requires an offset"));
        }
        if reg.is_correlated() && self.coef_correlation.is_none() {
            return Err(LhfiError::invalid("correlated coefficient prior requires a correlation"));
        }
        match spec.covariance {
            CovarianceSpec::Diagonal => {
                let s = self.metric_cov[(0, 0)];
                if self.metric_cov != MetricMatrix::identity() * s {
                    return Err(LhfiError::invalid("diagonal covariance spec requires Σ = σ²I"));
                }
            }
            CovarianceSpec::BlockDiagonal => {
                if (0..2).any(|i| (2..5).any(|j| self.metric_cov[(i, j)] != 0.0 || self.metric_cov[(j, i)] != 0.0))
                {
                    return Err(LhfiError::invalid("block-diagonal spec requires zero cross-block covariance"));
                }
            }
            CovarianceSpec::StructuredOffset => {
                let o = self.offset.unwrap_or_default();
                if (0..2).any(|i| (2..5).any(|j| self.metric_cov[(i, j)] != o || self.metric_cov[(j, i)] != o)) {
                    return Err(LhfiError::invalid("structured-offset spec requires cross-block covariance equal to the offset"));
                }
            }
            CovarianceSpec::UnstructuredIw => {}
        }
        Ok(())
    }

    pub(crate) fn coefficient(&self, slot: CoefSlot) -> f64 {
        match slot {
            CoefSlot::Covariate(i) => self.coefficients[i],
            CoefSlot::DdSlope => self.dd_slope.unwrap_or_default(),
        }
    }

    /// `σ_β²` under a diagonal covariance.
    pub fn metric_variance(&self) -> f64 {
        self.metric_cov[(0, 0)]
    }

    pub fn metric_cov_is_pd(&self) -> bool {
        self.metric_cov.iter().all(|v| v.is_finite())
            && self.metric_cov == self.metric_cov.transpose()
            && Cholesky::new(self.metric_cov).is_some()
    }

    /// Whether all variances and correlations lie in their support.
    pub fn in_support(&self, spec: &ModelSpec) -> bool {
        let reg = &spec.regression;
        self.health_var > 0.0
            && (!reg.is_two_level() || self.salinity_var.is_some_and(|v| v > 0.0))
            && (!reg.is_correlated() || self.coef_correlation.is_some_and(|r| r > -1.0 && r < 1.0))
            && self.metric_cov_is_pd()
    }

    /// Linear predictors `ν_ij = H_i + θ_s + β_j` for every site, in
    /// canonical metric order.
    pub fn linear_predictors(&self) -> Vec<[f64; N_METRICS]> {
        self.health
            .iter()
            .map(|&h| {
                std::array::from_fn(|j| {
                    let theta = if j < 2 { 0.0 } else { self.group_effect };
                    h + theta + self.metric_effects[j]
                })
            })
            .collect()
    }
}
