use serde::{Deserialize, Serialize};

use crate::model::{CovarianceSpec, LatentRegressionSpec, MetricMatrix, ModelSpec, ParameterState, N_METRICS};
use crate::{LhfiError, Result};

/// How one raw covariate column is generated from the site index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateScheme {
    /// `start + step · i`.
    Grid { start: f64, step: f64 },
    Uniform { low: f64, high: f64 },
    /// `slope · (centred column `of`) + N(0, noise_sd²)`. Missing slope and
    /// noise default to the true DD slope and salinity residual sd.
    Response {
        of: String,
        #[serde(default)]
        slope: Option<f64>,
        #[serde(default)]
        noise_sd: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateGenerator {
    pub name: String,
    pub scheme: CovariateScheme,
}

/// True values of the non-latent parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParameters {
    pub intercept: f64,
    /// Aligned with the design spec's health covariates.
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub dd_slope: Option<f64>,
    pub group_effect: f64,
    pub health_sd: f64,
    #[serde(default)]
    pub salinity_sd: Option<f64>,
    /// Metric-effect covariance, canonical metric order.
    pub metric_cov: [[f64; N_METRICS]; N_METRICS],
    #[serde(default)]
    pub offset: Option<f64>,
    #[serde(default)]
    pub coef_correlation: Option<f64>,
}

impl TrueParameters {
    pub fn metric_matrix(&self) -> MetricMatrix {
        MetricMatrix::from_fn(|i, j| self.metric_cov[i][j])
    }

    pub fn diagonal_cov(sd: f64) -> [[f64; N_METRICS]; N_METRICS] {
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { sd * sd } else { 0.0 }))
    }

    /// Full state with the given latent health and metric effects.
    pub fn to_state(&self, health: Vec<f64>, metric_effects: [f64; N_METRICS]) -> ParameterState {
        ParameterState {
            health,
            intercept: self.intercept,
            coefficients: self.coefficients.clone(),
            dd_slope: self.dd_slope,
            group_effect: self.group_effect,
            metric_effects,
            health_var: self.health_sd * self.health_sd,
            salinity_var: self.salinity_sd.map(|s| s * s),
            metric_cov: self.metric_matrix(),
            offset: self.offset,
            coef_correlation: self.coef_correlation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDesign {
    pub n_sites: usize,
    pub replicates: usize,
    /// Inclusive range of sample cardinalities.
    pub cardinality: (u32, u32),
    pub covariates: Vec<CovariateGenerator>,
    pub spec: ModelSpec,
    pub truth: TrueParameters,
    pub seed: u64,
}

/// Step of the DD grid giving a salinity-DD correlation near 0.88 under the
/// benchmark DD slope and salinity noise.
pub const BENCHMARK_DD_STEP: f64 = 0.3246;

impl SynthDesign {
    /// 18 sites, 3 replicates, cardinalities in [200, 2000], a two-level
    /// salinity-on-DD structure and a diagonal metric covariance.
    pub fn default_benchmark(seed: u64) -> Self {
        Self {
            n_sites: 18,
            replicates: 3,
            cardinality: (200, 2000),
            covariates: vec![
                CovariateGenerator {
                    name: "dd".into(),
                    scheme: CovariateScheme::Grid { start: 0.0, step: BENCHMARK_DD_STEP },
                },
                CovariateGenerator {
                    name: "salinity".into(),
                    scheme: CovariateScheme::Response { of: "dd".into(), slope: None, noise_sd: None },
                },
            ],
            spec: ModelSpec::new(CovarianceSpec::Diagonal, LatentRegressionSpec::two_level(&["salinity"])),
            truth: TrueParameters {
                intercept: -1.56,
                coefficients: vec![0.39],
                dd_slope: Some(0.77),
                group_effect: 2.09,
                health_sd: 0.67,
                salinity_sd: Some(0.70),
                metric_cov: TrueParameters::diagonal_cov(1.12),
                offset: None,
                coef_correlation: None,
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.n_sites == 0 || self.replicates == 0 {
            return Err(LhfiError::invalid("design needs at least one site and one replicate"));
        }
        let (lo, hi) = self.cardinality;
        if lo == 0 || lo > hi {
            return Err(LhfiError::invalid(format!("cardinality range ({lo}, {hi}) invalid")));
        }
        let reg = &self.spec.regression;
        if self.truth.coefficients.len() != reg.covariates.len() {
            return Err(LhfiError::invalid(format!(
                "{} true coefficients for {} covariates",
                self.truth.coefficients.len(),
                reg.covariates.len()
            )));
        }
        if reg.is_two_level() && (self.truth.dd_slope.is_none() || self.truth.salinity_sd.is_none()) {
            return Err(LhfiError::invalid("two-level design needs a true DD slope and salinity sd"));
        }
        if reg.is_correlated() && self.truth.coef_correlation.is_none() {
            return Err(LhfiError::invalid("correlated design needs a true coefficient correlation"));
        }
        let t = &self.truth;
        let sds = [Some(t.health_sd), t.salinity_sd];
        if sds.iter().flatten().any(|s| !(*s >= 0.0)) {
            return Err(LhfiError::invalid("true standard deviations must be nonnegative"));
        }
        let sigma = t.metric_matrix();
        if sigma != sigma.transpose() || sigma.iter().any(|v| !v.is_finite()) {
            return Err(LhfiError::invalid("true metric covariance must be finite and symmetric"));
        }
        if sigma != MetricMatrix::zeros() && sigma.cholesky().is_none() {
            return Err(LhfiError::invalid("true metric covariance must be positive definite or zero"));
        }
        for (i, g) in self.covariates.iter().enumerate() {
            if self.covariates[..i].iter().any(|o| o.name == g.name) {
                return Err(LhfiError::invalid(format!("covariate '{}' generated twice", g.name)));
            }
            match &g.scheme {
                CovariateScheme::Uniform { low, high } if !(low < high) => {
                    return Err(LhfiError::invalid(format!("uniform range for '{}' is empty", g.name)));
                }
                CovariateScheme::Response { of, noise_sd, .. } => {
                    if !self.covariates[..i].iter().any(|o| &o.name == of) {
                        return Err(LhfiError::invalid(format!(
                            "'{}' responds to '{of}', which must be generated earlier",
                            g.name
                        )));
                    }
                    if noise_sd.is_some_and(|s| !(s >= 0.0)) {
                        return Err(LhfiError::invalid(format!("noise sd of '{}' must be nonnegative", g.name)));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
