use serde::{Deserialize, Serialize};

use super::grouping::MetricGrouping;
use crate::{LhfiError, Result};

/// Structure assumed for the 5×5 covariance of the metric effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceSpec {
    /// `Σ = σ_β² I` with an inverse-gamma(1, 1) prior on `σ_β²`.
    Diagonal,
    /// `Σ ~ IW_5(5, I)`.
    UnstructuredIw,
    /// Independent `IW_2` and `IW_3` blocks with zero cross-covariance.
    BlockDiagonal,
    /// Block-diagonal inverse-Wishart part plus a common offset `ς J`.
    StructuredOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    SingleLevel,
    /// Salinity is itself regressed on distance downstream, and DD is
    /// dropped from the health regression.
    TwoLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientPrior {
    Independent,
    /// The (salinity, DD) coefficient pair is bivariate normal with a free
    /// correlation `ρ ~ Unif(−1, 1)`.
    Correlated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentRegressionSpec {
    /// Centred covariates entering the health regression, in order.
    pub covariates: Vec<String>,
    pub level: Level,
    pub coefficient_prior: CoefficientPrior,
    /// Column name of salinity.
    pub salinity: String,
    /// Column name of distance downstream.
    pub dd: String,
}

/// Position of a regression coefficient inside a [`super::ParameterState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CoefSlot {
    Covariate(usize),
    DdSlope,
}

impl LatentRegressionSpec {
    pub fn single_level(covariates: &[&str]) -> Self {
        Self {
            covariates: covariates.iter().map(|s| s.to_string()).collect(),
            level: Level::SingleLevel,
            coefficient_prior: CoefficientPrior::Independent,
            salinity: "salinity".into(),
            dd: "dd".into(),
        }
    }

    pub fn two_level(covariates: &[&str]) -> Self {
        Self { level: Level::TwoLevel, ..Self::single_level(covariates) }
    }

    pub fn correlated(mut self) -> Self {
        self.coefficient_prior = CoefficientPrior::Correlated;
        self
    }

    pub fn is_two_level(&self) -> bool {
        self.level == Level::TwoLevel
    }

    pub fn is_correlated(&self) -> bool {
        self.coefficient_prior == CoefficientPrior::Correlated
    }

    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariates.iter().position(|c| c == name)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.covariates.iter().enumerate() {
            if self.covariates[..i].contains(c) {
                return Err(LhfiError::invalid(format!("covariate '{c}' listed twice")));
            }
        }
        if self.is_two_level() {
            if self.covariate_index(&self.salinity).is_none() {
                return Err(LhfiError::invalid(format!(
                    "two-level regression requires '{}' among the health covariates",
                    self.salinity
                )));
            }
            if self.covariate_index(&self.dd).is_some() {
                return Err(LhfiError::invalid(format!(
                    "two-level regression excludes '{}' from the health covariates",
                    self.dd
                )));
            }
        }
        if self.is_correlated() {
            self.correlated_pair().ok_or_else(|| {
                LhfiError::invalid(format!(
                    "correlated coefficient prior needs both '{}' and '{}' coefficients",
                    self.salinity, self.dd
                ))
            })?;
        }
        Ok(())
    }

    /// The (salinity, DD) coefficient slots, if both exist.
    pub(crate) fn correlated_pair(&self) -> Option<(CoefSlot, CoefSlot)> {
        let sal = CoefSlot::Covariate(self.covariate_index(&self.salinity)?);
        let dd = if self.is_two_level() {
            CoefSlot::DdSlope
        } else {
            CoefSlot::Covariate(self.covariate_index(&self.dd)?)
        };
        Some((sal, dd))
    }

    /// Names of every regression coefficient in storage order: health
    /// covariates, then the DD slope for two-level models.
    pub fn coefficient_names(&self) -> Vec<String> {
        let mut names = self.covariates.clone();
        if self.is_two_level() {
            names.push(self.dd.clone());
        }
        names
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub covariance: CovarianceSpec,
    pub regression: LatentRegressionSpec,
    #[serde(default)]
    pub grouping: MetricGrouping,
}

impl ModelSpec {
    pub fn new(covariance: CovarianceSpec, regression: LatentRegressionSpec) -> Self {
        Self { covariance, regression, grouping: MetricGrouping::ambi() }
    }

    pub fn validate(&self) -> Result<()> {
        self.regression.validate()
    }
}
