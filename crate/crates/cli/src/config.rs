//! Run configuration: a flat JSON object. Relative paths resolve against
//! the directory holding the configuration file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use lhfi::model::{CoefficientPrior, CovarianceSpec, LatentRegressionSpec, Level, MetricGrouping, ModelSpec};
use lhfi::sampler::SamplerConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

const STAGE: &str = "config";

fn default_salinity() -> String {
    "salinity".into()
}
fn default_dd() -> String {
    "dd".into()
}
fn default_positive() -> Vec<usize> {
    vec![1, 2]
}
fn default_negative() -> Vec<usize> {
    vec![3, 4, 5]
}
fn default_levels() -> Vec<f64> {
    vec![0.8, 0.95, 0.99]
}
fn default_true() -> bool {
    true
}
fn default_level() -> Level {
    Level::SingleLevel
}
fn default_covariance() -> CovarianceSpec {
    CovarianceSpec::Diagonal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub counts: PathBuf,
    pub covariates: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<PathBuf>,
    /// Anchor sites of the DD axis, required with `geometry`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub west_anchor: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub east_anchor: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    #[serde(default)]
    pub health_covariates: Vec<String>,
    #[serde(default = "default_level")]
    pub level: Level,
    #[serde(default = "default_covariance")]
    pub covariance: CovarianceSpec,
    #[serde(default)]
    pub correlated: bool,
    #[serde(default = "default_salinity")]
    pub salinity_column: String,
    #[serde(default = "default_dd")]
    pub dd_column: String,
    #[serde(default = "default_positive")]
    pub positive_metrics: Vec<usize>,
    #[serde(default = "default_negative")]
    pub negative_metrics: Vec<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapt_window: Option<usize>,
    #[serde(default = "default_true")]
    pub hierarchical_centring: bool,

    /// Credible levels reported in `summary.csv`.
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    /// Whether to write `bgr.csv` and `trace.csv`.
    #[serde(default = "default_true")]
    pub plot_data: bool,
}

/// The five model variants of the original analysis, all with a diagonal
/// metric covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Salinity on DD, independent coefficients.
    Model1,
    /// Salinity on DD, correlated (salinity, DD) coefficients.
    Model2,
    /// Salinity on DD plus log depth, log silt-clay and their interaction.
    Model3,
    /// DD only.
    Model4,
    /// Salinity only.
    Model5,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "model1" => Ok(Preset::Model1),
            "model2" => Ok(Preset::Model2),
            "model3" => Ok(Preset::Model3),
            "model4" => Ok(Preset::Model4),
            "model5" => Ok(Preset::Model5),
            other => Err(format!("unknown preset '{other}' (expected model1..model5)")),
        }
    }
}

impl Preset {
    pub fn apply(self, config: &mut RunConfig) {
        let (covs, level, correlated): (&[&str], Level, bool) = match self {
            Preset::Model1 => (&["salinity"], Level::TwoLevel, false),
            Preset::Model2 => (&["salinity"], Level::TwoLevel, true),
            Preset::Model3 => (&["log_depth", "salinity", "log_sc", "log_depth:log_sc"], Level::TwoLevel, false),
            Preset::Model4 => (&["dd"], Level::SingleLevel, false),
            Preset::Model5 => (&["salinity"], Level::SingleLevel, false),
        };
        config.health_covariates = covs.iter().map(|c| c.to_string()).collect();
        config.level = level;
        config.correlated = correlated;
        config.covariance = CovarianceSpec::Diagonal;
        config.salinity_column = "salinity".into();
        config.dd_column = "dd".into();
    }
}

impl RunConfig {
    pub fn minimal(counts: PathBuf, covariates: PathBuf) -> Self {
        serde_json::from_value(serde_json::json!({ "counts": counts, "covariates": covariates }))
            .expect("minimal config deserializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::validation(STAGE, e.to_string()))
    }

    /// Reads a configuration file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(STAGE, path, e))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            CliError::Validation { message, .. } => CliError::validation(STAGE, format!("{}: {message}", path.display())),
            other => other,
        })?;
        config.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.counts);
        fix(&mut self.covariates);
        if let Some(g) = self.geometry.as_mut() {
            fix(g);
        }
        if let Some(o) = self.out.as_mut() {
            fix(o);
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let grouping = MetricGrouping::new(&self.positive_metrics, &self.negative_metrics)
            .map_err(|e| CliError::validation(STAGE, e.to_string()))?;
        let spec = ModelSpec {
            covariance: self.covariance,
            regression: LatentRegressionSpec {
                covariates: self.health_covariates.clone(),
                level: self.level,
                coefficient_prior: if self.correlated { CoefficientPrior::Correlated } else { CoefficientPrior::Independent },
                salinity: self.salinity_column.clone(),
                dd: self.dd_column.clone(),
            },
            grouping,
        };
        spec.validate().map_err(|e| CliError::validation(STAGE, e.to_string()))?;
        Ok(spec)
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let d = SamplerConfig::default();
        let cfg = SamplerConfig {
            n_chains: self.chains.unwrap_or(d.n_chains),
            n_iterations: self.iterations.unwrap_or(d.n_iterations),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            thin: self.thin.unwrap_or(d.thin),
            seed: self.seed.unwrap_or(d.seed),
            adapt_window: self.adapt_window.unwrap_or(d.adapt_window),
            hierarchical_centring: self.hierarchical_centring,
            ..d
        };
        cfg.validate().map_err(|e| CliError::validation(STAGE, e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model_spec()?;
        self.sampler_config()?;
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(CliError::validation(STAGE, "levels must be a nonempty list of values in (0, 1)"));
        }
        if self.geometry.is_some() != (self.west_anchor.is_some() && self.east_anchor.is_some()) {
            return Err(CliError::validation(STAGE, "geometry requires both west_anchor and east_anchor, and vice versa"));
        }
        Ok(())
    }
}
