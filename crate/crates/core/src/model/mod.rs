//! Pure evaluation of the LHFI generative model.
//!
//! Nothing in here samples or performs I/O; every function is a pure map
//! from parameters and data to probabilities or log-densities.

mod data;
pub mod density;
mod grouping;
mod likelihood;
mod links;
mod posterior;
mod spec;
mod state;
mod two_level;

pub use data::{ModelData, SiteData, SiteStats};
pub use grouping::{MetricGrouping, N_METRICS, N_NEGATIVE, N_POSITIVE};
pub use likelihood::{multinomial_loglik, SiteObservation};
pub use links::{
    link_inverse_negative, link_inverse_positive, link_negative, link_positive, linear_predictor,
    CategoryProbabilities, GroupProbabilities, NU_CLAMP,
};
pub use posterior::{
    deviance, joint_log_posterior, latent_health_mean, log_coefficient_prior, log_prior,
    multinomial_log_likelihood, site_log_likelihood, PRIOR_LOCATION_VARIANCE,
};
pub use spec::{CoefficientPrior, CovarianceSpec, LatentRegressionSpec, Level, ModelSpec};
pub use state::{MetricMatrix, ParameterState};
pub use two_level::{collapse_two_level, variance_ratio, CollapsedRegression};

#[allow(unused_imports)]
pub(crate) use likelihood::{negative_group_loglik, positive_group_loglik};
pub(crate) use spec::CoefSlot;
