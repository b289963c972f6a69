//! Latent health factor index (LHFI) modelling.
//!
//! Site health is a latent variable that drives multinomial abundances of
//! five benthic metric groups and is itself regressed on abiotic site
//! covariates. The crate is organised by stage of an analysis:
//!
//! - [`model`]: links, likelihoods, priors and the joint log-posterior.
//! - [`covariates`]: distance-downstream projection, centring, interactions.
//! - [`sampler`]: Metropolis-within-Gibbs MCMC over [`model::ParameterState`].
//! - [`diagnostics`]: Brooks-Gelman-Rubin, DIC, summaries and site ranking.
//! - [`synth`]: forward simulation and parameter-recovery studies.

pub mod covariates;
pub mod diagnostics;
mod error;
pub mod model;
pub mod sampler;
pub mod synth;

pub use error::{LhfiError, Result};
