//! Metropolis-within-Gibbs sampling over [`crate::model::ParameterState`].
//!
//! Each chain owns a ChaCha8 stream seeded from `(seed, chain_id)`; chains
//! run on scoped threads and are merged only after all finish.

mod centring;
mod chain;
mod config;
mod updates;

pub use centring::{hierarchical_centring_transform, metric_locations, CentringDirection};
pub use chain::{
    run_chain, run_chain_with_progress, run_chains, BlockAcceptance, ChainOutput, NoProgress, ProgressEvent,
    ProgressSink,
};
pub use config::{derive_chain_seed, Block, SamplerConfig};
pub use updates::{
    gibbs_update_sigma_blocks, gibbs_update_sigma_delta2, gibbs_update_sigma_h2, mh_update_block, sample_inv_gamma,
    sample_inv_wishart, sample_iw_posterior, variance_conditional, VARIANCE_PRIOR,
};
