use crate::model::ParameterState;
use crate::{LhfiError, Result};

/// Update blocks of one sweep, in sweep order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    Health,
    /// Intercept, regression coefficients and DD slope, jointly.
    Regression,
    GroupEffect,
    MetricEffects,
    HealthVariance,
    SalinityVariance,
    MetricCovariance,
    Offset,
    Correlation,
    /// Joint translation of health, intercept and metric locations along
    /// the likelihood-invariant direction. Only used with centring.
    LocationShift,
}

impl Block {
    pub const ALL: [Block; 10] = [
        Block::Health,
        Block::Regression,
        Block::GroupEffect,
        Block::MetricEffects,
        Block::HealthVariance,
        Block::SalinityVariance,
        Block::MetricCovariance,
        Block::Offset,
        Block::Correlation,
        Block::LocationShift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Health => "health",
            Block::Regression => "regression",
            Block::GroupEffect => "group_effect",
            Block::MetricEffects => "metric_effects",
            Block::HealthVariance => "health_variance",
            Block::SalinityVariance => "salinity_variance",
            Block::MetricCovariance => "metric_covariance",
            Block::Offset => "offset",
            Block::Correlation => "correlation",
            Block::LocationShift => "location_shift",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub n_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Iterations between proposal-scale adaptations during burn-in.
    pub adapt_window: usize,
    /// Target acceptance rate of scalar random-walk updates.
    pub target_accept: f64,
    /// Target acceptance rate of multivariate random-walk updates.
    pub target_accept_block: f64,
    pub hierarchical_centring: bool,
    /// Blocks held at their initial values.
    pub frozen: Vec<Block>,
    /// Starting point shared by every chain, used without jitter.
    pub initial: Option<ParameterState>,
    /// Per-chain RNG seeds overriding those derived from `seed`.
    pub chain_seeds: Option<Vec<u64>>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_chains: 2,
            n_iterations: 120_000,
            burn_in: 20_000,
            thin: 100,
            seed: 1,
            adapt_window: 100,
            target_accept: 0.44,
            target_accept_block: 0.23,
            hierarchical_centring: true,
            frozen: Vec::new(),
            initial: None,
            chain_seeds: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(LhfiError::invalid("n_chains must be at least 1"));
        }
        if self.burn_in >= self.n_iterations {
            return Err(LhfiError::invalid(format!(
                "burn_in ({}) must be below n_iterations ({})",
                self.burn_in, self.n_iterations
            )));
        }
        if self.thin == 0 {
            return Err(LhfiError::invalid("thin must be at least 1"));
        }
        if self.adapt_window == 0 {
            return Err(LhfiError::invalid("adapt_window must be at least 1"));
        }
        for (name, t) in [("target_accept", self.target_accept), ("target_accept_block", self.target_accept_block)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(LhfiError::invalid(format!("{name} = {t} must lie in (0, 1)")));
            }
        }
        if let Some(seeds) = &self.chain_seeds {
            if seeds.len() != self.n_chains {
                return Err(LhfiError::invalid(format!(
                    "{} chain seeds supplied for {} chains",
                    seeds.len(),
                    self.n_chains
                )));
            }
        }
        Ok(())
    }

    /// Number of stored draws per chain.
    pub fn draws_per_chain(&self) -> usize {
        (self.n_iterations - self.burn_in) / self.thin
    }

    pub fn is_frozen(&self, block: Block) -> bool {
        self.frozen.contains(&block)
    }

    pub fn chain_seed(&self, chain_id: usize) -> u64 {
        match &self.chain_seeds {
            Some(seeds) => seeds[chain_id],
            None => derive_chain_seed(self.seed, chain_id),
        }
    }
}

/// SplitMix64 finalizer over `(seed, chain_id)`.
pub fn derive_chain_seed(seed: u64, chain_id: usize) -> u64 {
    let mut z = seed ^ (chain_id as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
