use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::centring::metric_locations;
use super::config::{Block, SamplerConfig};
use super::updates::{
    gibbs_update_sigma_blocks, gibbs_update_sigma_delta2, gibbs_update_sigma_h2, mh_accept, sample_inv_gamma,
    variance_conditional,
};
use crate::model::density::{inv_wishart_logpdf, normal_logpdf};
use crate::model::CoefSlot;
use crate::model::{
    joint_log_posterior, latent_health_mean, negative_group_loglik, positive_group_loglik, site_log_likelihood,
    CovarianceSpec, MetricMatrix, ModelData, ModelSpec, ParameterState, N_METRICS, N_POSITIVE,
    PRIOR_LOCATION_VARIANCE,
};
use crate::{LhfiError, Result};

const JITTER: f64 = 0.1;
const ADAPT_GAIN: f64 = 2.0;
const ADAPT_DECAY: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockAcceptance {
    pub block: Block,
    pub proposed: u64,
    pub accepted: u64,
}

impl BlockAcceptance {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProgressEvent<'a> {
    pub chain_id: usize,
    pub iteration: usize,
    pub n_iterations: usize,
    /// Cumulative Metropolis acceptance per block since the start.
    pub acceptance: &'a [BlockAcceptance],
}

/// Receives periodic progress reports from running chains.
pub trait ProgressSink: Sync {
    fn report(&self, event: &ProgressEvent<'_>);
}

pub struct NoProgress;

impl ProgressSink for NoProgress {
    fn report(&self, _: &ProgressEvent<'_>) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub chain_id: usize,
    pub seed: u64,
    /// Thinned post-burn-in draws, metric effects uncentred.
    pub draws: Vec<ParameterState>,
    /// `−2 ×` total multinomial log-likelihood at each stored draw.
    pub deviance: Vec<f64>,
    /// Metropolis acceptance per block over the post-burn-in iterations.
    pub acceptance: Vec<BlockAcceptance>,
    /// Proposal scales when burn-in ended and when the chain finished.
    pub scales_after_burn_in: Vec<(String, f64)>,
    pub final_scales: Vec<(String, f64)>,
}

/// Adaptive random-walk scale.
#[derive(Debug, Clone)]
struct Proposal {
    name: String,
    log_scale: f64,
    target: f64,
    accepted: u32,
    proposed: u32,
    adaptations: u32,
}

impl Proposal {
    fn new(name: impl Into<String>, scale: f64, target: f64) -> Self {
        Self { name: name.into(), log_scale: scale.ln(), target, accepted: 0, proposed: 0, adaptations: 0 }
    }

    fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u32::from(accepted);
    }

    /// Robbins-Monro step on the log scale.
    fn adapt(&mut self) {
        if self.proposed > 0 {
            self.adaptations += 1;
            let rate = f64::from(self.accepted) / f64::from(self.proposed);
            let gain = ADAPT_GAIN * f64::from(self.adaptations).powf(-ADAPT_DECAY);
            self.log_scale = (self.log_scale + gain * (rate - self.target)).clamp(-15.0, 5.0);
        }
        self.accepted = 0;
        self.proposed = 0;
    }
}

struct Proposals {
    health: Vec<Proposal>,
    group_effect: Proposal,
    metric: Vec<Proposal>,
    positive_block: Proposal,
    negative_block: Proposal,
    offset: Proposal,
    correlation: Proposal,
    shift: Proposal,
}

impl Proposals {
    fn new(n_sites: usize, scalar: f64, block: f64) -> Self {
        Self {
            health: (0..n_sites).map(|i| Proposal::new(format!("health[{i}]"), 0.05, scalar)).collect(),
            group_effect: Proposal::new("group_effect", 0.05, scalar),
            metric: (0..N_METRICS).map(|j| Proposal::new(format!("metric_effect[{j}]"), 0.05, scalar)).collect(),
            positive_block: Proposal::new("positive_cov_block", 0.1, block),
            negative_block: Proposal::new("negative_cov_block", 0.1, block),
            offset: Proposal::new("offset", 0.1, scalar),
            correlation: Proposal::new("correlation", 0.2, scalar),
            shift: Proposal::new("location_shift", 0.1, scalar),
        }
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = &mut Proposal> {
        self.health.iter_mut().chain(self.metric.iter_mut()).chain([
            &mut self.group_effect,
            &mut self.positive_block,
            &mut self.negative_block,
            &mut self.offset,
            &mut self.correlation,
            &mut self.shift,
        ])
    }

    fn snapshot(&mut self) -> Vec<(String, f64)> {
        self.iter_mut().map(|p| (p.name.clone(), p.scale())).collect()
    }
}

struct Chain<'a> {
    data: &'a ModelData,
    spec: &'a ModelSpec,
    cfg: &'a SamplerConfig,
    s: ParameterState,
    pos_ll: Vec<f64>,
    neg_ll: Vec<f64>,
    scratch: Vec<f64>,
    means: Vec<f64>,
    cov_inv: MetricMatrix,
    prop: Proposals,
    sampling: bool,
    totals: BTreeMap<Block, (u64, u64)>,
    sampling_totals: BTreeMap<Block, (u64, u64)>,
    rng: ChaCha8Rng,
}

fn quad(x: &[f64; N_METRICS], inv: &MetricMatrix) -> f64 {
    let mut q = 0.0;
    for i in 0..N_METRICS {
        for j in 0..N_METRICS {
            q += x[i] * inv[(i, j)] * x[j];
        }
    }
    q
}

/// `−½ log|Σ| − ½ βᵀΣ⁻¹β`, or `−∞` when `Σ` is not positive definite.
fn mvn_kernel(beta: &[f64; N_METRICS], cov: &MetricMatrix) -> f64 {
    match cov.cholesky() {
        Some(ch) => {
            let half_log_det: f64 = ch.l().diagonal().iter().map(|d| d.ln()).sum();
            let z = ch.l().solve_lower_triangular(&nalgebra::Vector5::from_column_slice(beta));
            match z {
                Some(z) => -half_log_det - 0.5 * z.norm_squared(),
                None => f64::NEG_INFINITY,
            }
        }
        None => f64::NEG_INFINITY,
    }
}

/// Unconstrained coordinates of a positive-definite block: log-diagonal and
/// strictly-lower entries of its Cholesky factor, row by row.
fn chol_params(w: &DMatrix<f64>) -> Option<Vec<f64>> {
    let l = w.clone().cholesky()?.l();
    let d = w.nrows();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in 0..=i {
            out.push(if i == j { l[(i, i)].ln() } else { l[(i, j)] });
        }
    }
    Some(out)
}

/// Inverse of [`chol_params`] plus `log |∂W/∂φ|`.
fn from_chol_params(phi: &[f64], d: usize) -> (DMatrix<f64>, f64) {
    let mut l = DMatrix::zeros(d, d);
    let mut log_jac = d as f64 * std::f64::consts::LN_2;
    let mut k = 0;
    for i in 0..d {
        for j in 0..=i {
            if i == j {
                l[(i, i)] = phi[k].exp();
                log_jac += (d - i + 1) as f64 * phi[k];
            } else {
                l[(i, j)] = phi[k];
            }
            k += 1;
        }
    }
    (&l * l.transpose(), log_jac)
}

impl<'a> Chain<'a> {
    fn new(data: &'a ModelData, spec: &'a ModelSpec, cfg: &'a SamplerConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = match &cfg.initial {
            Some(init) => init.clone(),
            None => jittered_start(data.n_sites(), spec, &mut rng),
        };
        if s.health.len() != data.n_sites() {
            return Err(LhfiError::Initialization(format!(
                "initial state has {} health values for {} sites",
                s.health.len(),
                data.n_sites()
            )));
        }
        s.check_against(spec).map_err(|e| LhfiError::Initialization(e.to_string()))?;
        let lp = joint_log_posterior(&s, data, spec).map_err(|e| LhfiError::Initialization(e.to_string()))?;
        if !lp.is_finite() {
            return Err(LhfiError::Initialization(format!("log-posterior {lp} at the starting point")));
        }
        let n = data.n_sites();
        let mut chain = Self {
            data,
            spec,
            cfg,
            s,
            pos_ll: vec![0.0; n],
            neg_ll: vec![0.0; n],
            scratch: vec![0.0; n],
            means: vec![0.0; n],
            cov_inv: MetricMatrix::identity(),
            prop: Proposals::new(n, cfg.target_accept, cfg.target_accept_block),
            sampling: false,
            totals: BTreeMap::new(),
            sampling_totals: BTreeMap::new(),
            rng,
        };
        chain.refresh_likelihood();
        chain.refresh_means();
        chain.refresh_cov()?;
        Ok(chain)
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn tally(&mut self, block: Block, accepted: bool) {
        let e = self.totals.entry(block).or_default();
        e.0 += 1;
        e.1 += u64::from(accepted);
        if self.sampling {
            let e = self.sampling_totals.entry(block).or_default();
            e.0 += 1;
            e.1 += u64::from(accepted);
        }
    }

    fn site_positive(&self, i: usize, h: f64, g: &[f64; N_METRICS]) -> f64 {
        let st = &self.data.sites[i].stats;
        positive_group_loglik(&st.positive_totals, st.cardinality, [h + g[0], h + g[1]])
    }

    fn site_negative(&self, i: usize, h: f64, g: &[f64; N_METRICS]) -> f64 {
        let st = &self.data.sites[i].stats;
        negative_group_loglik(&st.negative_totals, st.cardinality, [h + g[2], h + g[3], h + g[4]])
    }

    fn refresh_likelihood(&mut self) {
        let g = metric_locations(&self.s);
        for i in 0..self.data.n_sites() {
            let h = self.s.health[i];
            self.pos_ll[i] = self.site_positive(i, h, &g);
            self.neg_ll[i] = self.site_negative(i, h, &g);
        }
    }

    fn refresh_means(&mut self) {
        for (m, site) in self.means.iter_mut().zip(&self.data.sites) {
            *m = latent_health_mean(self.s.intercept, &self.s.coefficients, &site.covariates)
                .expect("covariate width checked at assembly");
        }
    }

    fn refresh_cov(&mut self) -> Result<()> {
        self.cov_inv = self
            .s
            .metric_cov
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| LhfiError::InternalState("metric covariance lost positive definiteness".into()))?;
        Ok(())
    }

    fn sweep(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let two_level = self.spec.regression.is_two_level();
        if !cfg.is_frozen(Block::Health) {
            self.update_health();
        }
        if !cfg.is_frozen(Block::Regression) {
            self.update_regression()?;
        }
        if !cfg.is_frozen(Block::GroupEffect) {
            self.update_group_effect();
        }
        if !cfg.is_frozen(Block::MetricEffects) {
            self.update_metric_effects();
        }
        if !cfg.is_frozen(Block::HealthVariance) {
            self.s.health_var = gibbs_update_sigma_h2(&self.s.health, &self.means, &mut self.rng)?;
        }
        if two_level && !cfg.is_frozen(Block::SalinityVariance) {
            let slope = self.s.dd_slope.unwrap_or_default();
            let residuals: Vec<f64> = self
                .data
                .sites
                .iter()
                .map(|s| s.salinity.unwrap_or_default() - slope * s.dd.unwrap_or_default())
                .collect();
            self.s.salinity_var = Some(gibbs_update_sigma_delta2(&residuals, &mut self.rng));
        }
        if !cfg.is_frozen(Block::MetricCovariance) {
            self.update_metric_cov()?;
        }
        if self.spec.covariance == CovarianceSpec::StructuredOffset && !cfg.is_frozen(Block::Offset) {
            self.update_offset()?;
        }
        if self.spec.regression.is_correlated() && !cfg.is_frozen(Block::Correlation) {
            self.update_correlation();
        }
        let shift_blocks = [Block::LocationShift, Block::Health, Block::Regression, Block::GroupEffect, Block::MetricEffects];
        if cfg.hierarchical_centring && !shift_blocks.iter().any(|&b| cfg.is_frozen(b)) {
            self.update_location_shift();
        }
        Ok(())
    }

    fn update_health(&mut self) {
        let g = metric_locations(&self.s);
        let var = self.s.health_var;
        for i in 0..self.data.n_sites() {
            let h = self.s.health[i];
            let m = self.means[i];
            let current = self.pos_ll[i] + self.neg_ll[i] - (h - m).powi(2) / (2.0 * var);
            let hp = h + self.prop.health[i].scale() * self.normal();
            let (p, n) = (self.site_positive(i, hp, &g), self.site_negative(i, hp, &g));
            let proposed = p + n - (hp - m).powi(2) / (2.0 * var);
            let accepted = mh_accept(current, proposed, &mut self.rng);
            if accepted {
                self.s.health[i] = hp;
                self.pos_ll[i] = p;
                self.neg_ll[i] = n;
            }
            self.prop.health[i].record(accepted);
            self.tally(Block::Health, accepted);
        }
    }

    /// Exact Gaussian draw of intercept, coefficients and DD slope.
    fn update_regression(&mut self) -> Result<()> {
        let reg = &self.spec.regression;
        let k = reg.covariates.len();
        let p = 1 + k + usize::from(reg.is_two_level());
        let mut q = DMatrix::<f64>::zeros(p, p);
        let mut b = DVector::<f64>::zeros(p);
        let hv = self.s.health_var;
        let mut row = vec![0.0; k + 1];
        for (site, &h) in self.data.sites.iter().zip(&self.s.health) {
            row[0] = 1.0;
            row[1..].copy_from_slice(&site.covariates);
            for a in 0..=k {
                b[a] += row[a] * h / hv;
                for c in 0..=k {
                    q[(a, c)] += row[a] * row[c] / hv;
                }
            }
        }
        if reg.is_two_level() {
            let sv = self.s.salinity_var.unwrap_or(1.0);
            for site in &self.data.sites {
                let (sal, dd) = (site.salinity.unwrap_or_default(), site.dd.unwrap_or_default());
                q[(p - 1, p - 1)] += dd * dd / sv;
                b[p - 1] += dd * sal / sv;
            }
        }
        for a in 0..p {
            q[(a, a)] += 1.0 / PRIOR_LOCATION_VARIANCE;
        }
        if let Some((x, y)) = reg.is_correlated().then(|| reg.correlated_pair()).flatten() {
            let idx = |slot| match slot {
                CoefSlot::Covariate(i) => 1 + i,
                CoefSlot::DdSlope => p - 1,
            };
            let (ix, iy) = (idx(x), idx(y));
            let rho = self.s.coef_correlation.unwrap_or_default();
            let f = 1.0 / (PRIOR_LOCATION_VARIANCE * (1.0 - rho * rho));
            q[(ix, ix)] += f - 1.0 / PRIOR_LOCATION_VARIANCE;
            q[(iy, iy)] += f - 1.0 / PRIOR_LOCATION_VARIANCE;
            q[(ix, iy)] -= rho * f;
            q[(iy, ix)] -= rho * f;
        }
        let chol = q
            .cholesky()
            .ok_or_else(|| LhfiError::InternalState("regression precision not positive definite".into()))?;
        let mean = chol.solve(&b);
        let z = DVector::from_fn(p, |_, _| self.normal());
        let noise = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| LhfiError::InternalState("singular regression factor".into()))?;
        let draw = mean + noise;
        self.s.intercept = draw[0];
        for i in 0..k {
            self.s.coefficients[i] = draw[1 + i];
        }
        if reg.is_two_level() {
            self.s.dd_slope = Some(draw[p - 1]);
        }
        self.refresh_means();
        Ok(())
    }

    fn update_group_effect(&mut self) {
        if self.cfg.hierarchical_centring {
            // Gibbs draw given the metric locations γ ~ N(θe, Σ).
            let g = metric_locations(&self.s);
            let inv = &self.cov_inv;
            let (mut prec, mut lin) = (1.0 / PRIOR_LOCATION_VARIANCE, 0.0);
            for i in N_POSITIVE..N_METRICS {
                for j in 0..N_METRICS {
                    lin += inv[(i, j)] * g[j];
                    if j >= N_POSITIVE {
                        prec += inv[(i, j)];
                    }
                }
            }
            let theta = lin / prec + self.normal() / prec.sqrt();
            for j in N_POSITIVE..N_METRICS {
                self.s.metric_effects[j] = g[j] - theta;
            }
            self.s.group_effect = theta;
            self.refresh_likelihood();
        } else {
            let theta = self.s.group_effect;
            let current = self.neg_ll.iter().sum::<f64>() + normal_logpdf(theta, 0.0, PRIOR_LOCATION_VARIANCE);
            let tp = theta + self.prop.group_effect.scale() * self.normal();
            let mut g = metric_locations(&self.s);
            for gj in &mut g[N_POSITIVE..] {
                *gj += tp - theta;
            }
            let mut total = 0.0;
            for i in 0..self.data.n_sites() {
                self.scratch[i] = self.site_negative(i, self.s.health[i], &g);
                total += self.scratch[i];
            }
            let proposed = total + normal_logpdf(tp, 0.0, PRIOR_LOCATION_VARIANCE);
            let accepted = mh_accept(current, proposed, &mut self.rng);
            if accepted {
                self.s.group_effect = tp;
                std::mem::swap(&mut self.neg_ll, &mut self.scratch);
            }
            self.prop.group_effect.record(accepted);
            self.tally(Block::GroupEffect, accepted);
        }
    }

    fn update_metric_effects(&mut self) {
        for j in 0..N_METRICS {
            let positive = j < N_POSITIVE;
            let beta = self.s.metric_effects;
            let cached = if positive { &self.pos_ll } else { &self.neg_ll };
            let current = cached.iter().sum::<f64>() - 0.5 * quad(&beta, &self.cov_inv);
            let mut bp = beta;
            bp[j] += self.prop.metric[j].scale() * self.normal();
            let theta = self.s.group_effect;
            let g: [f64; N_METRICS] = std::array::from_fn(|k| if k < N_POSITIVE { bp[k] } else { bp[k] + theta });
            let mut total = 0.0;
            for i in 0..self.data.n_sites() {
                let h = self.s.health[i];
                self.scratch[i] = if positive { self.site_positive(i, h, &g) } else { self.site_negative(i, h, &g) };
                total += self.scratch[i];
            }
            let proposed = total - 0.5 * quad(&bp, &self.cov_inv);
            let accepted = mh_accept(current, proposed, &mut self.rng);
            if accepted {
                self.s.metric_effects = bp;
                let cache = if positive { &mut self.pos_ll } else { &mut self.neg_ll };
                std::mem::swap(cache, &mut self.scratch);
            }
            self.prop.metric[j].record(accepted);
            self.tally(Block::MetricEffects, accepted);
        }
    }

    fn update_metric_cov(&mut self) -> Result<()> {
        match self.spec.covariance {
            CovarianceSpec::Diagonal => {
                let (shape, scale) = variance_conditional(self.s.metric_effects);
                let v = sample_inv_gamma(shape, scale, &mut self.rng);
                self.s.metric_cov = MetricMatrix::identity() * v;
            }
            CovarianceSpec::UnstructuredIw | CovarianceSpec::BlockDiagonal => {
                self.s.metric_cov = gibbs_update_sigma_blocks(&self.s.metric_effects, self.spec.covariance, &mut self.rng)?;
            }
            CovarianceSpec::StructuredOffset => {
                self.update_offset_block(true)?;
                self.update_offset_block(false)?;
            }
        }
        self.refresh_cov()
    }

    /// MH on one inverse-Wishart block of the structured-offset covariance,
    /// in Cholesky-log coordinates.
    fn update_offset_block(&mut self, positive: bool) -> Result<()> {
        let (lo, d) = if positive { (0, N_POSITIVE) } else { (N_POSITIVE, N_METRICS - N_POSITIVE) };
        let offset = self.s.offset.unwrap_or_default();
        let sigma = self.s.metric_cov;
        let w = DMatrix::from_fn(d, d, |i, j| sigma[(lo + i, lo + j)] - offset);
        let phi = chol_params(&w)
            .ok_or_else(|| LhfiError::InternalState("structured-offset block not positive definite".into()))?;
        let beta = self.s.metric_effects;
        let identity = DMatrix::identity(d, d);
        let target = |phi: &[f64]| -> (f64, MetricMatrix) {
            let (w, log_jac) = from_chol_params(phi, d);
            let mut cov = sigma;
            for i in 0..d {
                for j in 0..d {
                    cov[(lo + i, lo + j)] = w[(i, j)] + offset;
                }
            }
            let lp = inv_wishart_logpdf(&w, d as f64, &identity) + log_jac + mvn_kernel(&beta, &cov);
            (lp, cov)
        };
        let (current, _) = target(&phi);
        let prop = if positive { &self.prop.positive_block } else { &self.prop.negative_block };
        let scale = prop.scale();
        let phi_p: Vec<f64> = phi.iter().map(|x| x + scale * self.rng.sample::<f64, _>(StandardNormal)).collect();
        let (proposed, cov) = target(&phi_p);
        let accepted = mh_accept(current, proposed, &mut self.rng);
        if accepted {
            self.s.metric_cov = cov;
        }
        let prop = if positive { &mut self.prop.positive_block } else { &mut self.prop.negative_block };
        prop.record(accepted);
        self.tally(Block::MetricCovariance, accepted);
        Ok(())
    }

    fn update_offset(&mut self) -> Result<()> {
        let offset = self.s.offset.unwrap_or_default();
        let beta = self.s.metric_effects;
        let sigma = self.s.metric_cov;
        let shifted = |o: f64| sigma.map(|v| v - offset + o);
        let current = normal_logpdf(offset, 0.0, PRIOR_LOCATION_VARIANCE) + mvn_kernel(&beta, &sigma);
        let op = offset + self.prop.offset.scale() * self.normal();
        let mut cov = shifted(op);
        // Cross-block entries carry only the offset.
        for i in 0..N_POSITIVE {
            for j in N_POSITIVE..N_METRICS {
                cov[(i, j)] = op;
                cov[(j, i)] = op;
            }
        }
        let proposed = normal_logpdf(op, 0.0, PRIOR_LOCATION_VARIANCE) + mvn_kernel(&beta, &cov);
        let accepted = mh_accept(current, proposed, &mut self.rng);
        if accepted {
            self.s.offset = Some(op);
            self.s.metric_cov = cov;
            self.refresh_cov()?;
        }
        self.prop.offset.record(accepted);
        self.tally(Block::Offset, accepted);
        Ok(())
    }

    fn update_correlation(&mut self) {
        let Some((x, y)) = self.spec.regression.correlated_pair() else { return };
        let (a, b) = (self.s.coefficient(x), self.s.coefficient(y));
        let v = PRIOR_LOCATION_VARIANCE;
        let target = |r: f64| {
            if r.abs() >= 1.0 {
                f64::NEG_INFINITY
            } else {
                let q = 1.0 - r * r;
                -0.5 * q.ln() - (a * a - 2.0 * r * a * b + b * b) / (2.0 * v * q)
            }
        };
        let rho = self.s.coef_correlation.unwrap_or_default();
        let rp = rho + self.prop.correlation.scale() * self.normal();
        let accepted = mh_accept(target(rho), target(rp), &mut self.rng);
        if accepted {
            self.s.coef_correlation = Some(rp);
        }
        self.prop.correlation.record(accepted);
        self.tally(Block::Correlation, accepted);
    }

    /// Translates health and intercept by `c` and the metric locations by
    /// `−c`, which leaves every linear predictor unchanged.
    fn update_location_shift(&mut self) {
        let c = self.prop.shift.scale() * self.normal();
        let v = PRIOR_LOCATION_VARIANCE;
        let (a0, theta) = (self.s.intercept, self.s.group_effect);
        let beta = self.s.metric_effects;
        let mut bp = beta;
        for b in &mut bp[..N_POSITIVE] {
            *b -= c;
        }
        let current = normal_logpdf(a0, 0.0, v) + normal_logpdf(theta, 0.0, v) - 0.5 * quad(&beta, &self.cov_inv);
        let proposed =
            normal_logpdf(a0 + c, 0.0, v) + normal_logpdf(theta - c, 0.0, v) - 0.5 * quad(&bp, &self.cov_inv);
        let accepted = mh_accept(current, proposed, &mut self.rng);
        if accepted {
            self.s.intercept += c;
            self.s.group_effect -= c;
            self.s.metric_effects = bp;
            for h in &mut self.s.health {
                *h += c;
            }
            self.refresh_means();
            self.refresh_likelihood();
        }
        self.prop.shift.record(accepted);
        self.tally(Block::LocationShift, accepted);
    }

    fn deviance(&self) -> f64 {
        let ll: f64 = self
            .data
            .sites
            .iter()
            .zip(self.s.linear_predictors())
            .map(|(site, nu)| site_log_likelihood(site, &nu))
            .sum();
        -2.0 * ll
    }

    fn acceptance(map: &BTreeMap<Block, (u64, u64)>) -> Vec<BlockAcceptance> {
        map.iter().map(|(&block, &(proposed, accepted))| BlockAcceptance { block, proposed, accepted }).collect()
    }
}

/// Default start with chain-specific jitter of up to ±0.1 on every
/// location and relative jitter on every variance.
fn jittered_start<R: Rng + ?Sized>(n_sites: usize, spec: &ModelSpec, rng: &mut R) -> ParameterState {
    let mut u = || JITTER * rng.random_range(-1.0..1.0);
    let mut s = ParameterState::initial(n_sites, spec);
    s.health.iter_mut().for_each(|h| *h += u());
    s.intercept += u();
    s.coefficients.iter_mut().for_each(|c| *c += u());
    s.dd_slope = s.dd_slope.map(|v| v + u());
    s.group_effect += u();
    s.metric_effects.iter_mut().for_each(|b| *b += u());
    s.health_var *= 1.0 + u();
    s.salinity_var = s.salinity_var.map(|v| v * (1.0 + u()));
    s.coef_correlation = s.coef_correlation.map(|r| r + u());
    s.metric_cov = match spec.covariance {
        CovarianceSpec::Diagonal => MetricMatrix::identity() * (1.0 + u()),
        _ => MetricMatrix::from_diagonal(&nalgebra::Vector5::from_fn(|_, _| 1.0 + u())),
    };
    if let Some(o) = s.offset.as_mut() {
        *o += u();
        let o = *o;
        s.metric_cov = s.metric_cov.map(|v| v + o);
    }
    s
}

/// Runs one chain with its RNG stream derived from `(config.seed, chain_id)`.
pub fn run_chain(data: &ModelData, spec: &ModelSpec, config: &SamplerConfig, chain_id: usize) -> Result<ChainOutput> {
    run_chain_with_progress(data, spec, config, chain_id, &NoProgress)
}

pub fn run_chain_with_progress(
    data: &ModelData,
    spec: &ModelSpec,
    config: &SamplerConfig,
    chain_id: usize,
    sink: &dyn ProgressSink,
) -> Result<ChainOutput> {
    config.validate()?;
    spec.validate()?;
    if chain_id >= config.n_chains {
        return Err(LhfiError::invalid(format!("chain {chain_id} out of range for {} chains", config.n_chains)));
    }
    let seed = config.chain_seed(chain_id);
    let mut chain = Chain::new(data, spec, config, seed)?;
    let mut draws = Vec::with_capacity(config.draws_per_chain());
    let mut deviance = Vec::with_capacity(config.draws_per_chain());
    let mut scales_after_burn_in = (config.burn_in == 0).then(|| chain.prop.snapshot());
    let report_every = config.adapt_window.max(1000);

    for t in 1..=config.n_iterations {
        chain.sweep()?;
        if t <= config.burn_in {
            if t % config.adapt_window == 0 {
                chain.prop.iter_mut().for_each(Proposal::adapt);
            }
            if t == config.burn_in {
                scales_after_burn_in = Some(chain.prop.snapshot());
                chain.sampling = true;
            }
        } else {
            chain.sampling = true;
            if (t - config.burn_in) % config.thin == 0 {
                draws.push(chain.s.clone());
                deviance.push(chain.deviance());
            }
        }
        if t % report_every == 0 || t == config.n_iterations {
            let acc = Chain::acceptance(&chain.totals);
            sink.report(&ProgressEvent { chain_id, iteration: t, n_iterations: config.n_iterations, acceptance: &acc });
        }
    }
    Ok(ChainOutput {
        chain_id,
        seed,
        draws,
        deviance,
        acceptance: Chain::acceptance(&chain.sampling_totals),
        scales_after_burn_in: scales_after_burn_in.unwrap_or_default(),
        final_scales: chain.prop.snapshot(),
    })
}

/// Runs every chain concurrently, one thread per chain, and returns the
/// outputs in chain order.
pub fn run_chains(
    data: &ModelData,
    spec: &ModelSpec,
    config: &SamplerConfig,
    sink: &dyn ProgressSink,
) -> Result<Vec<ChainOutput>> {
    config.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.n_chains)
            .map(|c| scope.spawn(move || run_chain_with_progress(data, spec, config, c, sink)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    })
}
