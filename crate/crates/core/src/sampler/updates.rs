use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use crate::model::{CovarianceSpec, MetricMatrix, N_METRICS, N_POSITIVE};
use crate::{LhfiError, Result};

/// Shape and scale of the inverse-gamma prior on every scalar variance.
pub const VARIANCE_PRIOR: (f64, f64) = (1.0, 1.0);

pub fn sample_inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0 / scale).expect("positive gamma parameters").sample(rng);
    1.0 / g.max(f64::MIN_POSITIVE)
}

/// `IG(a + n/2, b + SSR/2)` for `n` normal residuals under an `IG(a, b)` prior.
pub fn variance_conditional(residuals: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut ssr) = (0usize, 0.0);
    for r in residuals {
        n += 1;
        ssr += r * r;
    }
    (VARIANCE_PRIOR.0 + n as f64 / 2.0, VARIANCE_PRIOR.1 + ssr / 2.0)
}

/// Draws the health-regression variance given latent health and its
/// regression means.
pub fn gibbs_update_sigma_h2<R: Rng + ?Sized>(health: &[f64], means: &[f64], rng: &mut R) -> Result<f64> {
    if health.len() != means.len() {
        return Err(LhfiError::invalid(format!(
            "{} health values but {} regression means",
            health.len(),
            means.len()
        )));
    }
    let (a, b) = variance_conditional(health.iter().zip(means).map(|(h, m)| h - m));
    Ok(sample_inv_gamma(a, b, rng))
}

/// Draws the salinity-regression variance given residuals
/// `salinity − α_DD · DD`.
pub fn gibbs_update_sigma_delta2<R: Rng + ?Sized>(residuals: &[f64], rng: &mut R) -> f64 {
    let (a, b) = variance_conditional(residuals.iter().copied());
    sample_inv_gamma(a, b, rng)
}

/// Draws `Σ ~ IW(df, scale)` through the Bartlett decomposition of the
/// Wishart precision. The result is exactly symmetric.
pub fn sample_inv_wishart<R: Rng + ?Sized>(df: f64, scale: &DMatrix<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
    let d = scale.nrows();
    if d == 0 || scale.ncols() != d {
        return Err(LhfiError::invalid("inverse-Wishart scale must be square and nonempty"));
    }
    if !(df > d as f64 - 1.0) {
        return Err(LhfiError::invalid(format!("inverse-Wishart df {df} too small for dimension {d}")));
    }
    let precision_scale = scale
        .clone()
        .try_inverse()
        .and_then(|inv| inv.cholesky())
        .ok_or_else(|| LhfiError::invalid("inverse-Wishart scale is not positive definite"))?;
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi: f64 = ChiSquared::new(df - i as f64).expect("df checked above").sample(rng);
        a[(i, i)] = chi.sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    // W = M Mᵀ with M = L A, so Σ = W⁻¹ = Bᵀ B where B = M⁻¹.
    let m = precision_scale.l() * a;
    let b = m
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| LhfiError::InternalState("singular Bartlett factor".into()))?;
    Ok(b.transpose() * b)
}

/// Conditional draw of a `d`-dimensional covariance under an `IW(d, I)`
/// prior given zero-mean normal observations: `IW(d + k, I + Σ xxᵀ)`.
pub fn sample_iw_posterior<R: Rng + ?Sized>(observations: &[&[f64]], d: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let mut scale = DMatrix::identity(d, d);
    for x in observations {
        if x.len() != d {
            return Err(LhfiError::invalid(format!("observation of length {} for dimension {d}", x.len())));
        }
        for i in 0..d {
            for j in 0..d {
                scale[(i, j)] += x[i] * x[j];
            }
        }
    }
    sample_inv_wishart((d + observations.len()) as f64, &scale, rng)
}

/// Conjugate update of the metric-effect covariance for the unstructured
/// and block-diagonal specifications.
pub fn gibbs_update_sigma_blocks<R: Rng + ?Sized>(
    beta: &[f64; N_METRICS],
    spec: CovarianceSpec,
    rng: &mut R,
) -> Result<MetricMatrix> {
    match spec {
        CovarianceSpec::UnstructuredIw => {
            let s = sample_iw_posterior(&[beta], N_METRICS, rng)?;
            Ok(MetricMatrix::from_fn(|i, j| s[(i, j)]))
        }
        CovarianceSpec::BlockDiagonal => {
            let (pos, neg) = beta.split_at(N_POSITIVE);
            let sp = sample_iw_posterior(&[pos], N_POSITIVE, rng)?;
            let sn = sample_iw_posterior(&[neg], N_METRICS - N_POSITIVE, rng)?;
            let mut out = MetricMatrix::zeros();
            for i in 0..N_POSITIVE {
                for j in 0..N_POSITIVE {
                    out[(i, j)] = sp[(i, j)];
                }
            }
            for i in N_POSITIVE..N_METRICS {
                for j in N_POSITIVE..N_METRICS {
                    out[(i, j)] = sn[(i - N_POSITIVE, j - N_POSITIVE)];
                }
            }
            Ok(out)
        }
        other => Err(LhfiError::NotApplicable(format!("no conjugate block update for {other:?} covariance"))),
    }
}

/// Metropolis accept/reject between log-targets.
pub(crate) fn mh_accept<R: Rng + ?Sized>(current: f64, proposed: f64, rng: &mut R) -> bool {
    if proposed.is_nan() {
        return false;
    }
    let u: f64 = rng.random();
    u.ln() < proposed - current
}

/// One Gaussian random-walk Metropolis step on a block of parameters.
pub fn mh_update_block<R, F>(current: &[f64], mut log_target: F, scale: f64, rng: &mut R) -> Result<(Vec<f64>, bool)>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let lp = log_target(current);
    if !(lp > f64::NEG_INFINITY) || lp.is_nan() {
        return Err(LhfiError::InternalState(format!("log-target {lp} at the current point")));
    }
    if !(scale >= 0.0) {
        return Err(LhfiError::invalid(format!("proposal scale {scale} must be nonnegative")));
    }
    let proposal: Vec<f64> = current.iter().map(|x| x + scale * rng.sample::<f64, _>(StandardNormal)).collect();
    if mh_accept(lp, log_target(&proposal), rng) {
        Ok((proposal, true))
    } else {
        Ok((current.to_vec(), false))
    }
}
