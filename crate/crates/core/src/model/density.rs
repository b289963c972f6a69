//! Log-densities used by the priors and the latent regressions.
//!
//! All densities are fully normalized. Out-of-support arguments return
//! `-inf` rather than an error.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use statrs::function::gamma::ln_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn normal_logpdf(x: f64, mean: f64, variance: f64) -> f64 {
    if !(variance > 0.0) {
        return f64::NEG_INFINITY;
    }
    let z = x - mean;
    -0.5 * (LN_2PI + variance.ln()) - 0.5 * z * z / variance
}

/// Inverse-gamma with `shape` and `scale`: `p(x) ∝ x^{-shape-1} exp(-scale/x)`.
pub fn inv_gamma_logpdf(x: f64, shape: f64, scale: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

pub fn uniform_logpdf(x: f64, low: f64, high: f64) -> f64 {
    if x > low && x < high {
        -(high - low).ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `log Γ_d(a)`, the multivariate gamma function.
pub fn ln_multivariate_gamma(d: usize, a: f64) -> f64 {
    let d_f = d as f64;
    let mut s = d_f * (d_f - 1.0) / 4.0 * PI.ln();
    for j in 1..=d {
        s += ln_gamma(a + (1.0 - j as f64) / 2.0);
    }
    s
}

/// Inverse-Wishart log-density with `df` degrees of freedom and scale `S`:
/// `p(Σ) ∝ |Σ|^{-(df+d+1)/2} exp(-½ tr(S Σ^{-1}))`.
pub fn inv_wishart_logpdf(sigma: &DMatrix<f64>, df: f64, scale: &DMatrix<f64>) -> f64 {
    let d = sigma.nrows();
    let Some(chol) = Cholesky::new(sigma.clone()) else {
        return f64::NEG_INFINITY;
    };
    let Some(scale_chol) = Cholesky::new(scale.clone()) else {
        return f64::NEG_INFINITY;
    };
    let log_det_sigma = chol_log_det(&chol);
    let log_det_scale = chol_log_det(&scale_chol);
    let trace = (scale * chol.inverse()).trace();
    let d_f = d as f64;
    0.5 * df * log_det_scale
        - 0.5 * df * d_f * std::f64::consts::LN_2
        - ln_multivariate_gamma(d, 0.5 * df)
        - 0.5 * (df + d_f + 1.0) * log_det_sigma
        - 0.5 * trace
}

pub(crate) fn chol_log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Zero-mean multivariate normal with a pre-factorized covariance.
#[derive(Debug, Clone)]
pub struct MvnZero {
    chol: Cholesky<f64, Dyn>,
    norm: f64,
}

impl MvnZero {
    /// `None` when `cov` is not positive definite.
    pub fn new(cov: &DMatrix<f64>) -> Option<Self> {
        if cov.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let chol = Cholesky::new(cov.clone())?;
        let d = cov.nrows() as f64;
        let norm = -0.5 * d * LN_2PI - 0.5 * chol_log_det(&chol);
        Some(Self { chol, norm })
    }

    pub fn logpdf(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        let z = self.chol.l().solve_lower_triangular(&v).expect("cholesky factor is invertible");
        self.norm - 0.5 * z.norm_squared()
    }
}

pub fn mvn_zero_logpdf(x: &[f64], cov: &DMatrix<f64>) -> f64 {
    match MvnZero::new(cov) {
        Some(m) => m.logpdf(x),
        None => f64::NEG_INFINITY,
    }
}
