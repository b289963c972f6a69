//! Generalized-logit links between linear predictors and category
//! probabilities.
//!
//! The positive group uses the ordinary generalized logit,
//! `ν_j = log(p_j / p_0)`, so a larger predictor means a larger share for the
//! metric. The negative group uses the inverted form, `ν_j = log(p_0 / p_j)`,
//! so that better health shrinks the share of poor-health indicators. In
//! both cases `p_0` is the residual category.

use crate::{LhfiError, Result};

/// Linear predictors are clamped to this magnitude before exponentiation.
pub const NU_CLAMP: f64 = 500.0;

/// Probabilities of the named categories of one multinomial together with
/// the residual category.
///
/// The residual is carried explicitly rather than recomputed as
/// `1 − Σ p_j`, which loses all precision once it falls below machine
/// epsilon relative to the named categories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryProbabilities<const K: usize> {
    pub named: [f64; K],
    pub residual: f64,
}

impl<const K: usize> CategoryProbabilities<K> {
    /// Builds from named probabilities, deriving the residual by subtraction.
    pub fn from_named(named: [f64; K]) -> Result<Self> {
        let residual = 1.0 - named.iter().sum::<f64>();
        let probs = Self { named, residual };
        probs.validate()?;
        Ok(probs)
    }

    pub fn validate(&self) -> Result<()> {
        for (j, &p) in self.named.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(LhfiError::invalid(format!("probability {j} = {p} outside (0, 1)")));
            }
        }
        if !(self.residual > 0.0 && self.residual < 1.0) {
            return Err(LhfiError::invalid(format!(
                "residual probability {} outside (0, 1)",
                self.residual
            )));
        }
        Ok(())
    }
}

/// Probabilities of both metric groups at one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupProbabilities {
    pub site_id: u32,
    pub positive: CategoryProbabilities<2>,
    pub negative: CategoryProbabilities<3>,
}

fn check_finite(nu: &[f64]) -> Result<()> {
    if let Some(bad) = nu.iter().find(|v| !v.is_finite()) {
        return Err(LhfiError::invalid(format!("linear predictor {bad} is not finite")));
    }
    Ok(())
}

/// Softmax over `(0, z_1, ..., z_K)` with the zero slot as residual.
fn softmax_with_reference<const K: usize>(z: [f64; K]) -> CategoryProbabilities<K> {
    let z = z.map(|v| v.clamp(-NU_CLAMP, NU_CLAMP));
    let m = z.iter().fold(0.0_f64, |acc, &v| acc.max(v));
    let base = (-m).exp();
    let scaled = z.map(|v| (v - m).exp());
    let denom = base + scaled.iter().sum::<f64>();
    CategoryProbabilities { named: scaled.map(|s| s / denom), residual: base / denom }
}

/// `log(1 + Σ exp(z_j))`, stable for any finite `z`.
pub(crate) fn log1p_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().fold(0.0_f64, |acc, &v| acc.max(v));
    let mut s = (-m).exp();
    for &v in z {
        s += (v - m).exp();
    }
    m + s.ln()
}

pub fn link_inverse_positive(nu: [f64; 2]) -> Result<CategoryProbabilities<2>> {
    check_finite(&nu)?;
    Ok(softmax_with_reference(nu))
}

pub fn link_inverse_negative(nu: [f64; 3]) -> Result<CategoryProbabilities<3>> {
    check_finite(&nu)?;
    Ok(softmax_with_reference(nu.map(|v| -v)))
}

/// Forward link for the positive group: `ν_j = log(p_j / p_0)`.
pub fn link_positive(p: &CategoryProbabilities<2>) -> Result<[f64; 2]> {
    p.validate()?;
    Ok(p.named.map(|pj| (pj / p.residual).ln()))
}

/// Forward link for the negative group: `ν_j = log(p_0 / p_j)`.
pub fn link_negative(p: &CategoryProbabilities<3>) -> Result<[f64; 3]> {
    p.validate()?;
    Ok(p.named.map(|pj| (p.residual / pj).ln()))
}

/// `ν = H + θ + β`.
pub fn linear_predictor(health: f64, group_effect: f64, metric_effect: f64) -> Result<f64> {
    check_finite(&[health, group_effect, metric_effect])?;
    Ok(health + group_effect + metric_effect)
}
