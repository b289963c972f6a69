use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::grouping::{MetricGrouping, N_METRICS};
use super::links::{log1p_sum_exp, CategoryProbabilities, NU_CLAMP};
use crate::{LhfiError, Result};

/// Benthic counts from one replicate grab sample.
///
/// `counts[m - 1]` is the number of organisms in metric `m`. The residual
/// category of each group is never stored; it is `cardinality` minus the
/// group's counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteObservation {
    pub site_id: u32,
    pub replicate_id: u32,
    pub counts: [u32; N_METRICS],
    pub cardinality: u32,
}

impl SiteObservation {
    pub fn validate(&self, grouping: &MetricGrouping) -> Result<()> {
        if self.cardinality == 0 {
            return Err(LhfiError::invalid(format!(
                "site {} replicate {}: cardinality must be at least 1",
                self.site_id, self.replicate_id
            )));
        }
        for (label, metrics) in
            [("positive", grouping.positive_metrics()), ("negative", grouping.negative_metrics())]
        {
            let total: u64 = metrics.iter().map(|&m| u64::from(self.counts[m - 1])).sum();
            if total > u64::from(self.cardinality) {
                return Err(LhfiError::invalid(format!(
                    "site {} replicate {}: {label} metric counts sum to {total}, exceeding cardinality {}",
                    self.site_id, self.replicate_id, self.cardinality
                )));
            }
        }
        Ok(())
    }
}

/// Log multinomial coefficient `N! / (Π y_j! · r!)` with the residual
/// count `r = N − Σ y_j`.
pub(crate) fn log_multinomial_coefficient(counts: &[u32], cardinality: u32) -> Result<f64> {
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total > u64::from(cardinality) {
        return Err(LhfiError::invalid(format!(
            "counts sum to {total}, exceeding cardinality {cardinality}"
        )));
    }
    let residual = u64::from(cardinality) - total;
    let mut c = ln_factorial(u64::from(cardinality)) - ln_factorial(residual);
    for &y in counts {
        c -= ln_factorial(u64::from(y));
    }
    Ok(c)
}

/// Log PMF of a multinomial over the named categories plus the implied
/// residual category, including the multinomial coefficient.
pub fn multinomial_loglik<const K: usize>(
    counts: &[u32; K],
    cardinality: u32,
    p: &CategoryProbabilities<K>,
) -> Result<f64> {
    p.validate()?;
    let coef = log_multinomial_coefficient(counts, cardinality)?;
    let named: u32 = counts.iter().sum();
    let residual = cardinality - named;
    let mut ll = coef;
    for (&y, &pj) in counts.iter().zip(&p.named) {
        if y > 0 {
            ll += f64::from(y) * pj.ln();
        }
    }
    if residual > 0 {
        ll += f64::from(residual) * p.residual.ln();
    }
    Ok(ll)
}

/// Positive-group log-likelihood from site-level sufficient statistics:
/// `Σ_j Y_j ν_j − N · log(1 + Σ_j exp ν_j)`, excluding the coefficient.
#[inline]
pub(crate) fn positive_group_loglik(totals: &[f64; 2], cardinality: f64, nu: [f64; 2]) -> f64 {
    let nu = nu.map(|v| v.clamp(-NU_CLAMP, NU_CLAMP));
    totals[0] * nu[0] + totals[1] * nu[1] - cardinality * log1p_sum_exp(&nu)
}

/// Negative-group counterpart: `−Σ_j Y_j ν_j − N · log(1 + Σ_j exp(−ν_j))`.
#[inline]
pub(crate) fn negative_group_loglik(totals: &[f64; 3], cardinality: f64, nu: [f64; 3]) -> f64 {
    let nu = nu.map(|v| v.clamp(-NU_CLAMP, NU_CLAMP));
    let neg = nu.map(|v| -v);
    -(totals[0] * nu[0] + totals[1] * nu[1] + totals[2] * nu[2]) - cardinality * log1p_sum_exp(&neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Enumerates every outcome of an `n`-trial multinomial over `k` named
    /// categories plus residual.
    fn outcomes(k: usize, n: u32) -> Vec<Vec<u32>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 0..=n {
            for mut rest in outcomes(k - 1, n - first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    #[test]
    fn empty_sample_is_log_one() {
        let p = CategoryProbabilities::from_named([0.3, 0.3]).unwrap();
        assert_eq!(multinomial_loglik(&[0, 0], 0, &p).unwrap(), 0.0);
    }

    #[test]
    fn hand_enumerated_value() {
        let p = CategoryProbabilities::from_named([0.5, 0.25]).unwrap();
        let ll = multinomial_loglik(&[1, 1], 2, &p).unwrap();
        assert_abs_diff_eq!(ll, 0.25f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn brute_force_pmf() {
        // Sum over all orderings of 4 trials, keeping those that land on (2,0,1,1).
        let probs = [0.3, 0.2, 0.1, 0.4];
        let mut total = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let seq = [a, b, c, d];
                        let mut counts = [0u32; 4];
                        for &s in &seq {
                            counts[s] += 1;
                        }
                        if counts == [2, 0, 1, 1] {
                            total += seq.iter().map(|&s| probs[s]).product::<f64>();
                        }
                    }
                }
            }
        }
        let p = CategoryProbabilities::from_named([0.3, 0.2, 0.1]).unwrap();
        let ll = multinomial_loglik(&[2, 0, 1], 4, &p).unwrap();
        assert_abs_diff_eq!(ll, total.ln(), epsilon = 1e-12);
        let by_formula = factorial(4) / (factorial(2) * factorial(1) * factorial(1))
            * 0.3f64.powi(2)
            * 0.1
            * 0.4;
        assert_abs_diff_eq!(total, by_formula, epsilon = 1e-15);
    }

    #[test]
    fn pmf_sums_to_one() {
        let p2 = CategoryProbabilities::from_named([0.15, 0.55]).unwrap();
        let p3 = CategoryProbabilities::from_named([0.1, 0.2, 0.3]).unwrap();
        for n in 0..=6 {
            let s2: f64 = outcomes(2, n)
                .iter()
                .map(|o| multinomial_loglik(&[o[0], o[1]], n, &p2).unwrap().exp())
                .sum();
            let s3: f64 = outcomes(3, n)
                .iter()
                .map(|o| multinomial_loglik(&[o[0], o[1], o[2]], n, &p3).unwrap().exp())
                .sum();
            assert_abs_diff_eq!(s2, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(s3, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn errors() {
        let p = CategoryProbabilities::from_named([0.5, 0.25]).unwrap();
        assert!(multinomial_loglik(&[2, 2], 3, &p).is_err());
        let bad = CategoryProbabilities { named: [0.0, 0.5], residual: 0.5 };
        assert!(multinomial_loglik(&[0, 1], 2, &bad).is_err());
    }

    #[test]
    fn sufficient_statistic_form_matches_pmf() {
        let nu = [0.7, -1.2];
        let p = super::super::links::link_inverse_positive(nu).unwrap();
        let ll = multinomial_loglik(&[3, 5], 20, &p).unwrap();
        let coef = log_multinomial_coefficient(&[3, 5], 20).unwrap();
        let fast = coef + positive_group_loglik(&[3.0, 5.0], 20.0, nu);
        assert_abs_diff_eq!(ll, fast, epsilon = 1e-10);

        let nu = [0.4, -1.1, 2.2];
        let p = super::super::links::link_inverse_negative(nu).unwrap();
        let ll = multinomial_loglik(&[4, 1, 0], 11, &p).unwrap();
        let coef = log_multinomial_coefficient(&[4, 1, 0], 11).unwrap();
        let fast = coef + negative_group_loglik(&[4.0, 1.0, 0.0], 11.0, nu);
        assert_abs_diff_eq!(ll, fast, epsilon = 1e-10);
    }

    #[test]
    fn observation_validation() {
        let g = MetricGrouping::ambi();
        let ok = SiteObservation { site_id: 1, replicate_id: 1, counts: [3, 2, 1, 1, 1], cardinality: 5 };
        ok.validate(&g).unwrap();
        let over = SiteObservation { counts: [3, 3, 0, 0, 0], ..ok.clone() };
        assert!(over.validate(&g).is_err());
        let zero = SiteObservation { cardinality: 0, counts: [0; 5], ..ok };
        assert!(zero.validate(&g).is_err());
    }
}
