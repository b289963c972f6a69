use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use super::design::{CovariateScheme, SynthDesign};
use crate::covariates::{CovariateTable, SiteGeometry};
use crate::model::{
    latent_health_mean, link_inverse_negative, link_inverse_positive, GroupProbabilities, MetricMatrix,
    ParameterState, SiteObservation, N_METRICS,
};
use crate::{LhfiError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub observations: Vec<SiteObservation>,
    /// Engineered (centred) covariates.
    pub table: CovariateTable,
    /// Raw covariate columns as generated, before centring.
    pub raw_covariates: Vec<(String, Vec<f64>)>,
    /// Planar geometry placing each site at its raw DD along the x axis,
    /// present when the design generates the DD column.
    pub geometry: Vec<SiteGeometry>,
    pub truth: ParameterState,
    pub probabilities: Vec<GroupProbabilities>,
}

fn sample_counts<const K: usize, R: Rng>(n: u32, named: [f64; K], rng: &mut R) -> [u32; K] {
    let mut remaining = u64::from(n);
    let mut mass = 1.0;
    let mut out = [0u32; K];
    for (k, &p) in named.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(remaining, q).expect("probability clamped to [0, 1]").sample(rng);
        out[k] = c as u32;
        remaining -= c;
        mass -= p;
    }
    out
}

/// Forward simulation of a full dataset from the design's true parameters.
pub fn generate(design: &SynthDesign) -> Result<SynthDataset> {
    design.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let n = design.n_sites;
    let t = &design.truth;
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    let mut raw: Vec<(String, Vec<f64>)> = Vec::new();
    for g in &design.covariates {
        let values = match &g.scheme {
            CovariateScheme::Grid { start, step } => (0..n).map(|i| start + step * i as f64).collect(),
            CovariateScheme::Uniform { low, high } => (0..n).map(|_| rng.random_range(*low..*high)).collect(),
            CovariateScheme::Response { of, slope, noise_sd } => {
                let base = &raw.iter().find(|(name, _)| name == of).expect("validated order").1;
                let mean = base.iter().sum::<f64>() / n as f64;
                let slope = slope.or(t.dd_slope).unwrap_or(0.0);
                let sd = noise_sd.or(t.salinity_sd).unwrap_or(0.0);
                let base = base.clone();
                base.iter().map(|x| slope * (x - mean) + sd * normal(&mut rng)).collect()
            }
        };
        raw.push((g.name.clone(), values));
    }

    let site_ids: Vec<u32> = (1..=n as u32).collect();
    let mut table = CovariateTable::new(site_ids.clone())?;
    for (name, values) in &raw {
        table.add_raw(name, values.clone())?;
    }
    table.engineer(&[])?;

    let reg = &design.spec.regression;
    let columns = reg.covariates.iter().map(|c| table.model_column(c)).collect::<Result<Vec<_>>>()?;
    let health: Vec<f64> = (0..n)
        .map(|i| {
            let x: Vec<f64> = columns.iter().map(|c| c[i]).collect();
            latent_health_mean(t.intercept, &t.coefficients, &x).map(|m| m + t.health_sd * normal(&mut rng))
        })
        .collect::<Result<_>>()?;

    let sigma = t.metric_matrix();
    let metric_effects: [f64; N_METRICS] = if sigma == MetricMatrix::zeros() {
        [0.0; N_METRICS]
    } else {
        let l = sigma.cholesky().ok_or_else(|| LhfiError::invalid("metric covariance not positive definite"))?.l();
        let z = nalgebra::Vector5::from_fn(|_, _| normal(&mut rng));
        let b = l * z;
        std::array::from_fn(|j| b[j])
    };
    let truth = t.to_state(health, metric_effects);

    let order = design.spec.grouping.canonical_order();
    let mut observations = Vec::with_capacity(n * design.replicates);
    let mut probabilities = Vec::with_capacity(n);
    for (i, nu) in truth.linear_predictors().into_iter().enumerate() {
        let pos = link_inverse_positive([nu[0], nu[1]])?;
        let neg = link_inverse_negative([nu[2], nu[3], nu[4]])?;
        for k in 0..design.replicates {
            let card = rng.random_range(design.cardinality.0..=design.cardinality.1);
            let cp = sample_counts(card, pos.named, &mut rng);
            let cn = sample_counts(card, neg.named, &mut rng);
            let canonical = [cp[0], cp[1], cn[0], cn[1], cn[2]];
            let mut counts = [0u32; N_METRICS];
            for (slot, &metric) in order.iter().enumerate() {
                counts[metric - 1] = canonical[slot];
            }
            observations.push(SiteObservation {
                site_id: site_ids[i],
                replicate_id: k as u32 + 1,
                counts,
                cardinality: card,
            });
        }
        probabilities.push(GroupProbabilities { site_id: site_ids[i], positive: pos, negative: neg });
    }

    let geometry = raw
        .iter()
        .find(|(name, _)| *name == reg.dd)
        .map(|(_, dd)| {
            site_ids.iter().zip(dd).map(|(&id, &x)| SiteGeometry { site_id: id, easting: x, northing: 0.0 }).collect()
        })
        .unwrap_or_default();

    Ok(SynthDataset { observations, table, raw_covariates: raw, geometry, truth, probabilities })
}
