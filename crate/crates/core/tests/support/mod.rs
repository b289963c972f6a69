#![allow(dead_code)]

pub mod oracle;

use lhfi::covariates::CovariateTable;
use lhfi::model::{
    CovarianceSpec, LatentRegressionSpec, MetricMatrix, ModelData, ModelSpec, ParameterState, SiteObservation,
};
use nalgebra::{DMatrix, Matrix5};
use rand::Rng;

pub const COVARIANCES: [CovarianceSpec; 4] = [
    CovarianceSpec::Diagonal,
    CovarianceSpec::UnstructuredIw,
    CovarianceSpec::BlockDiagonal,
    CovarianceSpec::StructuredOffset,
];

/// A small random dataset with at most 3 sites and cardinalities up to 6.
pub struct TinyInstance {
    pub observations: Vec<SiteObservation>,
    pub table: CovariateTable,
}

pub fn tiny_instance<R: Rng>(rng: &mut R) -> TinyInstance {
    let n_sites = rng.random_range(1..=3usize);
    let ids: Vec<u32> = (1..=n_sites as u32).collect();
    let mut observations = Vec::new();
    for &id in &ids {
        for rep in 1..=rng.random_range(1..=2u32) {
            let n = rng.random_range(1..=6u32);
            let mut counts = [0u32; 5];
            for group in [&[0usize, 1][..], &[2, 3, 4][..]] {
                let mut left = n;
                for &j in group {
                    let c = rng.random_range(0..=left);
                    counts[j] = c;
                    left -= c;
                }
            }
            observations.push(SiteObservation { site_id: id, replicate_id: rep, counts, cardinality: n });
        }
    }
    let mut table = CovariateTable::new(ids).unwrap();
    for name in ["salinity", "dd", "temperature"] {
        table.add_raw(name, (0..n_sites).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
    }
    table.engineer(&[]).unwrap();
    TinyInstance { observations, table }
}

/// The regression structures exercised by the oracle checks.
pub fn regressions(two_level: bool) -> Vec<LatentRegressionSpec> {
    if two_level {
        vec![
            LatentRegressionSpec::two_level(&["salinity"]),
            LatentRegressionSpec::two_level(&["salinity", "temperature"]).correlated(),
        ]
    } else {
        vec![
            LatentRegressionSpec::single_level(&["dd"]),
            LatentRegressionSpec::single_level(&["salinity", "dd"]).correlated(),
        ]
    }
}

fn random_spd<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * 0.3
}

fn random_cov<R: Rng>(spec: CovarianceSpec, rng: &mut R) -> (MetricMatrix, Option<f64>) {
    match spec {
        CovarianceSpec::Diagonal => (Matrix5::identity() * rng.random_range(0.2..2.0), None),
        CovarianceSpec::UnstructuredIw => {
            let m = random_spd(5, rng);
            (Matrix5::from_fn(|i, j| m[(i, j)]), None)
        }
        CovarianceSpec::BlockDiagonal | CovarianceSpec::StructuredOffset => loop {
            let p = random_spd(2, rng);
            let n = random_spd(3, rng);
            let o = if spec == CovarianceSpec::StructuredOffset { rng.random_range(-0.3..0.3) } else { 0.0 };
            let m = Matrix5::from_fn(|i, j| match (i < 2, j < 2) {
                (true, true) => p[(i, j)] + o,
                (false, false) => n[(i - 2, j - 2)] + o,
                _ => o,
            });
            if m.cholesky().is_some() {
                break (m, (spec == CovarianceSpec::StructuredOffset).then_some(o));
            }
        },
    }
}

/// A random state in the support of `spec`.
pub fn random_state<R: Rng>(n_sites: usize, spec: &ModelSpec, rng: &mut R) -> ParameterState {
    let mut s = ParameterState::initial(n_sites, spec);
    let mut u = |w: f64| rng.random_range(-w..w);
    s.health.iter_mut().for_each(|h| *h = u(2.0));
    s.intercept = u(2.0);
    s.coefficients.iter_mut().for_each(|c| *c = u(1.5));
    s.dd_slope = s.dd_slope.map(|_| u(1.5));
    s.group_effect = u(2.0);
    s.metric_effects.iter_mut().for_each(|b| *b = u(1.5));
    s.health_var = 0.1 + u(1.0).abs();
    s.salinity_var = s.salinity_var.map(|_| 0.1 + u(1.0).abs());
    s.coef_correlation = s.coef_correlation.map(|_| u(0.95));
    let (cov, offset) = random_cov(spec.covariance, rng);
    s.metric_cov = cov;
    s.offset = offset;
    s
}

pub fn model_data(inst: &TinyInstance, spec: &ModelSpec) -> ModelData {
    ModelData::assemble(&inst.observations, &inst.table, spec).unwrap()
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0))
}

pub fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let (m, _) = mean_var(x);
    let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    num / den
}
