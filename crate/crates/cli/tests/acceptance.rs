//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Every seed below was fixed before the suite was first run.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use lhfi::diagnostics::{
    bgr_statistic, dic, monitored_draws, plug_in_variance_ratio, rank_sites, summarize, SiteHealth,
};
use lhfi::model::{
    joint_log_posterior, link_inverse_negative, link_inverse_positive, link_negative, link_positive,
    CovarianceSpec, LatentRegressionSpec, ModelData, ModelSpec, ParameterState,
};
use lhfi::sampler::{run_chain, run_chains, sample_iw_posterior, Block, NoProgress, SamplerConfig};
use lhfi::synth::{generate, recovery_study, SynthDesign};
use lhfi_cli::{fit, write_simulation, FitOverrides, RunConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, InverseGamma};
use support::{ks_statistic, mean_var};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t <= budget, format!("{:.2}s of {}s", t.as_secs_f64(), budget.as_secs()))
}

fn link_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let nu: [f64; 5] = std::array::from_fn(|_| rng.random_range(-30.0..=30.0));
        let pos = link_positive(&link_inverse_positive([nu[0], nu[1]]).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let neg = link_negative(&link_inverse_negative([nu[2], nu[3], nu[4]]).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        for (a, b) in pos.iter().chain(&neg).zip(&nu) {
            worst = worst.max((a - b).abs());
        }
    }
    let (fast, t) = within_budget(start, Duration::from_secs(1));
    check(worst <= 1e-10 && fast, format!("max error {worst:.1e} over 10^4 vectors, {t}"))
}

fn posterior_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut n = 0;
    for _ in 0..25 {
        let inst = support::tiny_instance(&mut rng);
        for cov in support::COVARIANCES {
            for two_level in [false, true] {
                for reg in support::regressions(two_level) {
                    let spec = ModelSpec::new(cov, reg);
                    let data = support::model_data(&inst, &spec);
                    let state = support::random_state(data.n_sites(), &spec, &mut rng);
                    let got = joint_log_posterior(&state, &data, &spec).map_err(|e| e.to_string())?;
                    let want = support::oracle::joint_log_posterior(&state, &data, &spec);
                    worst = worst.max((got - want).abs());
                    n += 1;
                }
            }
        }
    }
    let (fast, t) = within_budget(start, Duration::from_secs(10));
    check(worst <= 1e-10 && fast, format!("max |diff| {worst:.1e} over {n} evaluations (25 instances x 4 covariances x 2 levels x 2 priors), {t}"))
}

fn iterate_only(block: Block, data: &ModelData, spec: &ModelSpec, state: &ParameterState, seed: u64) -> Vec<ParameterState> {
    let config = SamplerConfig {
        n_chains: 1,
        n_iterations: 100_001,
        burn_in: 1,
        thin: 1,
        seed,
        frozen: Block::ALL.iter().copied().filter(|&b| b != block).collect(),
        initial: Some(state.clone()),
        ..Default::default()
    };
    run_chain(data, spec, &config, 0).expect("chain runs").draws
}

/// Worst relative moment error and KS distance of draws against
/// `IG(shape, scale)`.
fn ig_fit(values: &[f64], shape: f64, scale: f64) -> (f64, f64) {
    let (m, v) = mean_var(values);
    let want_m = scale / (shape - 1.0);
    let want_v = want_m * want_m / (shape - 2.0);
    let moment = (m / want_m - 1.0).abs().max((v / want_v - 1.0).abs());
    let ig = InverseGamma::new(shape, scale).unwrap();
    (moment, ks_statistic(values, |x| ig.cdf(x)))
}

fn conditional_conjugacy() -> Outcome {
    let start = Instant::now();
    let design = SynthDesign::default_benchmark(11);
    let synth = generate(&design).map_err(|e| e.to_string())?;
    let spec = design.spec.clone();
    let data = ModelData::assemble(&synth.observations, &synth.table, &spec).map_err(|e| e.to_string())?;
    let s = synth.truth.clone();
    let n = data.n_sites() as f64;
    let mut lines = Vec::new();
    let mut ok = true;

    let ssr_h: f64 = data
        .sites
        .iter()
        .zip(&s.health)
        .map(|(site, h)| {
            let m = s.intercept + s.coefficients.iter().zip(&site.covariates).map(|(a, x)| a * x).sum::<f64>();
            (h - m) * (h - m)
        })
        .sum();
    let d = iterate_only(Block::HealthVariance, &data, &spec, &s, 31);
    let (mom, ks) = ig_fit(&d.iter().map(|x| x.health_var).collect::<Vec<_>>(), 1.0 + n / 2.0, 1.0 + ssr_h / 2.0);
    ok &= mom < 0.02 && ks < 0.01;
    lines.push(format!("sigma_h^2 moments {:.2}% KS {ks:.4}", 100.0 * mom));

    let slope = s.dd_slope.unwrap();
    let ssr_d: f64 = data.sites.iter().map(|x| (x.salinity.unwrap() - slope * x.dd.unwrap()).powi(2)).sum();
    let d = iterate_only(Block::SalinityVariance, &data, &spec, &s, 32);
    let (mom, ks) =
        ig_fit(&d.iter().map(|x| x.salinity_var.unwrap()).collect::<Vec<_>>(), 1.0 + n / 2.0, 1.0 + ssr_d / 2.0);
    ok &= mom < 0.02 && ks < 0.01;
    lines.push(format!("sigma_delta^2 moments {:.2}% KS {ks:.4}", 100.0 * mom));

    // Block IW inside the chain: each diagonal element is IG((nu-d+1)/2, S_jj/2).
    let block_spec = ModelSpec { covariance: CovarianceSpec::BlockDiagonal, ..spec.clone() };
    let mut bs = s.clone();
    bs.metric_cov = lhfi::model::MetricMatrix::identity() * 1.3;
    let d = iterate_only(Block::MetricCovariance, &data, &block_spec, &bs, 33);
    let mut worst_ks = 0.0f64;
    for j in 0..5 {
        let dim = if j < 2 { 2.0 } else { 3.0 };
        let b = bs.metric_effects[j];
        let ig = InverseGamma::new((dim + 1.0 - dim + 1.0) / 2.0, (1.0 + b * b) / 2.0).unwrap();
        let values: Vec<f64> = d.iter().map(|x| x.metric_cov[(j, j)]).collect();
        worst_ks = worst_ks.max(ks_statistic(&values, |x| ig.cdf(x)));
    }
    ok &= worst_ks < 0.01;

    // The in-chain IW has no finite mean, so moments use pseudo-observations.
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let obs: Vec<[f64; 3]> = (0..8).map(|k| [0.3 * k as f64 - 1.0, 0.5 - 0.1 * k as f64, (k % 3) as f64 - 1.0]).collect();
    let refs: Vec<&[f64]> = obs.iter().map(|o| &o[..]).collect();
    let mut scale = DMatrix::<f64>::identity(3, 3);
    for o in &obs {
        let v = nalgebra::DVector::from_column_slice(o);
        scale += &v * v.transpose();
    }
    let want = &scale / (3.0 + 8.0 - 3.0 - 1.0);
    let mut sum = DMatrix::<f64>::zeros(3, 3);
    let mut sum_sq = 0.0;
    for _ in 0..100_000 {
        let w = sample_iw_posterior(&refs, 3, &mut rng).map_err(|e| e.to_string())?;
        sum_sq += w[(0, 0)] * w[(0, 0)];
        sum += w;
    }
    let got = sum / 1e5;
    let mut worst_iw = 0.0f64;
    for i in 0..3 {
        for k in 0..3 {
            worst_iw = worst_iw.max((got[(i, k)] - want[(i, k)]).abs() / (want[(i, i)] * want[(k, k)]).sqrt());
        }
    }
    // Second moment of a diagonal element: IG(a, b) with a = (nu-d+1)/2.
    let (a, b) = ((11.0 - 3.0 + 1.0) / 2.0, scale[(0, 0)] / 2.0);
    let want_sq = b * b / ((a - 1.0) * (a - 2.0));
    let second = (sum_sq / 1e5 / want_sq - 1.0).abs();
    ok &= worst_iw < 0.02 && second < 0.02;
    lines.push(format!("block IW KS {worst_ks:.4}, mean {:.2}%, second moment {:.2}%", 100.0 * worst_iw, 100.0 * second));

    let (fast, t) = within_budget(start, Duration::from_secs(60));
    lines.push(t);
    check(ok && fast, lines.join("; "))
}

fn recovery() -> Outcome {
    let start = Instant::now();
    let design = SynthDesign::default_benchmark(400);
    let config = SamplerConfig { n_iterations: 40_000, burn_in: 10_000, thin: 30, seed: 400, ..Default::default() };
    let report = recovery_study(&design, &design.spec, &config, 20);
    let row = |n: &str| report.row(n).map(|r| (r.covered, r.fits)).unwrap_or((0, 0));
    let (sal, dd) = (row("alpha_salinity"), row("alpha_dd"));
    let (fast, t) = within_budget(start, Duration::from_secs(1800));
    check(
        report.failures.is_empty() && sal.0 >= 17 && dd.0 >= 17 && fast,
        format!("alpha_salinity {}/{}, alpha_dd {}/{}, {} failed fits, {t}", sal.0, sal.1, dd.0, dd.1, report.failures.len()),
    )
}

fn credible_95(chains: &[lhfi::sampler::ChainOutput], spec: &ModelSpec, data: &ModelData, name: &str) -> bool {
    let draws = monitored_draws(chains, spec, &data.site_ids()).unwrap();
    let s = summarize(&draws, &[0.95]).unwrap();
    s.iter().find(|x| x.name == name).map(|x| x.intervals[0].is_credible()).unwrap_or(false)
}

fn trumping() -> Outcome {
    let config = SamplerConfig { n_iterations: 40_000, burn_in: 10_000, thin: 30, ..Default::default() };
    let single = ModelSpec::new(CovarianceSpec::Diagonal, LatentRegressionSpec::single_level(&["salinity", "dd"]));
    let mut reproduced = 0;
    let mut marks = Vec::new();
    for seed in 500..505 {
        let design = SynthDesign::default_benchmark(seed);
        let synth = generate(&design).map_err(|e| e.to_string())?;
        let cfg = SamplerConfig { seed, ..config.clone() };
        let fit_flags = |spec: &ModelSpec| -> Result<(bool, bool), String> {
            let data = ModelData::assemble(&synth.observations, &synth.table, spec).map_err(|e| e.to_string())?;
            let chains = run_chains(&data, spec, &cfg, &NoProgress).map_err(|e| e.to_string())?;
            Ok((credible_95(&chains, spec, &data, "alpha_salinity"), credible_95(&chains, spec, &data, "alpha_dd")))
        };
        let one = fit_flags(&single)?;
        let two = fit_flags(&design.spec)?;
        let hit = !(one.0 && one.1) && two.0 && two.1;
        reproduced += usize::from(hit);
        marks.push(format!("seed {seed}: single ({},{}) two-level ({},{})", one.0 as u8, one.1 as u8, two.0 as u8, two.1 as u8));
    }
    check(reproduced >= 4, format!("{reproduced}/5 replications [{}]", marks.join("; ")))
}

fn bgr() -> Outcome {
    let draws = |seed: u64| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..10_000).map(|_| rng.sample(StandardNormal)).collect()
    };
    let a = draws(6001);
    let identical = bgr_statistic(&[&a, &a]).map_err(|e| e.to_string())?.rhat;
    let b = draws(6002);
    let iid = bgr_statistic(&[&a, &b]).map_err(|e| e.to_string())?.rhat;
    let shifted: Vec<f64> = b.iter().map(|v| v + 10.0).collect();
    let separated = bgr_statistic(&[&a, &shifted]).map_err(|e| e.to_string())?.rhat;
    check(
        identical == 1.0 && (1.0..=1.05).contains(&iid) && separated > 3.0,
        format!("identical {identical}, iid {iid:.5}, separated {separated:.2}"),
    )
}

fn dic_checks() -> Outcome {
    let fixed = dic(&[10.0, 14.0], 11.0).map_err(|e| e.to_string())?;
    let constant = dic(&[7.5; 4], 7.5).map_err(|e| e.to_string())?;
    let arithmetic = (fixed.mean_deviance, fixed.p_d, fixed.dic) == (12.0, 1.0, 13.0)
        && (constant.p_d, constant.dic) == (0.0, 7.5);

    // Five normal means, unit noise, flat prior: p_D should be 5.
    let y = [0.3, -1.2, 2.5, 0.0, 4.1];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draws: Vec<[f64; 5]> =
        (0..10_000).map(|_| std::array::from_fn(|i| y[i] + rng.sample::<f64, _>(StandardNormal))).collect();
    let c = 5.0 * (2.0 * std::f64::consts::PI).ln();
    let dev = |mu: &[f64; 5]| c + mu.iter().zip(&y).map(|(m, v)| (v - m) * (v - m)).sum::<f64>();
    let deviances: Vec<f64> = draws.iter().map(dev).collect();
    let mean: [f64; 5] = std::array::from_fn(|i| draws.iter().map(|d| d[i]).sum::<f64>() / draws.len() as f64);
    let toy = dic(&deviances, dev(&mean)).map_err(|e| e.to_string())?;
    let rel = (toy.p_d / 5.0 - 1.0).abs();
    check(arithmetic && rel < 0.1, format!("hand-computed cases exact: {arithmetic}; toy p_D {:.3} vs 5 ({:.1}%)", toy.p_d, 100.0 * rel))
}

fn benchmark_fit(seed: u64) -> Result<(ModelData, ModelSpec, Vec<lhfi::sampler::ChainOutput>), String> {
    let design = SynthDesign::default_benchmark(seed);
    let synth = generate(&design).map_err(|e| e.to_string())?;
    let data = ModelData::assemble(&synth.observations, &synth.table, &design.spec).map_err(|e| e.to_string())?;
    let config = SamplerConfig { seed, ..Default::default() };
    let chains = run_chains(&data, &design.spec, &config, &NoProgress).map_err(|e| e.to_string())?;
    Ok((data, design.spec, chains))
}

fn overlap() -> Outcome {
    let (data, spec, chains) = benchmark_fit(8)?;
    let draws = monitored_draws(&chains, &spec, &data.site_ids()).map_err(|e| e.to_string())?;
    let summaries = summarize(&draws, &[0.95]).map_err(|e| e.to_string())?;
    let sites: Vec<SiteHealth> = data
        .site_ids()
        .iter()
        .map(|&id| {
            let s = summaries.iter().find(|s| s.name == format!("H[{id}]")).unwrap();
            SiteHealth { site_id: id, mean: s.mean, interval: s.intervals[0] }
        })
        .collect();
    let report = rank_sites(&sites);
    check(report.all_overlap(), format!("{} distinguishable pairs among {} sites", report.distinguishable.len(), sites.len()))
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_simulation(&SynthDesign::default_benchmark(9), &tmp.path().join("data")).map_err(|e| e.to_string())?;
    let mut config = RunConfig::load(&tmp.path().join("data/config.json")).map_err(|e| e.to_string())?;
    config.iterations = Some(20_000);
    config.burn_in = Some(5_000);
    config.thin = Some(15);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        fit(config.clone(), &FitOverrides { seed: Some(9), out: Some(out.clone()), ..Default::default() }).map(|_| out)
    };
    let (a, b) = (run("a").map_err(|e| e.to_string())?, run("b").map_err(|e| e.to_string())?);
    let mut identical = true;
    for f in ["summary.csv", "health.csv", "dic.txt", "bgr.csv", "trace.csv", "centring.csv"] {
        identical &= std::fs::read(a.join(f)).ok() == std::fs::read(b.join(f)).ok();
    }

    let design = SynthDesign::default_benchmark(9);
    let synth = generate(&design).map_err(|e| e.to_string())?;
    let data = ModelData::assemble(&synth.observations, &synth.table, &design.spec).map_err(|e| e.to_string())?;
    let base = SamplerConfig { n_iterations: 20_000, burn_in: 5_000, thin: 15, seed: 9, ..Default::default() };
    let swapped = SamplerConfig { chain_seeds: Some(vec![base.chain_seed(1), base.chain_seed(0)]), ..base.clone() };
    let pooled = |cfg: &SamplerConfig| {
        let chains = run_chains(&data, &design.spec, cfg, &NoProgress).unwrap();
        summarize(&monitored_draws(&chains, &design.spec, &data.site_ids()).unwrap(), &[0.95]).unwrap()
    };
    let (x, y) = (pooled(&base), pooled(&swapped));
    let worst = x
        .iter()
        .zip(&y)
        .map(|(p, q)| (p.mean - q.mean).abs() / p.mcse.max(q.mcse))
        .fold(0.0f64, f64::max);
    check(identical && worst < 3.0, format!("repeated fit byte-identical: {identical}; seed swap max |diff|/MCSE {worst:.3}"))
}

fn variance_ratio_semantics() -> Outcome {
    let (data, spec, chains) = benchmark_fit(10)?;
    let plug_in = plug_in_variance_ratio(&chains, &spec).map_err(|e| e.to_string())?;
    let draws = monitored_draws(&chains, &spec, &data.site_ids()).map_err(|e| e.to_string())?;
    let s = summarize(&draws, &[0.95]).map_err(|e| e.to_string())?;
    let ratio = s.iter().find(|x| x.name == "variance_ratio").ok_or("no variance_ratio row")?;
    let sal = s.iter().find(|x| x.name == "alpha_salinity").ok_or("no alpha_salinity row")?;
    check(
        ratio.mean < plug_in && ratio.median < plug_in,
        format!(
            "per-draw mean {:.4}, median {:.4} vs plug-in {plug_in:.4} (alpha_salinity 95% CI [{:.3}, {:.3}])",
            ratio.mean, ratio.median, sal.intervals[0].lower, sal.intervals[0].upper
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("link round trip", link_round_trip),
        ("joint posterior oracle", posterior_oracle),
        ("conditional conjugacy", conditional_conjugacy),
        ("coefficient recovery", recovery),
        ("two-level trumping", trumping),
        ("BGR statistic", bgr),
        ("DIC", dic_checks),
        ("health CI overlap", overlap),
        ("determinism", determinism),
        ("variance ratio semantics", variance_ratio_semantics),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n:>2} PASS  {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
