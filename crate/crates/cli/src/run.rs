use std::path::{Path, PathBuf};

use lhfi::covariates::{compute_dd, CovariateTable, SiteGeometry};
use lhfi::diagnostics::{
    bgr_statistic, monitored_draws, model_dic, plug_in_variance_ratio, rank_sites, summarize, Dic, ParameterDraws,
    PosteriorSummary, RankingReport, SiteHealth,
};
use lhfi::model::{ModelData, ModelSpec};
use lhfi::sampler::{run_chains, ChainOutput, ProgressEvent, ProgressSink};
use lhfi::synth::{generate, SynthDataset, SynthDesign};
use log::{debug, info, warn};

use crate::config::{Preset, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::{read_counts, read_covariates, read_geometry, CovariateRows, COUNT_COLUMNS};
use crate::output::{csv_text, fmt, StagedOutput};

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default)]
pub struct FitOverrides {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summaries: Vec<PosteriorSummary>,
    pub dic: Dic,
    pub ranking: RankingReport,
}

struct LogProgress;

impl ProgressSink for LogProgress {
    fn report(&self, event: &ProgressEvent<'_>) {
        let rates: Vec<String> =
            event.acceptance.iter().map(|a| format!("{}={:.2}", a.block.name(), a.rate())).collect();
        debug!("chain {} iteration {}/{}: {}", event.chain_id, event.iteration, event.n_iterations, rates.join(" "));
    }
}

/// Covariate table with DD derived from geometry when configured, then
/// log-transformed and centred.
pub fn engineer(config: &RunConfig, rows: CovariateRows, geometry: Option<&[SiteGeometry]>) -> Result<CovariateTable> {
    const STAGE: &str = "engineer";
    let fail = |e: lhfi::LhfiError| CliError::validation(STAGE, e.to_string());
    let mut table = CovariateTable::new(rows.site_ids.clone()).map_err(fail)?;
    for (name, values) in rows.columns {
        table.add_raw(&name, values).map_err(fail)?;
    }
    if let (Some(geom), Some(w), Some(e)) = (geometry, config.west_anchor, config.east_anchor) {
        if table.column(&config.dd_column).is_some() {
            return Err(CliError::validation(
                STAGE,
                format!("'{}' is present in the covariates and would also be derived from geometry", config.dd_column),
            ));
        }
        let dd = compute_dd(geom, w, e).map_err(fail)?;
        let values = rows
            .site_ids
            .iter()
            .map(|id| {
                dd.iter()
                    .find(|(s, _)| s == id)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| CliError::validation(STAGE, format!("site {id} has no geometry row")))
            })
            .collect::<Result<Vec<_>>>()?;
        table.add_raw(&config.dd_column, values).map_err(fail)?;
    }
    table.engineer(&[]).map_err(fail)?;
    Ok(table)
}

fn level_label(level: f64) -> String {
    fmt((level * 1000.0).round() / 10.0)
}

fn summary_csv(summaries: &[PosteriorSummary], levels: &[f64]) -> Result<Vec<u8>> {
    let mut header: Vec<String> =
        ["name", "mean", "median", "sd", "q2.5", "q97.5", "rhat", "ess", "mcse"].map(String::from).to_vec();
    header.extend(levels.iter().map(|l| format!("credible_{}", level_label(*l))));
    let rows = summaries.iter().map(|s| {
        let ci = s.interval(0.95).expect("0.95 always summarised");
        let mut row = vec![
            s.name.clone(),
            fmt(s.mean),
            fmt(s.median),
            fmt(s.sd),
            fmt(ci.lower),
            fmt(ci.upper),
            s.rhat.map(fmt).unwrap_or_default(),
            fmt(s.ess),
            fmt(s.mcse),
        ];
        row.extend(levels.iter().map(|l| s.interval(*l).map(|c| c.is_credible()).unwrap_or(false).to_string()));
        row
    });
    csv_text(&header.iter().map(String::as_str).collect::<Vec<_>>(), rows)
}

fn health_csv(ranking: &RankingReport) -> Result<Vec<u8>> {
    let rows = ranking.order.iter().map(|r| {
        let others: Vec<String> = ranking
            .distinguishable
            .iter()
            .filter_map(|&(a, b)| {
                if a == r.site.site_id {
                    Some(b.to_string())
                } else if b == r.site.site_id {
                    Some(a.to_string())
                } else {
                    None
                }
            })
            .collect();
        vec![
            r.rank.to_string(),
            r.site.site_id.to_string(),
            fmt(r.site.mean),
            fmt(r.site.interval.lower),
            fmt(r.site.interval.upper),
            others.join(";"),
        ]
    });
    csv_text(&["rank", "site", "score", "lower_95", "upper_95", "distinguishable_from"], rows)
}

fn dic_text(d: &Dic) -> String {
    format!(
        "dic = {}\np_d = {}\nmean_deviance = {}\ndeviance_at_mean = {}\n",
        fmt(d.dic),
        fmt(d.p_d),
        fmt(d.mean_deviance),
        fmt(d.deviance_at_mean)
    )
}

fn bgr_csv(draws: &[ParameterDraws]) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for p in draws {
        let chains: Vec<&[f64]> = p.chains.iter().map(Vec::as_slice).collect();
        match bgr_statistic(&chains) {
            Ok(r) => {
                for i in 0..r.curves.prefix.len() {
                    rows.push(vec![
                        p.name.clone(),
                        r.curves.prefix[i].to_string(),
                        fmt(r.curves.pooled[i]),
                        fmt(r.curves.within[i]),
                        fmt(r.curves.ratio[i]),
                    ]);
                }
            }
            Err(e) => debug!("no BGR curve for {}: {e}", p.name),
        }
    }
    csv_text(&["parameter", "prefix", "pooled_width", "within_width", "ratio"], rows)
}

fn trace_csv(chains: &[ChainOutput], draws: &[ParameterDraws]) -> Result<Vec<u8>> {
    let mut header = vec!["chain", "draw", "deviance"];
    header.extend(draws.iter().map(|p| p.name.as_str()));
    let mut rows = Vec::new();
    for (c, chain) in chains.iter().enumerate() {
        for (k, dev) in chain.deviance.iter().enumerate() {
            let mut row = vec![chain.chain_id.to_string(), (k + 1).to_string(), fmt(*dev)];
            row.extend(draws.iter().map(|p| fmt(p.chains[c][k])));
            rows.push(row);
        }
    }
    csv_text(&header, rows)
}

fn summary_levels(levels: &[f64]) -> Vec<f64> {
    let mut all = levels.to_vec();
    if !all.iter().any(|l| (l - 0.95).abs() < 1e-12) {
        all.push(0.95);
    }
    all
}

/// Loads data, fits the configured model and writes every result table.
pub fn fit(mut config: RunConfig, overrides: &FitOverrides) -> Result<FitOutcome> {
    if let Some(p) = overrides.preset {
        p.apply(&mut config);
    }
    if let Some(s) = overrides.seed {
        config.seed = Some(s);
    }
    if let Some(o) = &overrides.out {
        config.out = Some(o.clone());
    }
    config.validate()?;
    let out_dir = config.out.clone().ok_or_else(|| CliError::validation("config", "no output directory (set 'out' or pass --out)"))?;
    let spec = config.model_spec()?;
    let sampler = config.sampler_config()?;

    info!("reading {}", config.counts.display());
    let observations = read_counts(&config.counts, &spec.grouping)?;
    let rows = read_covariates(&config.covariates)?;
    let geometry = config.geometry.as_deref().map(read_geometry).transpose()?;
    let table = engineer(&config, rows, geometry.as_deref())?;
    let data = ModelData::assemble(&observations, &table, &spec)
        .map_err(|e| CliError::validation("engineer", e.to_string()))?;
    info!("{} sites, {} observations; {} chains x {} iterations", data.n_sites(), observations.len(), sampler.n_chains, sampler.n_iterations);

    let chains = run_chains(&data, &spec, &sampler, &LogProgress).map_err(|e| CliError::from_model("sample", e))?;
    for c in &chains {
        let rates: Vec<String> = c.acceptance.iter().map(|a| format!("{}={:.2}", a.block.name(), a.rate())).collect();
        info!("chain {} acceptance: {}", c.chain_id, rates.join(" "));
    }

    let summarise = |e| CliError::from_model("summarise", e);
    let site_ids = data.site_ids();
    let draws = monitored_draws(&chains, &spec, &site_ids).map_err(summarise)?;
    let summaries = summarize(&draws, &summary_levels(&config.levels)).map_err(summarise)?;
    let dic = model_dic(&chains, &data).map_err(summarise)?;
    let health: Vec<SiteHealth> = site_ids
        .iter()
        .map(|&id| {
            let label = lhfi::diagnostics::health_label(id);
            let s = summaries.iter().find(|s| s.name == label).expect("every site is monitored");
            SiteHealth { site_id: id, mean: s.mean, interval: *s.interval(0.95).expect("0.95 summarised") }
        })
        .collect();
    let ranking = rank_sites(&health);
    if spec.regression.is_two_level() {
        match plug_in_variance_ratio(&chains, &spec) {
            Ok(r) => info!("variance ratio at posterior means: {r:.4}"),
            Err(e) => warn!("variance ratio at posterior means unavailable: {e}"),
        }
    }
    if let Some(worst) = summaries.iter().filter_map(|s| s.rhat.map(|r| (r, &s.name))).max_by(|a, b| a.0.total_cmp(&b.0)) {
        info!("largest BGR statistic {:.3} ({})", worst.0, worst.1);
    }

    let mut out = StagedOutput::new(&out_dir)?;
    out.write("summary.csv", summary_csv(&summaries, &config.levels)?)?;
    out.write("health.csv", health_csv(&ranking)?)?;
    out.write("dic.txt", dic_text(&dic))?;
    let centring = table.centring_constants().into_iter().map(|(n, c)| vec![n, fmt(c)]);
    out.write("centring.csv", csv_text(&["column", "constant"], centring)?)?;
    if config.plot_data {
        out.write("bgr.csv", bgr_csv(&draws)?)?;
        out.write("trace.csv", trace_csv(&chains, &draws)?)?;
    }
    let files = out.commit()?;
    info!("wrote {} files to {}", files.len(), out_dir.display());
    Ok(FitOutcome { out_dir, files, summaries, dic, ranking })
}

pub fn fit_from_file(config: &Path, overrides: &FitOverrides) -> Result<FitOutcome> {
    fit(RunConfig::load(config)?, overrides)
}

/// Writes a simulated dataset in the input formats `fit` reads, together
/// with the true parameters and a ready-to-run configuration.
pub fn simulate(design_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(design_path).map_err(|e| CliError::io("simulate", design_path, e))?;
    let design: SynthDesign =
        serde_json::from_str(&text).map_err(|e| CliError::validation("simulate", format!("{}: {e}", design_path.display())))?;
    write_simulation(&design, out_dir)
}

pub fn write_simulation(design: &SynthDesign, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let data = generate(design).map_err(|e| CliError::validation("simulate", e.to_string()))?;
    let files = dataset_files(design, &data)?;
    let mut out = StagedOutput::new(out_dir)?;
    for (name, contents) in files {
        out.write(name, contents)?;
    }
    out.commit()
}

fn dataset_files(design: &SynthDesign, data: &SynthDataset) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let reg = &design.spec.regression;
    let counts = data.observations.iter().map(|o| {
        let mut row = vec![o.site_id.to_string(), o.replicate_id.to_string()];
        row.extend(o.counts.iter().map(u32::to_string));
        row.push(o.cardinality.to_string());
        row
    });
    let mut files = vec![("counts.csv", csv_text(&COUNT_COLUMNS, counts)?)];

    // DD is shipped as geometry when its extreme sites are distinct points.
    let anchors = (!data.geometry.is_empty())
        .then(|| {
            let by = |a: &&SiteGeometry, b: &&SiteGeometry| a.easting.total_cmp(&b.easting);
            let west = data.geometry.iter().min_by(by)?;
            let east = data.geometry.iter().max_by(by)?;
            (west.easting < east.easting).then_some((west.site_id, east.site_id))
        })
        .flatten();
    let columns: Vec<&(String, Vec<f64>)> =
        data.raw_covariates.iter().filter(|(n, _)| anchors.is_none() || *n != reg.dd).collect();
    let mut header = vec!["site"];
    header.extend(columns.iter().map(|(n, _)| n.as_str()));
    let ids = data.table.site_ids();
    let rows = ids.iter().enumerate().map(|(i, id)| {
        let mut row = vec![id.to_string()];
        row.extend(columns.iter().map(|(_, v)| fmt(v[i])));
        row
    });
    files.push(("covariates.csv", csv_text(&header, rows)?));
    if anchors.is_some() {
        let rows = data.geometry.iter().map(|g| vec![g.site_id.to_string(), fmt(g.easting), fmt(g.northing)]);
        files.push(("geometry.csv", csv_text(&["site", "easting", "northing"], rows)?));
    }

    let t = &data.truth;
    let truth = serde_json::json!({
        "intercept": t.intercept,
        "coefficients": reg.covariates.iter().zip(&t.coefficients).map(|(n, c)| (n.clone(), *c)).collect::<std::collections::BTreeMap<_, _>>(),
        "dd_slope": t.dd_slope,
        "group_effect": t.group_effect,
        "health_var": t.health_var,
        "salinity_var": t.salinity_var,
        "metric_effects": t.metric_effects,
        "metric_cov": design.truth.metric_cov,
        "offset": t.offset,
        "coef_correlation": t.coef_correlation,
        "health": ids.iter().zip(&t.health).map(|(id, h)| (id.to_string(), *h)).collect::<std::collections::BTreeMap<_, _>>(),
    });
    files.push(("truth.json", pretty(&truth)?));

    let mut config = RunConfig::minimal("counts.csv".into(), "covariates.csv".into());
    config.out = Some("fit".into());
    apply_spec(&mut config, &design.spec);
    if let Some((w, e)) = anchors {
        config.geometry = Some("geometry.csv".into());
        config.west_anchor = Some(w);
        config.east_anchor = Some(e);
    }
    config.seed = Some(design.seed);
    files.push(("config.json", pretty(&config)?));
    Ok(files)
}

fn apply_spec(config: &mut RunConfig, spec: &ModelSpec) {
    let reg = &spec.regression;
    config.health_covariates = reg.covariates.clone();
    config.level = reg.level;
    config.correlated = reg.is_correlated();
    config.covariance = spec.covariance;
    config.salinity_column = reg.salinity.clone();
    config.dd_column = reg.dd.clone();
    config.positive_metrics = spec.grouping.positive_metrics().to_vec();
    config.negative_metrics = spec.grouping.negative_metrics().to_vec();
}

fn pretty<T: serde::Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| CliError::validation("simulate", e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

/// `site,dd` rows for every site in the geometry file.
pub fn dd_table(geometry: &Path, west: u32, east: u32) -> Result<String> {
    let geom = read_geometry(geometry)?;
    let dd = compute_dd(&geom, west, east).map_err(|e| CliError::validation("dd", e.to_string()))?;
    let bytes = csv_text(&["site", "dd"], dd.into_iter().map(|(s, v)| vec![s.to_string(), fmt(v)]))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
