//! Convergence diagnostics, posterior summaries, DIC and site ranking.

mod bgr;
mod dic;
mod monitored;
mod quantile;
mod ranking;
mod summary;

pub use bgr::{bgr_statistic, BgrCurves, BgrResult, BGR_MIN_DRAWS};
pub use dic::{dic, model_dic, posterior_mean_state, Dic};
pub use monitored::{coefficient_label, health_label, monitored_draws, monitored_quantities, plug_in_variance_ratio};
pub use quantile::{ecdf_quantile_sorted, quantile_sorted};
pub use ranking::{rank_sites, RankedSite, RankingReport, SiteHealth};
pub use summary::{
    credible_interval, effective_sample_size, summarize, CredibleInterval, ParameterDraws, PosteriorSummary,
    DEFAULT_LEVELS,
};
