use super::summary::CredibleInterval;

/// Posterior summary of one site's latent health.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteHealth {
    pub site_id: u32,
    pub mean: f64,
    pub interval: CredibleInterval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedSite {
    pub rank: usize,
    pub site: SiteHealth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    /// Healthiest first; rank 1 has the highest posterior mean.
    pub order: Vec<RankedSite>,
    /// Site pairs whose intervals do not overlap, as `(higher, lower)`.
    pub distinguishable: Vec<(u32, u32)>,
}

impl RankingReport {
    pub fn all_overlap(&self) -> bool {
        self.distinguishable.is_empty()
    }
}

/// Orders sites by posterior mean health, ties broken by ascending site id,
/// and lists every pair with disjoint intervals.
pub fn rank_sites(sites: &[SiteHealth]) -> RankingReport {
    let mut sorted = sites.to_vec();
    sorted.sort_by(|a, b| b.mean.total_cmp(&a.mean).then(a.site_id.cmp(&b.site_id)));
    let order: Vec<RankedSite> = sorted.iter().enumerate().map(|(i, &site)| RankedSite { rank: i + 1, site }).collect();
    let mut distinguishable = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if !a.interval.overlaps(&b.interval) {
                distinguishable.push((a.site_id, b.site_id));
            }
        }
    }
    RankingReport { order, distinguishable }
}
