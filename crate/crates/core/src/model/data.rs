use std::collections::{BTreeMap, BTreeSet};

use super::grouping::{MetricGrouping, N_METRICS};
use super::likelihood::{log_multinomial_coefficient, SiteObservation};
use super::spec::ModelSpec;
use crate::covariates::CovariateTable;
use crate::{LhfiError, Result};

/// Per-site sufficient statistics of both multinomials, pooled over
/// replicates, in canonical metric order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SiteStats {
    pub positive_totals: [f64; 2],
    pub negative_totals: [f64; 3],
    pub cardinality: f64,
    /// Sum over replicates of both groups' log multinomial coefficients.
    pub log_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteData {
    pub site_id: u32,
    pub replicates: Vec<SiteObservation>,
    /// Replicate counts reordered to canonical metric order.
    pub canonical_counts: Vec<[u32; N_METRICS]>,
    /// Centred health covariates aligned with the spec.
    pub covariates: Vec<f64>,
    /// Centred salinity and DD, present for two-level models.
    pub salinity: Option<f64>,
    pub dd: Option<f64>,
    pub stats: SiteStats,
}

impl SiteData {
    pub fn new(
        site_id: u32,
        replicates: Vec<SiteObservation>,
        covariates: Vec<f64>,
        upstream: Option<(f64, f64)>,
        grouping: &MetricGrouping,
    ) -> Result<Self> {
        let mut stats = SiteStats::default();
        let mut canonical_counts = Vec::with_capacity(replicates.len());
        for obs in &replicates {
            obs.validate(grouping)?;
            if obs.site_id != site_id {
                return Err(LhfiError::invalid(format!(
                    "replicate {} belongs to site {}, not {site_id}",
                    obs.replicate_id, obs.site_id
                )));
            }
            let c = grouping.to_canonical(&obs.counts);
            stats.positive_totals[0] += f64::from(c[0]);
            stats.positive_totals[1] += f64::from(c[1]);
            for j in 0..3 {
                stats.negative_totals[j] += f64::from(c[2 + j]);
            }
            stats.cardinality += f64::from(obs.cardinality);
            stats.log_coefficient += log_multinomial_coefficient(&c[..2], obs.cardinality)?
                + log_multinomial_coefficient(&c[2..], obs.cardinality)?;
            canonical_counts.push(c);
        }
        if let Some(bad) = covariates.iter().find(|v| !v.is_finite()) {
            return Err(LhfiError::invalid(format!("site {site_id}: covariate value {bad} not finite")));
        }
        Ok(Self {
            site_id,
            replicates,
            canonical_counts,
            covariates,
            salinity: upstream.map(|u| u.0),
            dd: upstream.map(|u| u.1),
            stats,
        })
    }
}

/// Observations and centred covariates arranged for one [`ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub sites: Vec<SiteData>,
}

impl ModelData {
    /// Joins replicate observations to covariate rows. Sites appear in the
    /// covariate table's order; a site without observations still gets a
    /// latent health value.
    pub fn assemble(
        observations: &[SiteObservation],
        table: &CovariateTable,
        spec: &ModelSpec,
    ) -> Result<Self> {
        spec.validate()?;
        let reg = &spec.regression;
        let columns = reg
            .covariates
            .iter()
            .map(|name| table.model_column(name))
            .collect::<Result<Vec<_>>>()?;
        let upstream = if reg.is_two_level() {
            Some((table.model_column(&reg.salinity)?, table.model_column(&reg.dd)?))
        } else {
            None
        };

        let mut by_site: BTreeMap<u32, Vec<SiteObservation>> = BTreeMap::new();
        let mut keys = BTreeSet::new();
        for obs in observations {
            if !keys.insert((obs.site_id, obs.replicate_id)) {
                return Err(LhfiError::invalid(format!(
                    "duplicate observation for site {} replicate {}",
                    obs.site_id, obs.replicate_id
                )));
            }
            by_site.entry(obs.site_id).or_default().push(obs.clone());
        }
        if let Some(orphan) = by_site.keys().find(|id| !table.site_ids().contains(id)) {
            return Err(LhfiError::invalid(format!("site {orphan} has observations but no covariates")));
        }

        let sites = table
            .site_ids()
            .iter()
            .enumerate()
            .map(|(row, &id)| {
                let x = columns.iter().map(|c| c[row]).collect();
                let up = upstream.as_ref().map(|(s, d)| (s[row], d[row]));
                SiteData::new(id, by_site.remove(&id).unwrap_or_default(), x, up, &spec.grouping)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sites })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn site_ids(&self) -> Vec<u32> {
        self.sites.iter().map(|s| s.site_id).collect()
    }
}
