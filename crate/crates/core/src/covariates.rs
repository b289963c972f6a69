//! Covariate ingestion and engineering.
//!
//! Raw site covariates are turned into model covariates by log transforms,
//! centring on a recorded constant, and products of centred columns. The
//! centring constants are kept so the same transform can be applied to new
//! sites at prediction time.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{LhfiError, Result};

/// Planar site coordinates in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteGeometry {
    pub site_id: u32,
    pub easting: f64,
    pub northing: f64,
}

/// Distance downstream: the signed scalar projection of each site onto the
/// line from the west anchor towards the east anchor, measured from the
/// west anchor.
pub fn compute_dd(geometry: &[SiteGeometry], west_anchor: u32, east_anchor: u32) -> Result<Vec<(u32, f64)>> {
    let find = |id: u32| {
        geometry
            .iter()
            .find(|g| g.site_id == id)
            .ok_or_else(|| LhfiError::invalid(format!("anchor site {id} not in geometry")))
    };
    if let Some(g) = geometry.iter().find(|g| !g.easting.is_finite() || !g.northing.is_finite()) {
        return Err(LhfiError::invalid(format!("site {} has non-finite coordinates", g.site_id)));
    }
    let west = find(west_anchor)?;
    let east = find(east_anchor)?;
    let (dx, dy) = (east.easting - west.easting, east.northing - west.northing);
    let span = dx.hypot(dy);
    if west_anchor == east_anchor || span == 0.0 {
        return Err(LhfiError::invalid(format!(
            "anchors {west_anchor} and {east_anchor} must be distinct points"
        )));
    }
    let (ux, uy) = (dx / span, dy / span);
    Ok(geometry
        .iter()
        .map(|g| (g.site_id, (g.easting - west.easting) * ux + (g.northing - west.northing) * uy))
        .collect())
}

/// Subtracts `constant` (the exact mean when `None`) from every value.
pub fn center(column: &[f64], constant: Option<f64>) -> Result<(Vec<f64>, f64)> {
    if column.is_empty() {
        return Err(LhfiError::invalid("cannot centre an empty column"));
    }
    let c = constant.unwrap_or_else(|| column.iter().sum::<f64>() / column.len() as f64);
    Ok((column.iter().map(|v| v - c).collect(), c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnKind {
    Raw,
    Centred { constant: f64 },
    /// Product of two centred columns; not itself re-centred.
    Interaction { left: String, right: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    pub kind: ColumnKind,
}

impl Column {
    pub fn is_centred(&self) -> bool {
        matches!(self.kind, ColumnKind::Centred { .. })
    }
}

/// Elementwise product of two centred columns.
pub fn interaction(a: &Column, b: &Column) -> Result<Vec<f64>> {
    for c in [a, b] {
        if !c.is_centred() {
            return Err(LhfiError::invalid(format!(
                "interaction requires centred columns, '{}' is not centred",
                c.name
            )));
        }
    }
    if a.values.len() != b.values.len() {
        return Err(LhfiError::invalid("interaction columns differ in length"));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect())
}

/// Pearson correlation matrix with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[(i, j)])
    }
}

pub fn correlation_matrix(columns: &[(&str, &[f64])]) -> Result<CorrelationMatrix> {
    let n = columns.first().map_or(0, |c| c.1.len());
    if n < 2 {
        return Err(LhfiError::invalid("correlation needs at least 2 observations per column"));
    }
    let mut standardized = Vec::with_capacity(columns.len());
    for &(name, values) in columns {
        if values.len() != n {
            return Err(LhfiError::invalid(format!("column '{name}' has {} values, expected {n}", values.len())));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        if !(ss > 0.0) {
            return Err(LhfiError::DegenerateInput(format!("column '{name}' has zero variance")));
        }
        let scale = ss.sqrt();
        standardized.push(values.iter().map(|v| (v - mean) / scale).collect::<Vec<_>>());
    }
    let k = columns.len();
    let mut m = DMatrix::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let r: f64 = standardized[i].iter().zip(&standardized[j]).map(|(a, b)| a * b).sum();
            let r = r.clamp(-1.0, 1.0);
            m[(i, j)] = r;
            m[(j, i)] = r;
        }
    }
    Ok(CorrelationMatrix { names: columns.iter().map(|c| c.0.to_string()).collect(), values: m })
}

/// Per-site covariate columns, row-aligned with `site_ids`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CovariateTable {
    site_ids: Vec<u32>,
    columns: Vec<Column>,
}

impl CovariateTable {
    pub fn new(site_ids: Vec<u32>) -> Result<Self> {
        for (i, id) in site_ids.iter().enumerate() {
            if site_ids[..i].contains(id) {
                return Err(LhfiError::invalid(format!("site {id} appears twice in the covariate table")));
            }
        }
        Ok(Self { site_ids, columns: Vec::new() })
    }

    pub fn site_ids(&self) -> &[u32] {
        &self.site_ids
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    fn push(&mut self, column: Column) -> Result<()> {
        if column.values.len() != self.site_ids.len() {
            return Err(LhfiError::invalid(format!(
                "column '{}' has {} values for {} sites",
                column.name,
                column.values.len(),
                self.site_ids.len()
            )));
        }
        if self.column(&column.name).is_some() {
            return Err(LhfiError::invalid(format!("column '{}' already exists", column.name)));
        }
        if let Some(v) = column.values.iter().find(|v| !v.is_finite()) {
            return Err(LhfiError::invalid(format!("column '{}' contains non-finite value {v}", column.name)));
        }
        self.columns.push(column);
        Ok(())
    }

    /// Adds an untransformed column. Silt-clay fractions (`sc`) must lie in
    /// (0, 1] and depths (`depth`) must be positive.
    pub fn add_raw(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        for (row, &v) in values.iter().enumerate() {
            let site = self.site_ids.get(row).copied().unwrap_or_default();
            match name {
                "sc" if !(v > 0.0 && v <= 1.0) => {
                    return Err(LhfiError::invalid(format!("site {site}: sc = {v} outside (0, 1]")));
                }
                "depth" if !(v > 0.0) => {
                    return Err(LhfiError::invalid(format!("site {site}: depth = {v} must be positive")));
                }
                _ => {}
            }
        }
        self.push(Column { name: name.to_string(), values, kind: ColumnKind::Raw })
    }

    /// Adds `name = ln(source)` as a raw column.
    pub fn add_log(&mut self, source: &str, name: &str) -> Result<()> {
        let col = self.raw_column(source)?;
        if let Some((row, v)) = col.values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(LhfiError::invalid(format!(
                "site {}: cannot take log of {source} = {v}",
                self.site_ids[row]
            )));
        }
        let values = col.values.iter().map(|v| v.ln()).collect();
        self.push(Column { name: name.to_string(), values, kind: ColumnKind::Raw })
    }

    fn raw_column(&self, name: &str) -> Result<&Column> {
        let col = self.column(name).ok_or_else(|| LhfiError::invalid(format!("no column '{name}'")))?;
        if col.kind != ColumnKind::Raw {
            return Err(LhfiError::invalid(format!("column '{name}' is already transformed")));
        }
        Ok(col)
    }

    /// Centres a raw column in place and returns the constant used.
    pub fn centre_column(&mut self, name: &str, constant: Option<f64>) -> Result<f64> {
        let (values, c) = center(&self.raw_column(name)?.values, constant)?;
        let col = self.columns.iter_mut().find(|c| c.name == name).expect("column checked above");
        col.values = values;
        col.kind = ColumnKind::Centred { constant: c };
        Ok(c)
    }

    /// Adds the centred interaction `left:right` and returns its name.
    pub fn add_interaction(&mut self, left: &str, right: &str) -> Result<String> {
        let a = self.column(left).ok_or_else(|| LhfiError::invalid(format!("no column '{left}'")))?;
        let b = self.column(right).ok_or_else(|| LhfiError::invalid(format!("no column '{right}'")))?;
        let values = interaction(a, b)?;
        let name = format!("{left}:{right}");
        self.push(Column {
            name: name.clone(),
            values,
            kind: ColumnKind::Interaction { left: left.into(), right: right.into() },
        })?;
        Ok(name)
    }

    /// Standard engineering: log transforms of `depth` and `sc`, then every
    /// raw column centred on its exact mean (or on a supplied constant).
    pub fn engineer(&mut self, constants: &[(String, f64)]) -> Result<()> {
        if self.column("depth").is_some() && self.column("log_depth").is_none() {
            self.add_log("depth", "log_depth")?;
        }
        if self.column("sc").is_some() && self.column("log_sc").is_none() {
            self.add_log("sc", "log_sc")?;
        }
        let raw: Vec<String> =
            self.columns.iter().filter(|c| c.kind == ColumnKind::Raw).map(|c| c.name.clone()).collect();
        for name in raw {
            let supplied = constants.iter().find(|(n, _)| *n == name).map(|(_, c)| *c);
            self.centre_column(&name, supplied)?;
        }
        Ok(())
    }

    /// Column usable as a model covariate (centred or a centred
    /// interaction). Interactions named `a:b` are derived on demand.
    pub fn model_column(&self, name: &str) -> Result<Vec<f64>> {
        if let Some(col) = self.column(name) {
            return match col.kind {
                ColumnKind::Raw => Err(LhfiError::invalid(format!("covariate '{name}' has not been centred"))),
                _ => Ok(col.values.clone()),
            };
        }
        if let Some((l, r)) = name.split_once(':') {
            let a = self.column(l).ok_or_else(|| LhfiError::invalid(format!("no column '{l}'")))?;
            let b = self.column(r).ok_or_else(|| LhfiError::invalid(format!("no column '{r}'")))?;
            return interaction(a, b);
        }
        Err(LhfiError::invalid(format!("unknown covariate '{name}'")))
    }

    pub fn centring_constants(&self) -> Vec<(String, f64)> {
        self.columns
            .iter()
            .filter_map(|c| match c.kind {
                ColumnKind::Centred { constant } => Some((c.name.clone(), constant)),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn geo(id: u32, e: f64, n: f64) -> SiteGeometry {
        SiteGeometry { site_id: id, easting: e, northing: n }
    }

    #[test]
    fn dd_examples() {
        let g = [geo(1, 0.0, 0.0), geo(2, 10.0, 0.0), geo(3, 3.0, 4.0)];
        let dd = compute_dd(&g, 1, 2).unwrap();
        assert_eq!(dd[0], (1, 0.0));
        assert_abs_diff_eq!(dd[1].1, 10.0);
        assert_abs_diff_eq!(dd[2].1, 3.0);

        let g = [geo(1, 0.0, 0.0), geo(2, 6.0, 8.0), geo(3, 3.0, 4.0)];
        let dd = compute_dd(&g, 1, 2).unwrap();
        assert_abs_diff_eq!(dd[2].1, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dd[1].1, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn dd_west_of_anchor_is_negative() {
        let g = [geo(1, 0.0, 0.0), geo(2, 10.0, 0.0), geo(3, -2.0, 1.0)];
        assert_abs_diff_eq!(compute_dd(&g, 1, 2).unwrap()[2].1, -2.0);
    }

    #[test]
    fn dd_rejects_coincident_anchors() {
        let g = [geo(1, 1.0, 1.0), geo(2, 1.0, 1.0)];
        assert!(compute_dd(&g, 1, 2).is_err());
        assert!(compute_dd(&g, 1, 1).is_err());
        assert!(compute_dd(&g, 1, 9).is_err());
    }

    #[test]
    fn centring_examples() {
        assert_eq!(center(&[1.0, 2.0, 3.0], None).unwrap(), (vec![-1.0, 0.0, 1.0], 2.0));
        assert_eq!(center(&[5.0, 5.0, 5.0], None).unwrap(), (vec![0.0, 0.0, 0.0], 5.0));
        assert_eq!(center(&[1.0, 2.0, 3.0], Some(2.0)).unwrap(), (vec![-1.0, 0.0, 1.0], 2.0));
        assert!(center(&[], None).is_err());
    }

    #[test]
    fn interaction_examples() {
        let c = |name: &str, v: &[f64]| Column {
            name: name.into(),
            values: v.to_vec(),
            kind: ColumnKind::Centred { constant: 0.0 },
        };
        assert_eq!(interaction(&c("a", &[0.0, 0.0]), &c("b", &[3.0, 4.0])).unwrap(), vec![0.0, 0.0]);
        assert_eq!(interaction(&c("a", &[-1.0, 1.0]), &c("b", &[-1.0, 1.0])).unwrap(), vec![1.0, 1.0]);
        assert_eq!(
            interaction(&c("a", &[-1.0, 0.0, 1.0]), &c("b", &[2.0, -1.0, -1.0])).unwrap(),
            vec![-2.0, 0.0, -1.0]
        );
        let raw = Column { kind: ColumnKind::Raw, ..c("r", &[1.0, 2.0]) };
        assert!(interaction(&raw, &c("b", &[1.0, 2.0])).is_err());
    }

    #[test]
    fn correlation_examples() {
        let r = correlation_matrix(&[("a", &[1.0, 2.0, 3.0]), ("b", &[2.0, 4.0, 6.0]), ("c", &[3.0, 2.0, 1.0])])
            .unwrap();
        assert_abs_diff_eq!(r.get("a", "a").unwrap(), 1.0);
        assert_abs_diff_eq!(r.get("a", "b").unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.get("a", "c").unwrap(), -1.0, epsilon = 1e-12);
        let err = correlation_matrix(&[("a", &[1.0, 2.0]), ("flat", &[3.0, 3.0])]).unwrap_err();
        assert!(matches!(err, LhfiError::DegenerateInput(ref m) if m.contains("flat")));
    }

    #[test]
    fn correlation_hand_dataset() {
        // Hand Pearson: DD=(0,1,2,3), sal=(0,2,3,5), depth=(1,1,2,1).
        // DD dev (-1.5,-.5,.5,1.5), ss 5; sal dev (-2.5,-.5,.5,2.5), ss 13;
        // depth dev (-.25,-.25,.75,-.25), ss .75.
        let dd_sal = 8.0 / (5.0f64 * 13.0).sqrt();
        let dd_depth = 0.5 / (5.0f64 * 0.75).sqrt();
        let sal_depth = 0.5 / (13.0f64 * 0.75).sqrt();
        let r = correlation_matrix(&[
            ("dd", &[0.0, 1.0, 2.0, 3.0]),
            ("sal", &[0.0, 2.0, 3.0, 5.0]),
            ("depth", &[1.0, 1.0, 2.0, 1.0]),
        ])
        .unwrap();
        assert_abs_diff_eq!(r.get("dd", "sal").unwrap(), dd_sal, epsilon = 1e-12);
        assert_abs_diff_eq!(r.get("dd", "sal").unwrap(), 0.9922, epsilon = 1e-4);
        assert_abs_diff_eq!(r.get("dd", "depth").unwrap(), dd_depth, epsilon = 1e-12);
        assert_abs_diff_eq!(r.get("sal", "depth").unwrap(), sal_depth, epsilon = 1e-12);
    }

    #[test]
    fn table_engineering() {
        let mut t = CovariateTable::new(vec![1, 2, 3]).unwrap();
        t.add_raw("salinity", vec![20.0, 24.0, 28.0]).unwrap();
        t.add_raw("depth", vec![1.0, 2.0, 4.0]).unwrap();
        t.add_raw("sc", vec![0.1, 0.2, 0.4]).unwrap();
        t.engineer(&[]).unwrap();
        assert_eq!(t.model_column("salinity").unwrap(), vec![-4.0, 0.0, 4.0]);
        let ld = t.model_column("log_depth").unwrap();
        assert_abs_diff_eq!(ld.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        let inter = t.model_column("log_depth:log_sc").unwrap();
        let ls = t.model_column("log_sc").unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(inter[i], ld[i] * ls[i]);
        }
        let consts = t.centring_constants();
        assert!(consts.iter().any(|(n, c)| n == "salinity" && *c == 24.0));
        assert!(t.model_column("temperature").is_err());
    }

    #[test]
    fn table_validation() {
        let mut t = CovariateTable::new(vec![1, 2]).unwrap();
        assert!(t.add_raw("sc", vec![0.5, 1.5]).is_err());
        assert!(t.add_raw("depth", vec![0.0, 1.0]).is_err());
        assert!(t.add_raw("x", vec![1.0]).is_err());
        assert!(CovariateTable::new(vec![1, 1]).is_err());
        t.add_raw("x", vec![1.0, 2.0]).unwrap();
        assert!(t.model_column("x").is_err());
    }

    proptest! {
        #[test]
        fn dd_rigid_motion_invariant(
            pts in proptest::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 3..8),
            angle in 0.0..std::f64::consts::TAU,
            tx in -100.0..100.0f64, ty in -100.0..100.0f64,
        ) {
            let g: Vec<_> = pts.iter().enumerate().map(|(i, &(e, n))| geo(i as u32, e, n)).collect();
            prop_assume!((g[0].easting - g[1].easting).hypot(g[0].northing - g[1].northing) > 1e-3);
            let (s, c) = angle.sin_cos();
            let moved: Vec<_> = g.iter().map(|p| geo(p.site_id, c * p.easting - s * p.northing + tx, s * p.easting + c * p.northing + ty)).collect();
            let a = compute_dd(&g, 0, 1).unwrap();
            let b = compute_dd(&moved, 0, 1).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.1 - y.1).abs() < 1e-9);
            }
            let span = (g[0].easting - g[1].easting).hypot(g[0].northing - g[1].northing);
            prop_assert!((a[1].1 - span).abs() < 1e-9);
        }

        #[test]
        fn centring_zero_mean_and_idempotent(v in proptest::collection::vec(-1e3..1e3f64, 1..40)) {
            let (c, k) = center(&v, None).unwrap();
            prop_assert!((c.iter().sum::<f64>() / c.len() as f64).abs() < 1e-9);
            let (again, _) = center(&v, Some(k)).unwrap();
            prop_assert_eq!(c, again);
        }

        #[test]
        fn correlation_is_psd(cols in proptest::collection::vec(proptest::collection::vec(-10.0..10.0f64, 6), 2..5)) {
            let named: Vec<(String, Vec<f64>)> = cols.into_iter().enumerate().map(|(i, c)| (format!("c{i}"), c)).collect();
            let refs: Vec<(&str, &[f64])> = named.iter().map(|(n, c)| (n.as_str(), c.as_slice())).collect();
            if let Ok(r) = correlation_matrix(&refs) {
                prop_assert!(r.values.clone().symmetric_eigenvalues().iter().all(|&e| e > -1e-9));
                for i in 0..refs.len() {
                    prop_assert_eq!(r.values[(i, i)], 1.0);
                    for j in 0..refs.len() {
                        prop_assert_eq!(r.values[(i, j)], r.values[(j, i)]);
                    }
                }
            }
        }
    }
}
