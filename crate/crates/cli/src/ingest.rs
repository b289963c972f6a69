//! CSV ingestion. Every error names the file, the 1-based line and, where
//! one applies, the column.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord};
use lhfi::covariates::SiteGeometry;
use lhfi::model::{MetricGrouping, SiteObservation, N_METRICS};

use crate::error::{CliError, Result};

const STAGE: &str = "ingest";

pub const COUNT_COLUMNS: [&str; 8] = ["site", "replicate", "m1", "m2", "m3", "m4", "m5", "cardinality"];

/// Raw covariate columns keyed by site, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateRows {
    pub site_ids: Vec<u32>,
    pub columns: Vec<(String, Vec<f64>)>,
}

struct Table {
    file: String,
    headers: Vec<String>,
    rows: Vec<StringRecord>,
}

impl Table {
    fn read<R: Read>(file: &str, reader: R) -> Result<Self> {
        let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| CliError::validation(STAGE, format!("{file}: cannot read header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect::<Vec<_>>();
        for (i, h) in headers.iter().enumerate() {
            if h.is_empty() {
                return Err(CliError::validation(STAGE, format!("{file}: header column {} is empty", i + 1)));
            }
            if headers[..i].contains(h) {
                return Err(CliError::validation(STAGE, format!("{file}: column '{h}' appears twice")));
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                CliError::validation(STAGE, format!("{file} line {line}: {e}"))
            })?;
            rows.push(rec);
        }
        Ok(Self { file: file.to_string(), headers, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(STAGE, format!("{}: missing column '{name}'", self.file)))
    }

    fn line(rec: &StringRecord) -> u64 {
        rec.position().map(|p| p.line()).unwrap_or(0)
    }

    fn err(&self, rec: &StringRecord, column: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::validation(STAGE, format!("{} line {}, column {column}: {msg}", self.file, Self::line(rec)))
    }

    fn parse<T: std::str::FromStr>(&self, rec: &StringRecord, idx: usize, what: &str) -> Result<T> {
        let raw = rec.get(idx).unwrap_or("");
        raw.parse().map_err(|_| self.err(rec, &self.headers[idx], format!("cannot parse '{raw}' as {what}")))
    }

    fn parse_count(&self, rec: &StringRecord, idx: usize) -> Result<u32> {
        let raw = rec.get(idx).unwrap_or("");
        match raw.parse::<i64>() {
            Ok(v) if v < 0 => Err(self.err(rec, &self.headers[idx], format!("negative count {v}"))),
            Ok(v) => u32::try_from(v).map_err(|_| self.err(rec, &self.headers[idx], format!("count {v} too large"))),
            Err(_) => Err(self.err(rec, &self.headers[idx], format!("cannot parse '{raw}' as a count"))),
        }
    }

    fn parse_real(&self, rec: &StringRecord, idx: usize) -> Result<f64> {
        let v: f64 = self.parse(rec, idx, "a number")?;
        if !v.is_finite() {
            return Err(self.err(rec, &self.headers[idx], format!("value {v} is not finite")));
        }
        Ok(v)
    }
}

/// Parses `site,replicate,m1..m5,cardinality` rows.
pub fn parse_counts<R: Read>(file: &str, reader: R, grouping: &MetricGrouping) -> Result<Vec<SiteObservation>> {
    let t = Table::read(file, reader)?;
    let idx: Vec<usize> = COUNT_COLUMNS.iter().map(|c| t.column(c)).collect::<Result<_>>()?;
    let mut seen: HashMap<(u32, u32), u64> = HashMap::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for rec in &t.rows {
        let site: u32 = t.parse(rec, idx[0], "a site id")?;
        let replicate: u32 = t.parse(rec, idx[1], "a replicate id")?;
        let mut counts = [0u32; N_METRICS];
        for (j, c) in counts.iter_mut().enumerate() {
            *c = t.parse_count(rec, idx[2 + j])?;
        }
        let cardinality = t.parse_count(rec, idx[7])?;
        let line = Table::line(rec);
        if let Some(first) = seen.insert((site, replicate), line) {
            return Err(CliError::validation(
                STAGE,
                format!("{file} line {line}: duplicate site {site} replicate {replicate} (first on line {first})"),
            ));
        }
        let obs = SiteObservation { site_id: site, replicate_id: replicate, counts, cardinality };
        obs.validate(grouping).map_err(|e| {
            CliError::validation(STAGE, format!("{file} line {line} (site {site}, replicate {replicate}): {e}"))
        })?;
        out.push(obs);
    }
    Ok(out)
}

/// Parses `site,<covariate>...` rows. Silt-clay fractions (`sc`) must lie in
/// (0, 1] and depths (`depth`) must be positive.
pub fn parse_covariates<R: Read>(file: &str, reader: R) -> Result<CovariateRows> {
    let t = Table::read(file, reader)?;
    let site_idx = t.column("site")?;
    let value_idx: Vec<usize> = (0..t.headers.len()).filter(|&i| i != site_idx).collect();
    let mut site_ids = Vec::with_capacity(t.rows.len());
    let mut columns: Vec<(String, Vec<f64>)> =
        value_idx.iter().map(|&i| (t.headers[i].clone(), Vec::with_capacity(t.rows.len()))).collect();
    let mut seen: HashMap<u32, u64> = HashMap::new();
    for rec in &t.rows {
        let site: u32 = t.parse(rec, site_idx, "a site id")?;
        let line = Table::line(rec);
        if let Some(first) = seen.insert(site, line) {
            return Err(CliError::validation(STAGE, format!("{file} line {line}: duplicate site {site} (first on line {first})")));
        }
        site_ids.push(site);
        for (&i, (name, values)) in value_idx.iter().zip(columns.iter_mut()) {
            let v = t.parse_real(rec, i)?;
            match name.as_str() {
                "sc" if !(v > 0.0 && v <= 1.0) => return Err(t.err(rec, name, format!("sc = {v} outside (0, 1]"))),
                "depth" if v <= 0.0 => return Err(t.err(rec, name, format!("depth = {v} must be positive"))),
                _ => {}
            }
            values.push(v);
        }
    }
    Ok(CovariateRows { site_ids, columns })
}

/// Parses `site,easting,northing` rows.
pub fn parse_geometry<R: Read>(file: &str, reader: R) -> Result<Vec<SiteGeometry>> {
    let t = Table::read(file, reader)?;
    let idx: Vec<usize> = ["site", "easting", "northing"].iter().map(|c| t.column(c)).collect::<Result<_>>()?;
    let mut seen: HashMap<u32, u64> = HashMap::new();
    let mut out = Vec::with_capacity(t.rows.len());
    for rec in &t.rows {
        let site_id: u32 = t.parse(rec, idx[0], "a site id")?;
        let line = Table::line(rec);
        if let Some(first) = seen.insert(site_id, line) {
            return Err(CliError::validation(STAGE, format!("{file} line {line}: duplicate site {site_id} (first on line {first})")));
        }
        out.push(SiteGeometry { site_id, easting: t.parse_real(rec, idx[1])?, northing: t.parse_real(rec, idx[2])? });
    }
    Ok(out)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CliError::io(STAGE, path, e))
}

fn name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

pub fn read_counts(path: &Path, grouping: &MetricGrouping) -> Result<Vec<SiteObservation>> {
    parse_counts(&name(path), open(path)?, grouping)
}

pub fn read_covariates(path: &Path) -> Result<CovariateRows> {
    parse_covariates(&name(path), open(path)?)
}

pub fn read_geometry(path: &Path) -> Result<Vec<SiteGeometry>> {
    parse_geometry(&name(path), open(path)?)
}
