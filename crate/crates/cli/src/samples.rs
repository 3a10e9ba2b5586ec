//! Delimited sample files, the discretization map for the short-term
//! outcome, and covariate cells.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ltebounds::estimation::{ExperimentalRecord, ObservationalRecord};
use ltebounds::{Arm, Direction, SupportSpec};

use crate::error::{CliError, Result};
use crate::files::write_atomic;

#[derive(Clone, Debug, PartialEq)]
pub enum BinMode {
    /// `s` already holds support indices `1..=k`.
    Identity,
    /// Bin `j` holds `edges[j-1] < s <= edges[j]`, with open outer bins.
    Edges(Vec<f64>),
    /// Edges at the pooled empirical quantiles `j/q`.
    Quantile(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizationSpec {
    pub mode: BinMode,
    pub order: Direction,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        DiscretizationSpec { mode: BinMode::Identity, order: Direction::Increasing }
    }
}

/// A fitted map from raw short-term values to 0-based support indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretization {
    pub k: usize,
    /// Interior edges; empty in identity mode.
    pub edges: Vec<f64>,
    pub order: Direction,
    identity: bool,
    /// Some bin holds more than one distinct observed value.
    pub coarsens: bool,
}

fn lower_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

impl Discretization {
    /// Fits the map on the pooled short-term values of both samples.
    pub fn fit(spec: &DiscretizationSpec, pooled: &[f64]) -> Result<Self> {
        if pooled.is_empty() {
            return Err(CliError::Domain("no short-term outcome values to discretize".into()));
        }
        let mut sorted = pooled.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (edges, identity, k) = match &spec.mode {
            BinMode::Identity => {
                for &v in &sorted {
                    if v.fract() != 0.0 || v < 1.0 {
                        return Err(CliError::Domain(format!(
                            "short-term value {v} is not a support index; give bin edges or quantiles"
                        )));
                    }
                }
                (Vec::new(), true, *sorted.last().expect("nonempty") as usize)
            }
            BinMode::Edges(edges) => {
                if edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
                    return Err(CliError::Domain("bin edges must be finite and strictly increasing".into()));
                }
                (edges.clone(), false, edges.len() + 1)
            }
            BinMode::Quantile(q) => {
                if *q < 2 {
                    return Err(CliError::Domain("quantile binning needs at least 2 bins".into()));
                }
                let max = *sorted.last().expect("nonempty");
                let mut edges: Vec<f64> = (1..*q).map(|j| lower_quantile(&sorted, j as f64 / *q as f64)).collect();
                edges.dedup();
                // An edge at the maximum would leave the top bin empty.
                edges.retain(|&e| e < max);
                if edges.len() + 1 < *q {
                    log::warn!("tied values leave {} of {q} quantile bins", edges.len() + 1);
                }
                let k = edges.len() + 1;
                (edges, false, k)
            }
        };
        let mut d = Discretization { k, edges, order: spec.order, identity, coarsens: false };
        let mut seen: Vec<Option<f64>> = vec![None; k];
        for &v in &sorted {
            let b = d.raw_bin(v);
            match seen[b] {
                Some(first) if first != v => d.coarsens = true,
                None => seen[b] = Some(v),
                _ => {}
            }
        }
        Ok(d)
    }

    fn raw_bin(&self, v: f64) -> usize {
        if self.identity {
            v as usize - 1
        } else {
            // Ties at an edge go to the lower bin.
            self.edges.partition_point(|&e| e < v)
        }
    }

    /// 0-based support index of `v`.
    pub fn bin(&self, v: f64) -> Result<usize> {
        if self.identity && (v.fract() != 0.0 || v < 1.0 || v as usize > self.k) {
            return Err(CliError::Domain(format!("short-term value {v} outside 1..={}", self.k)));
        }
        let b = self.raw_bin(v);
        Ok(match self.order {
            Direction::Increasing => b,
            Direction::Decreasing => self.k - 1 - b,
        })
    }

    /// Whether the map merges or reorders observed values.
    pub fn is_identity(&self) -> bool {
        !self.coarsens && self.order == Direction::Increasing
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawObservation {
    pub y: f64,
    pub s: f64,
    pub d: Arm,
    pub cell: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawExperiment {
    pub s: f64,
    pub d: Arm,
    pub z: String,
    pub cell: Vec<String>,
}

fn column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CliError::schema(path, format!("missing column '{name}'")))
}

fn parse_f64(path: &Path, line: u64, name: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::parse(path, Some(line), format!("column '{name}': '{raw}' is not a finite number")))
}

fn parse_arm(path: &Path, line: u64, raw: &str) -> Result<Arm> {
    match raw.trim() {
        "0" => Ok(Arm::Control),
        "1" => Ok(Arm::Treated),
        other => Err(CliError::Domain(format!("{}:{line}: treatment d='{other}' must be 0 or 1", path.display()))),
    }
}

fn read_rows(
    path: &Path,
    required: &[&str],
    covariates: &[String],
) -> Result<Vec<(u64, Vec<String>, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(path, None, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| CliError::parse(path, Some(1), e.to_string()))?.clone();
    let req: Vec<usize> = required.iter().map(|c| column(path, &headers, c)).collect::<Result<_>>()?;
    let cov: Vec<usize> = covariates.iter().map(|c| column(path, &headers, c)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line());
            CliError::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let pick = |idx: &[usize]| idx.iter().map(|&i| rec.get(i).unwrap_or("").to_string()).collect::<Vec<_>>();
        rows.push((line, pick(&req), pick(&cov)));
    }
    Ok(rows)
}

pub fn read_observational(path: &Path, covariates: &[String]) -> Result<Vec<RawObservation>> {
    read_rows(path, &["y", "s", "d"], covariates)?
        .into_iter()
        .map(|(line, v, cell)| {
            Ok(RawObservation {
                y: parse_f64(path, line, "y", &v[0])?,
                s: parse_f64(path, line, "s", &v[1])?,
                d: parse_arm(path, line, &v[2])?,
                cell,
            })
        })
        .collect()
}

pub fn read_experimental(path: &Path, covariates: &[String]) -> Result<Vec<RawExperiment>> {
    read_rows(path, &["s", "d", "z"], covariates)?
        .into_iter()
        .map(|(line, v, cell)| {
            if v[2].is_empty() {
                return Err(CliError::parse(path, Some(line), "column 'z' is empty"));
            }
            Ok(RawExperiment {
                s: parse_f64(path, line, "s", &v[0])?,
                d: parse_arm(path, line, &v[1])?,
                z: v[2].clone(),
                cell,
            })
        })
        .collect()
}

/// Sorted distinct instrument labels: numerically when all parse, else lexically.
pub fn instrument_labels(exp: &[RawExperiment]) -> Vec<String> {
    let mut labels: Vec<String> = exp.iter().map(|r| r.z.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let numeric: Option<Vec<f64>> = labels.iter().map(|z| z.parse::<f64>().ok()).collect();
    if numeric.is_some() {
        labels.sort_by(|a, b| {
            let (x, y) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
            x.partial_cmp(&y).unwrap_or(Ordering::Equal)
        });
    }
    labels
}

/// Records of one covariate cell on the common support.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellSamples {
    pub obs: Vec<ObservationalRecord>,
    pub exp: Vec<ExperimentalRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedSamples {
    pub support: SupportSpec,
    pub discretization: Discretization,
    pub z_labels: Vec<String>,
    /// Keyed by covariate values; a single empty key without covariates.
    pub cells: BTreeMap<Vec<String>, CellSamples>,
}

impl LoadedSamples {
    pub fn total_observational(&self) -> usize {
        self.cells.values().map(|c| c.obs.len()).sum()
    }
}

/// Reads both sample files and maps them onto one support with one
/// discretization fitted on the pooled short-term values.
pub fn load_samples(
    obs_path: &Path,
    exp_path: &Path,
    disc: &DiscretizationSpec,
    covariates: &[String],
    y_range: Option<(f64, f64)>,
) -> Result<LoadedSamples> {
    let obs = read_observational(obs_path, covariates)?;
    let exp = read_experimental(exp_path, covariates)?;
    if obs.is_empty() {
        return Err(CliError::schema(obs_path, "no observational records"));
    }
    let pooled: Vec<f64> = obs.iter().map(|r| r.s).chain(exp.iter().map(|r| r.s)).collect();
    let discretization = Discretization::fit(disc, &pooled)?;
    let z_labels = instrument_labels(&exp);
    let (y_low, y_high) = match y_range {
        Some(r) => r,
        None => {
            let lo = obs.iter().map(|r| r.y).fold(f64::INFINITY, f64::min);
            let hi = obs.iter().map(|r| r.y).fold(f64::NEG_INFINITY, f64::max);
            log::info!("outcome range taken from the sample: [{lo}, {hi}]");
            (lo, hi)
        }
    };
    if !(y_high > y_low) {
        return Err(CliError::Domain(format!("outcome range [{y_low}, {y_high}] is degenerate; pass --y-range")));
    }
    let support = SupportSpec::new(discretization.k, z_labels.len().max(1), y_low, y_high)?;

    let z_index: BTreeMap<&str, usize> = z_labels.iter().enumerate().map(|(i, z)| (z.as_str(), i)).collect();
    let mut cells: BTreeMap<Vec<String>, CellSamples> = BTreeMap::new();
    for r in &obs {
        let s = discretization.bin(r.s)?;
        cells.entry(r.cell.clone()).or_default().obs.push(ObservationalRecord { y: r.y, s, d: r.d });
    }
    for r in &exp {
        let s = discretization.bin(r.s)?;
        let z = z_index[r.z.as_str()];
        match cells.get_mut(&r.cell) {
            Some(c) => c.exp.push(ExperimentalRecord { s, d: r.d, z }),
            None => log::warn!("experimental records in cell {:?} have no observational counterpart; dropped", r.cell),
        }
    }
    Ok(LoadedSamples { support, discretization, z_labels, cells })
}

/// Writes simulated samples with 1-based support and instrument labels.
pub fn write_samples(
    dir: &Path,
    obs: &[ObservationalRecord],
    exp: &[ExperimentalRecord],
) -> Result<(PathBuf, PathBuf)> {
    let obs_path = dir.join("observational.csv");
    let exp_path = dir.join("experimental.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |p: &Path, e: csv::Error| CliError::parse(p, None, e.to_string());
    w.write_record(["y", "s", "d"]).map_err(|e| csv_err(&obs_path, e))?;
    for r in obs {
        w.write_record([r.y.to_string(), (r.s + 1).to_string(), r.d.index().to_string()])
            .map_err(|e| csv_err(&obs_path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Domain(e.to_string()))?;
    write_atomic(&obs_path, &bytes)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "d", "z"]).map_err(|e| csv_err(&exp_path, e))?;
    for r in exp {
        w.write_record([(r.s + 1).to_string(), r.d.index().to_string(), (r.z + 1).to_string()])
            .map_err(|e| csv_err(&exp_path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Domain(e.to_string()))?;
    write_atomic(&exp_path, &bytes)?;
    Ok((obs_path, exp_path))
}
