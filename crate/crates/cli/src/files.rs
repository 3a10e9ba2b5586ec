//! Moment, process and custom-assumption files.
//!
//! Support points and instrument values are 1-based in every file.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use ltebounds::{
    AssumptionSpec, DgpSpec, ExperimentalMoments, LinearSystem, ObservationalMoments, PerArm, ProblemMoments, Slack,
    SupportSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentsFile {
    k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z_count: Option<usize>,
    #[serde(default)]
    y_low: f64,
    #[serde(default = "one")]
    y_high: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slack: Option<SlackEntry>,
    #[serde(default)]
    observational: Vec<ObservationalCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    experimental: Vec<ExperimentalCell>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlackEntry {
    #[serde(default)]
    gamma: f64,
    #[serde(default)]
    fiber: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationalCell {
    d: u8,
    s: usize,
    mass: f64,
    /// Mean outcome on the `[0, 1]` scale.
    #[serde(default)]
    mean: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentalCell {
    z: usize,
    d: u8,
    s: usize,
    mass: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomFile {
    #[serde(default)]
    ineq: Vec<CustomRow>,
    #[serde(default)]
    eq: Vec<CustomRow>,
}

/// `coefs · (m_0(1..k), m_1(1..k)) >= rhs`, or `= rhs` for equalities.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomRow {
    coefs: Vec<f64>,
    rhs: f64,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn toml_error(path: &Path, text: &str, e: toml::de::Error) -> CliError {
    let line = e.span().map(|span| text[..span.start.min(text.len())].matches('\n').count() as u64 + 1);
    CliError::parse(path, line, e.message().to_string())
}

fn arm_index(path: &Path, d: u8) -> Result<usize> {
    match d {
        0 | 1 => Ok(d as usize),
        _ => Err(CliError::schema(path, format!("arm d={d} must be 0 or 1"))),
    }
}

fn support_index(path: &Path, s: usize, k: usize) -> Result<usize> {
    if (1..=k).contains(&s) {
        Ok(s - 1)
    } else {
        Err(CliError::schema(path, format!("support point s={s} outside 1..={k}")))
    }
}

pub fn parse_moments(text: &str, path: &Path) -> Result<ProblemMoments> {
    let file: MomentsFile = toml::from_str(text).map_err(|e| toml_error(path, text, e))?;
    let k = file.k;
    if k == 0 {
        return Err(CliError::schema(path, "k must be at least 1"));
    }
    let mut mass = PerArm::new(vec![0.0; k], vec![0.0; k]);
    let mut mean = PerArm::new(vec![0.0; k], vec![0.0; k]);
    let mut seen = BTreeSet::new();
    for cell in &file.observational {
        let (d, s) = (arm_index(path, cell.d)?, support_index(path, cell.s, k)?);
        if !seen.insert((d, s)) {
            return Err(CliError::schema(path, format!("duplicate observational cell d={}, s={}", cell.d, cell.s)));
        }
        let arm = ltebounds::Arm::from_index(d).expect("checked");
        mass[arm][s] = cell.mass;
        mean[arm][s] = cell.mean;
    }

    let z_count = match (file.z_count, file.experimental.iter().map(|c| c.z).max()) {
        (Some(z), _) => z,
        (None, Some(z)) => z,
        (None, None) => 1,
    };
    let exp = if file.experimental.is_empty() {
        None
    } else {
        let mut cells = vec![PerArm::new(vec![0.0; k], vec![0.0; k]); z_count];
        let mut seen = BTreeSet::new();
        for cell in &file.experimental {
            if !(1..=z_count).contains(&cell.z) {
                return Err(CliError::schema(path, format!("instrument value z={} outside 1..={z_count}", cell.z)));
            }
            let (d, s) = (arm_index(path, cell.d)?, support_index(path, cell.s, k)?);
            if !seen.insert((cell.z, d, s)) {
                return Err(CliError::schema(
                    path,
                    format!("duplicate experimental cell z={}, d={}, s={}", cell.z, cell.d, cell.s),
                ));
            }
            cells[cell.z - 1][ltebounds::Arm::from_index(d).expect("checked")][s] = cell.mass;
        }
        Some(ExperimentalMoments { mass: cells })
    };

    let support = SupportSpec::new(k, z_count, file.y_low, file.y_high).map_err(|e| CliError::schema(path, e.to_string()))?;
    let pm = ProblemMoments::new(support, ObservationalMoments { mass, mean }, exp)
        .map_err(|e| CliError::schema(path, e.to_string()))?;
    Ok(match file.slack {
        Some(s) => pm.with_slack(Slack { gamma: s.gamma, fiber: s.fiber }),
        None => pm,
    })
}

pub fn read_moments(path: &Path) -> Result<ProblemMoments> {
    parse_moments(&read_text(path)?, path)
}

pub fn moments_to_toml(pm: &ProblemMoments) -> String {
    let k = pm.k();
    let mut observational = Vec::with_capacity(2 * k);
    for d in ltebounds::Arm::BOTH {
        for s in 0..k {
            observational.push(ObservationalCell {
                d: d.index() as u8,
                s: s + 1,
                mass: pm.obs.mass[d][s],
                mean: pm.obs.mean[d][s],
            });
        }
    }
    let mut experimental = Vec::new();
    if let Some(exp) = &pm.exp {
        for (z, cell) in exp.mass.iter().enumerate() {
            for d in ltebounds::Arm::BOTH {
                for s in 0..k {
                    if cell[d][s] != 0.0 {
                        experimental.push(ExperimentalCell { z: z + 1, d: d.index() as u8, s: s + 1, mass: cell[d][s] });
                    }
                }
            }
        }
    }
    let file = MomentsFile {
        k,
        z_count: Some(pm.support.z_count),
        y_low: pm.support.y_low,
        y_high: pm.support.y_high,
        slack: (!pm.slack.is_zero()).then_some(SlackEntry { gamma: pm.slack.gamma, fiber: pm.slack.fiber }),
        observational,
        experimental,
    };
    toml::to_string(&file).expect("moments serialize")
}

/// Replaces `path` in one step so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_moments(pm: &ProblemMoments, path: &Path) -> Result<()> {
    write_atomic(path, moments_to_toml(pm).as_bytes())
}

pub fn read_dgp(path: &Path) -> Result<DgpSpec> {
    let text = read_text(path)?;
    let dgp: DgpSpec = toml::from_str(&text).map_err(|e| toml_error(path, &text, e))?;
    dgp.validate().map_err(|e| CliError::schema(path, e.to_string()))?;
    Ok(dgp)
}

pub fn read_custom(path: &Path, k: usize) -> Result<AssumptionSpec> {
    let text = read_text(path)?;
    let file: CustomFile = toml::from_str(&text).map_err(|e| toml_error(path, &text, e))?;
    let rows = |rows: Vec<CustomRow>| rows.into_iter().map(|r| (r.coefs, r.rhs)).collect();
    let system = LinearSystem { n: 2 * k, ineq: rows(file.ineq), eq: rows(file.eq) };
    AssumptionSpec::custom(k, system).map_err(|e| CliError::schema(path, e.to_string()))
}
