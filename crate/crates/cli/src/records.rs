//! CSV row types and their conversion from optimizer results.

use std::path::Path;

use anyhow::{Context, Result};
use bleach_core::kernel::write_atomic;
use bleach_core::optimizer::{BetaSweep, Configuration, DesignSweepResult, EnergyConstrainedMap};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Data behind the log-sensitivity plot: natural log of the dimensionless kernel sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure1Row {
    pub beta: f64,
    pub log_kernel_sum_overall: f64,
    pub nstar: usize,
    pub log_best_n1: Option<f64>,
    pub log_best_n2: Option<f64>,
    pub log_best_n3: Option<f64>,
    pub log_best_n4: Option<f64>,
}

/// One optimal configuration per beta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    #[serde(rename = "N*")]
    pub n_star: usize,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub r3: Option<f64>,
    pub r4: Option<f64>,
    pub kernel_sum: f64,
    pub s_int: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub beta: f64,
    pub nstar: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem2Row {
    pub beta: f64,
    pub energy: f64,
    pub nstar: Option<usize>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub r3: Option<f64>,
    pub r4: Option<f64>,
    pub kernel_sum: Option<f64>,
}

fn radius(radii: &[f64], k: usize) -> Option<f64> {
    radii.get(k).copied()
}

fn log_best(r: &DesignSweepResult, n: usize) -> Option<f64> {
    r.best_for(n).map(|c: &Configuration| c.kernel_sum.ln())
}

impl From<&DesignSweepResult> for Figure1Row {
    fn from(r: &DesignSweepResult) -> Self {
        Figure1Row {
            beta: r.beta,
            log_kernel_sum_overall: r.overall_best.kernel_sum.ln(),
            nstar: r.n_star(),
            log_best_n1: log_best(r, 1),
            log_best_n2: log_best(r, 2),
            log_best_n3: log_best(r, 3),
            log_best_n4: log_best(r, 4),
        }
    }
}

impl From<&DesignSweepResult> for SweepRow {
    fn from(r: &DesignSweepResult) -> Self {
        let radii = &r.overall_best.radii;
        SweepRow {
            beta: r.beta,
            n_star: r.n_star(),
            r1: radius(radii, 0),
            r2: radius(radii, 1),
            r3: radius(radii, 2),
            r4: radius(radii, 3),
            kernel_sum: r.overall_best.kernel_sum,
            s_int: r.s_int,
        }
    }
}

impl From<&DesignSweepResult> for EnergyRow {
    fn from(r: &DesignSweepResult) -> Self {
        EnergyRow {
            beta: r.beta,
            nstar: r.n_star(),
            energy: r.overall_best.energy(),
        }
    }
}

pub fn sweep_rows<T: for<'a> From<&'a DesignSweepResult>>(sweep: &BetaSweep) -> Vec<T> {
    sweep.results.iter().map(T::from).collect()
}

pub fn problem2_rows(map: &EnergyConstrainedMap) -> Vec<Problem2Row> {
    let mut rows = Vec::new();
    for (b, &beta) in map.beta_grid.iter().enumerate() {
        for (e, &energy) in map.energy_grid.iter().enumerate() {
            let cell = map.cells[b][e].as_ref();
            let radii = cell.map_or(&[][..], |c| &c.radii[..]);
            rows.push(Problem2Row {
                beta,
                energy,
                nstar: cell.map(|c| c.n_star),
                r1: radius(radii, 0),
                r2: radius(radii, 1),
                r3: radius(radii, 2),
                r4: radius(radii, 3),
                kernel_sum: cell.map(|c| c.kernel_sum),
            });
        }
    }
    rows
}

/// Writes rows atomically, preceded by `# ` comment lines.
pub fn write_rows<T: Serialize>(path: &Path, comments: &[&str], rows: &[T]) -> Result<()> {
    let mut bytes = Vec::new();
    for c in comments {
        bytes.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    {
        let mut w = csv::Writer::from_writer(&mut bytes);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    write_atomic(path, &bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes).with_context(|| format!("writing {}", path.display()))
}
