//! Energy-constrained grid search (Problem 2).
//!
//! On a uniform grid `r_i = i h` the energy of a tuple is `pi h^2 n` with the integer
//! `n = sum_j (-1)^{N-j} i_j^2`, so each jump count's upper envelope is an array over `n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::problem1::{check_n_max, enumerate_configurations, first_positive};
use crate::error::{Error, Result};
use crate::kernel::KernelTable;

/// Best configuration found for one `(beta, E)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCell {
    pub n_star: usize,
    /// Radii of the enumerated configuration nearest to `E` on the winning envelope.
    /// For `N = 1` this is the exact disk `sqrt(E / pi)`, generally off the grid.
    pub radii: Vec<f64>,
    /// Envelope value interpolated to `E`.
    pub kernel_sum: f64,
    /// Interpolated envelope of every jump count (index `N - 1`), `None` where unreachable.
    pub per_n: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyConstrainedMap {
    pub beta_grid: Vec<f64>,
    pub energy_grid: Vec<f64>,
    /// `cells[b][e]`; `None` marks an energy no configuration reaches.
    pub cells: Vec<Vec<Option<EnergyCell>>>,
}

impl EnergyConstrainedMap {
    /// `(cells choosing N, non-empty cells)`.
    pub fn count(&self, n: usize) -> (usize, usize) {
        let filled = self.cells.iter().flatten().flatten();
        let total = filled.clone().count();
        (filled.filter(|c| c.n_star == n).count(), total)
    }
}

/// `count` points spread evenly over `[0.25 pi, 0.9 pi r_max^2]`.
pub fn default_energy_grid(r_max: f64, count: usize) -> Result<Vec<f64>> {
    let (lo, hi) = (0.25 * PI, 0.9 * PI * r_max * r_max);
    if !(hi > lo) || count < 2 {
        return Err(Error::InvalidArgument(format!(
            "energy grid needs r_max > {:.3} and at least 2 points",
            (0.25f64 / 0.9).sqrt()
        )));
    }
    Ok((0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect())
}

fn grid_step(table: &KernelTable) -> Result<f64> {
    let r = table.r_grid();
    if r.len() < 2 || r[0] != 0.0 {
        return Err(Error::InvalidArgument("energy search needs an r-grid starting at 0".into()));
    }
    let h = r[r.len() - 1] / (r.len() - 1) as f64;
    if r.iter().enumerate().any(|(i, &x)| (x - i as f64 * h).abs() > 1e-9 * h) {
        return Err(Error::InvalidArgument("energy search needs a uniform r-grid".into()));
    }
    Ok(h)
}

/// Best value and argmax for every attainable energy level of one jump count.
struct Envelope {
    value: Vec<f64>,
    argmax: Vec<Vec<usize>>,
}

impl Envelope {
    fn new(levels: usize) -> Self {
        Envelope {
            value: vec![f64::NEG_INFINITY; levels],
            argmax: vec![Vec::new(); levels],
        }
    }

    /// Linear interpolation between the attained levels bracketing `level`.
    fn at(&self, level: f64) -> Option<(f64, usize)> {
        let below = (level.floor().max(0.0) as usize).min(self.value.len() - 1);
        let lo = (0..=below).rev().find(|&n| self.value[n].is_finite())?;
        if lo as f64 == level {
            return Some((self.value[lo], lo));
        }
        let hi = (below + 1..self.value.len()).find(|&n| self.value[n].is_finite())?;
        let t = (level - lo as f64) / (hi - lo) as f64;
        let v = (1.0 - t) * self.value[lo] + t * self.value[hi];
        Some((v, if t <= 0.5 { lo } else { hi }))
    }
}

/// Problem 2 at one tabulated `beta` for every energy in `energy_grid`.
pub fn solve_problem2(
    table: &KernelTable,
    beta: f64,
    energy_grid: &[f64],
    n_max: usize,
) -> Result<Vec<Option<EnergyCell>>> {
    check_n_max(n_max)?;
    let b = table
        .beta_index(beta)
        .ok_or_else(|| Error::InvalidArgument(format!("beta = {beta} is not a node of the table's beta grid")))?;
    if energy_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("energies must be positive".into()));
    }
    let h = grid_step(table)?;
    let n = table.r_grid().len();
    let m = n - 1;
    let levels = m * m + 1;
    let mut envelopes: Vec<Envelope> = (0..n_max).map(|_| Envelope::new(levels)).collect();
    enumerate_configurations(table.layer(b), n, first_positive(table), n_max, |idx, value| {
        let len = idx.len();
        if len == 1 {
            return;
        }
        let level: i64 = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                let sq = (i * i) as i64;
                if (len - j) % 2 == 1 { sq } else { -sq }
            })
            .sum();
        let env = &mut envelopes[len - 1];
        let slot = level as usize;
        if value > env.value[slot] {
            env.value[slot] = value;
            env.argmax[slot] = idx.to_vec();
        }
    });

    let unit = PI * h * h;
    let r_max = table.r_grid()[m];
    energy_grid
        .iter()
        .map(|&e| {
            let level = e / unit;
            let mut per_n = Vec::with_capacity(n_max);
            let mut radii_of = Vec::with_capacity(n_max);
            let r1 = (e / PI).sqrt();
            if r1 <= r_max {
                per_n.push(Some(table.interpolate(r1, r1, table.beta_grid()[b])?));
            } else {
                per_n.push(None);
            }
            radii_of.push(vec![r1]);
            for env in &envelopes[1..] {
                match env.at(level) {
                    Some((v, near)) => {
                        per_n.push(Some(v));
                        radii_of.push(env.argmax[near].iter().map(|&i| table.r_grid()[i]).collect());
                    }
                    None => {
                        per_n.push(None);
                        radii_of.push(Vec::new());
                    }
                }
            }
            let mut best: Option<usize> = None;
            for (k, v) in per_n.iter().enumerate() {
                if let Some(v) = v {
                    if best.is_none_or(|j| *v > per_n[j].unwrap()) {
                        best = Some(k);
                    }
                }
            }
            Ok(best.map(|k| EnergyCell {
                n_star: k + 1,
                radii: radii_of[k].clone(),
                kernel_sum: per_n[k].unwrap(),
                per_n: per_n.clone(),
            }))
        })
        .collect()
}

/// Problem 2 over every tabulated `beta`.
pub fn problem2_map(table: &KernelTable, energy_grid: &[f64], n_max: usize) -> Result<EnergyConstrainedMap> {
    let cells = table
        .beta_grid()
        .iter()
        .map(|&beta| solve_problem2(table, beta, energy_grid, n_max))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyConstrainedMap {
        beta_grid: table.beta_grid().to_vec(),
        energy_grid: energy_grid.to_vec(),
        cells,
    })
}
