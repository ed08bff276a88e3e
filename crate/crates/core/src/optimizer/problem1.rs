//! Unconstrained grid search (Problem 1) and the sweep over `beta`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelTable;

/// A shape on the search grid. `indices` refer to the table's r-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub indices: Vec<usize>,
    pub radii: Vec<f64>,
    pub kernel_sum: f64,
}

impl Configuration {
    pub fn jump_count(&self) -> usize {
        self.radii.len()
    }

    /// `pi` times the occupied area.
    pub fn energy(&self) -> f64 {
        energy_of(&self.radii)
    }
}

pub(crate) fn energy_of(radii: &[f64]) -> f64 {
    let n = radii.len();
    PI * radii
        .iter()
        .enumerate()
        .map(|(j, r)| if (n - j) % 2 == 1 { r * r } else { -r * r })
        .sum::<f64>()
}

/// Optimal configurations at one `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSweepResult {
    pub beta: f64,
    /// Best configuration for each `N = 1..=n_max` (index `N - 1`).
    pub per_n_best: Vec<Configuration>,
    pub overall_best: Configuration,
    /// `32 pi beta^3 kernel_sum` with `R = T = 1`.
    pub s_int: f64,
}

impl DesignSweepResult {
    pub fn n_star(&self) -> usize {
        self.overall_best.jump_count()
    }

    pub fn best_for(&self, n: usize) -> Option<&Configuration> {
        self.per_n_best.get(n.checked_sub(1)?)
    }
}

/// Where the optimal jump count changes between two neighbouring `beta` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from_n: usize,
    pub to_n: usize,
    pub beta_before: f64,
    pub beta_after: f64,
    /// Midpoint of the two nodes; uncertain by one `beta` step.
    pub beta: f64,
    pub uncertainty: f64,
    /// `N*` decreased, which the theory does not predict.
    pub anomaly: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSweep {
    pub results: Vec<DesignSweepResult>,
    pub transitions: Vec<Transition>,
}

impl BetaSweep {
    pub fn has_anomaly(&self) -> bool {
        self.transitions.iter().any(|t| t.anomaly)
    }
}

pub(crate) fn check_n_max(n_max: usize) -> Result<()> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    if n_max > 4 {
        log::warn!("n_max = {n_max}: the search cost grows like grid^{n_max}");
    }
    Ok(())
}

/// Depth-first enumeration of all strictly increasing index tuples of length `1..=n_max`
/// drawn from `first..n`, in lexicographic order for every fixed length. `visit` receives
/// each tuple with its alternating kernel sum. Each node keeps `w[l] = sum_j c_j K[a_j][l]`
/// so extending a prefix by `l` costs O(1): `S' = S + K[l][l] + 2 c w[l]`.
pub(crate) fn enumerate_configurations(
    layer: &[f64],
    n: usize,
    first: usize,
    n_max: usize,
    mut visit: impl FnMut(&[usize], f64),
) {
    fn descend(
        layer: &[f64],
        n: usize,
        n_max: usize,
        start: usize,
        sum: f64,
        w: &[f64],
        prefix: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize], f64),
    ) {
        let depth = prefix.len();
        let sign = if depth % 2 == 0 { 1.0 } else { -1.0 };
        let mut next_w = vec![0.0; n];
        for l in start..n {
            let value = sum + layer[l * n + l] + 2.0 * sign * w[l];
            prefix.push(l);
            visit(prefix, value);
            if depth + 1 < n_max && l + 1 < n {
                let row = &layer[l * n..(l + 1) * n];
                for m in l + 1..n {
                    next_w[m] = w[m] + sign * row[m];
                }
                descend(layer, n, n_max, l + 1, value, &next_w, prefix, visit);
            }
            prefix.pop();
        }
    }
    let w = vec![0.0; n];
    let mut prefix = Vec::with_capacity(n_max);
    descend(layer, n, n_max, first, 0.0, &w, &mut prefix, &mut visit);
}

/// Index of the first positive radius; the zero radius is not a valid jump.
pub(crate) fn first_positive(table: &KernelTable) -> usize {
    let r = table.r_grid();
    r.iter().position(|&x| x > 0.0).unwrap_or(r.len())
}

fn make_config(table: &KernelTable, indices: Vec<usize>, kernel_sum: f64) -> Configuration {
    let radii = indices.iter().map(|&i| table.r_grid()[i]).collect();
    Configuration {
        indices,
        radii,
        kernel_sum,
    }
}

/// Exhaustive search over jump radii on the table's positive r-nodes at a tabulated `beta`.
/// Ties go to the lexicographically smallest tuple, then to the smallest `N`.
pub fn solve_problem1(table: &KernelTable, beta: f64, n_max: usize) -> Result<DesignSweepResult> {
    check_n_max(n_max)?;
    let b = table
        .beta_index(beta)
        .ok_or_else(|| Error::InvalidArgument(format!("beta = {beta} is not a node of the table's beta grid")))?;
    Ok(solve_at_index(table, b, n_max))
}

pub(crate) fn solve_at_index(table: &KernelTable, b: usize, n_max: usize) -> DesignSweepResult {
    let n = table.r_grid().len();
    let mut best: Vec<Option<(Vec<usize>, f64)>> = vec![None; n_max];
    enumerate_configurations(table.layer(b), n, first_positive(table), n_max, |idx, value| {
        let slot = &mut best[idx.len() - 1];
        if slot.as_ref().is_none_or(|(_, v)| value > *v) {
            *slot = Some((idx.to_vec(), value));
        }
    });
    let per_n_best: Vec<Configuration> = best
        .into_iter()
        .flatten()
        .map(|(idx, v)| make_config(table, idx, v))
        .collect();
    let mut overall = &per_n_best[0];
    for c in &per_n_best[1..] {
        if c.kernel_sum > overall.kernel_sum {
            overall = c;
        }
    }
    let beta = table.beta_grid()[b];
    DesignSweepResult {
        beta,
        s_int: 32.0 * PI * beta.powi(3) * overall.kernel_sum,
        overall_best: overall.clone(),
        per_n_best,
    }
}

/// Problem 1 at every tabulated `beta`, with the points where `N*` changes.
pub fn sweep_beta(table: &KernelTable, n_max: usize) -> Result<BetaSweep> {
    check_n_max(n_max)?;
    let results: Vec<DesignSweepResult> = (0..table.beta_grid().len())
        .map(|b| solve_at_index(table, b, n_max))
        .collect();
    let transitions = find_transitions(&results);
    for t in transitions.iter().filter(|t| t.anomaly) {
        log::warn!("optimal jump count drops from {} to {} near beta = {}", t.from_n, t.to_n, t.beta);
    }
    Ok(BetaSweep { results, transitions })
}

pub fn find_transitions(results: &[DesignSweepResult]) -> Vec<Transition> {
    results
        .windows(2)
        .filter(|w| w[0].n_star() != w[1].n_star())
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            Transition {
                from_n: a.n_star(),
                to_n: b.n_star(),
                beta_before: a.beta,
                beta_after: b.beta,
                beta: 0.5 * (a.beta + b.beta),
                uncertainty: b.beta - a.beta,
                anomaly: b.n_star() < a.n_star(),
            }
        })
        .collect()
}
