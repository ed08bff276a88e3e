//! Best initial profile under an L2 budget: the top right singular vector of the map from
//! radial profiles to the sensitivity field on the observation cylinder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{sensitivity_field, BleachShape, ExperimentGeometry, SpaceTimeGrid};

/// Piecewise-constant radial profiles on `cells` equal rings covering `[0, r_max]` (units of `R`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDiscretization {
    pub r_max: f64,
    pub cells: usize,
}

impl Default for RadialDiscretization {
    fn default() -> Self {
        RadialDiscretization { r_max: 3.0, cells: 64 }
    }
}

impl RadialDiscretization {
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.cells)
            .map(|m| self.r_max * m as f64 / self.cells as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerIteration {
    pub max_iterations: usize,
    /// Stop once the Rayleigh quotient changes by less than this, relatively.
    pub tolerance: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            max_iterations: 20_000,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Design {
    pub singular_value: f64,
    /// Ring edges; `profile[m]` is the value on `[edges[m], edges[m + 1]]`.
    pub edges: Vec<f64>,
    /// Scaled so that its L2 norm (in units of `R`) equals the requested budget.
    pub profile: Vec<f64>,
    pub rayleigh_history: Vec<f64>,
}

/// Discretised operator in orthonormal coordinates: `a[p * cells + m]` is the field of ring
/// `m` at cylinder point `p`, times the square roots of the point weight and of `1 / area_m`.
pub(crate) struct SensitivityOperator {
    a: Vec<f64>,
    rows: usize,
    cols: usize,
    /// `sqrt(area_m)` with `area_m = pi (rho_{m+1}^2 - rho_m^2)`.
    root_area: Vec<f64>,
}

impl SensitivityOperator {
    pub(crate) fn build(geometry: &ExperimentGeometry, disc: &RadialDiscretization, grid: &SpaceTimeGrid) -> Result<Self> {
        if disc.cells == 0 || !(disc.r_max > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid radial discretisation {disc:?}")));
        }
        let edges = disc.edges();
        let rings = edges
            .windows(2)
            .map(|w| if w[0] == 0.0 { BleachShape::disk(w[1]) } else { BleachShape::annulus(w[0], w[1]) })
            .collect::<Result<Vec<_>>>()?;
        let root_area: Vec<f64> = edges
            .windows(2)
            .map(|w| (std::f64::consts::PI * (w[1] * w[1] - w[0] * w[0])).sqrt())
            .collect();
        let scale = geometry.horizon * geometry.radius * geometry.radius;
        let rw = grid.radial_weights();
        let cols = disc.cells;
        let mut a = Vec::with_capacity(rw.len() * grid.time_nodes().len() * cols);
        for (&q, &wq) in grid.radial_nodes().iter().zip(&rw) {
            for (&tau, &wt) in grid.time_nodes().iter().zip(grid.time_weights()) {
                let root_w = (scale * wq * wt).sqrt();
                for (ring, ra) in rings.iter().zip(&root_area) {
                    a.push(root_w * sensitivity_field(ring, geometry, q, tau)? / ra);
                }
            }
        }
        Ok(SensitivityOperator {
            rows: a.len() / cols,
            a,
            cols,
            root_area,
        })
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (p, out) in y.iter_mut().enumerate() {
            let row = &self.a[p * self.cols..(p + 1) * self.cols];
            *out = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        x.fill(0.0);
        for (p, &yp) in y.iter().enumerate() {
            let row = &self.a[p * self.cols..(p + 1) * self.cols];
            for (xm, am) in x.iter_mut().zip(row) {
                *xm += am * yp;
            }
        }
    }

    /// `||K w||^2 / ||w||^2` for a profile `w` given by ring values.
    pub(crate) fn rayleigh_of_profile(&self, w: &[f64]) -> f64 {
        let x: Vec<f64> = w.iter().zip(&self.root_area).map(|(a, b)| a * b).collect();
        let mut y = vec![0.0; self.rows];
        self.apply(&x, &mut y);
        dot(&y, &y) / dot(&x, &x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Power iteration on `K* K`. The returned profile has L2 norm `c2`.
pub fn l2_optimal_design(
    geometry: &ExperimentGeometry,
    disc: &RadialDiscretization,
    c2: f64,
    grid: &SpaceTimeGrid,
    iteration: &PowerIteration,
) -> Result<L2Design> {
    geometry.validate()?;
    if !(c2 > 0.0 && c2.is_finite()) {
        return Err(Error::InvalidArgument(format!("L2 budget must be positive, got {c2}")));
    }
    let op = SensitivityOperator::build(geometry, disc, grid)?;
    let (x, history) = power_iterate(&op, iteration)?;
    let lambda = *history.last().expect("at least one iterate");
    let raw: Vec<f64> = x.iter().zip(&op.root_area).map(|(v, ra)| v / ra).collect();
    // x has unit norm in orthonormal coordinates, so raw has unit L2 norm; fix the sign
    // so the profile is mostly positive.
    let sign = if raw.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    Ok(L2Design {
        singular_value: lambda.sqrt(),
        edges: disc.edges(),
        profile: raw.iter().map(|v| sign * c2 * v).collect(),
        rayleigh_history: history,
    })
}

fn power_iterate(op: &SensitivityOperator, it: &PowerIteration) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = vec![1.0 / (op.cols as f64).sqrt(); op.cols];
    let mut y = vec![0.0; op.rows];
    let mut next = vec![0.0; op.cols];
    let mut history = Vec::new();
    for _ in 0..it.max_iterations {
        op.apply(&x, &mut y);
        let rayleigh = dot(&y, &y);
        op.apply_transpose(&y, &mut next);
        let norm = dot(&next, &next).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("sensitivity operator vanishes".into()));
        }
        let done = history
            .last()
            .is_some_and(|&prev: &f64| (rayleigh - prev).abs() <= it.tolerance * rayleigh);
        history.push(rayleigh);
        if done {
            return Ok((x, history));
        }
        for (a, b) in x.iter_mut().zip(&next) {
            *a = b / norm;
        }
    }
    Err(Error::NoConvergence {
        iterations: it.max_iterations,
        rayleigh: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// `||K w||^2 / ||w||^2` for a ring profile, for checking the optimality of a design.
pub fn profile_rayleigh_quotient(
    geometry: &ExperimentGeometry,
    disc: &RadialDiscretization,
    grid: &SpaceTimeGrid,
    profile: &[f64],
) -> Result<f64> {
    if profile.len() != disc.cells {
        return Err(Error::InvalidArgument(format!(
            "profile has {} values for {} rings",
            profile.len(),
            disc.cells
        )));
    }
    Ok(SensitivityOperator::build(geometry, disc, grid)?.rayleigh_of_profile(profile))
}
