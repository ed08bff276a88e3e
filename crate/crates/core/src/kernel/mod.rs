//! The sensitivity kernel `k(r, s; beta)`: the quadratic-form kernel whose alternating sums
//! over jump radii give the sensitivity of radial bleach shapes.

mod beta0;
mod direct;
mod integrand;
mod io;
mod march;

pub use beta0::{kernel_beta0, kernel_beta0_tensor, Beta0Quadrature};
pub use direct::{kernel_direct, DirectQuadrature};
pub use io::{load_table, load_table_unchecked, save_table, write_atomic, write_csv};
pub use march::{kernel_ode_march, MarchConfig};

pub(crate) use integrand::radial_factor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance and accuracy data carried along with a table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub q_order: usize,
    pub q_nodes: usize,
    pub rtol: f64,
    pub atol: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    /// Largest `|k_march(0) - k_beta0| / sqrt(k(r,r;0) k(s,s;0))` over the grid.
    pub closure_residual: f64,
    /// SHA-256 (hex) of grids and values.
    pub hash: String,
}

/// `k[beta][r][s]` on a uniform-or-not tensor grid; `s` shares the `r` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    r_grid: Vec<f64>,
    beta_grid: Vec<f64>,
    values: Vec<f64>,
    pub meta: TableMeta,
}

const GRID_MATCH: f64 = 1e-9;

fn locate(grid: &[f64], x: f64) -> Option<usize> {
    let i = grid.partition_point(|&g| g < x - GRID_MATCH);
    (i < grid.len() && (grid[i] - x).abs() <= GRID_MATCH).then_some(i)
}

/// Index `i` and weight `t` with `x = (1 - t) grid[i] + t grid[i + 1]`.
fn bracket(grid: &[f64], x: f64, axis: &'static str) -> Result<(usize, f64)> {
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    if !(x >= lo - GRID_MATCH && x <= hi + GRID_MATCH) {
        return Err(Error::OutOfRange { axis, value: x, lo, hi });
    }
    let x = x.clamp(lo, hi);
    let i = grid.partition_point(|&g| g <= x).saturating_sub(1).min(grid.len() - 2);
    let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    Ok((i, t))
}

impl KernelTable {
    /// Assembles a table and checks its invariants; the hash in `meta` is recomputed.
    pub fn from_parts(r_grid: Vec<f64>, beta_grid: Vec<f64>, values: Vec<f64>, meta: TableMeta) -> Result<Self> {
        let table = Self::from_raw_parts(r_grid, beta_grid, values, meta)?;
        table.check_invariants()?;
        Ok(table)
    }

    /// Assembles a table checking only its shape. Used for diagnosing damaged tables.
    pub fn from_raw_parts(r_grid: Vec<f64>, beta_grid: Vec<f64>, values: Vec<f64>, mut meta: TableMeta) -> Result<Self> {
        if r_grid.is_empty() || beta_grid.is_empty() || values.len() != r_grid.len() * r_grid.len() * beta_grid.len() {
            return Err(Error::TableCheck(format!(
                "value count {} does not match grid shape {}x{}x{}",
                values.len(),
                beta_grid.len(),
                r_grid.len(),
                r_grid.len()
            )));
        }
        meta.hash = io::content_hash(&r_grid, &beta_grid, &values);
        Ok(KernelTable { r_grid, beta_grid, values, meta })
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn beta_grid(&self) -> &[f64] {
        &self.beta_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(beta, r, s)` node counts.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.beta_grid.len(), self.r_grid.len(), self.r_grid.len())
    }

    #[inline]
    pub fn get(&self, b: usize, i: usize, j: usize) -> f64 {
        let n = self.r_grid.len();
        self.values[(b * n + i) * n + j]
    }

    /// Row-major `r x s` slice at one beta node.
    pub fn layer(&self, b: usize) -> &[f64] {
        let n = self.r_grid.len();
        &self.values[b * n * n..(b + 1) * n * n]
    }

    pub fn beta_index(&self, beta: f64) -> Option<usize> {
        locate(&self.beta_grid, beta)
    }

    pub fn r_index(&self, r: f64) -> Option<usize> {
        locate(&self.r_grid, r)
    }

    /// Bilinear in `(r, s)`, linear in `beta`; no extrapolation.
    pub fn interpolate(&self, r: f64, s: f64, beta: f64) -> Result<f64> {
        let (i, ti) = bracket(&self.r_grid, r, "r")?;
        let (j, tj) = bracket(&self.r_grid, s, "s")?;
        let (b, tb) = bracket(&self.beta_grid, beta, "beta")?;
        let plane = |b: usize| {
            let v00 = self.get(b, i, j);
            let v10 = self.get(b, i + 1, j);
            let v01 = self.get(b, i, j + 1);
            let v11 = self.get(b, i + 1, j + 1);
            (1.0 - ti) * ((1.0 - tj) * v00 + tj * v01) + ti * ((1.0 - tj) * v10 + tj * v11)
        };
        let lower = plane(b);
        if tb == 0.0 {
            return Ok(lower);
        }
        Ok((1.0 - tb) * lower + tb * plane(b + 1))
    }

    /// Restriction to the given r and beta nodes (increasing indices; beta index 0 must be kept).
    pub fn subtable(&self, r_idx: &[usize], b_idx: &[usize]) -> Result<Self> {
        let n = self.r_grid.len();
        if r_idx.iter().any(|&i| i >= n)
            || b_idx.iter().any(|&b| b >= self.beta_grid.len())
        {
            return Err(Error::InvalidArgument("subtable index out of range".into()));
        }
        let r_grid: Vec<f64> = r_idx.iter().map(|&i| self.r_grid[i]).collect();
        let beta_grid: Vec<f64> = b_idx.iter().map(|&b| self.beta_grid[b]).collect();
        let mut values = Vec::with_capacity(b_idx.len() * r_idx.len() * r_idx.len());
        for &b in b_idx {
            for &i in r_idx {
                for &j in r_idx {
                    values.push(self.get(b, i, j));
                }
            }
        }
        Self::from_parts(r_grid, beta_grid, values, self.meta.clone())
    }

    /// Grid ordering, finiteness, symmetry and zero-argument checks.
    pub fn check_invariants(&self) -> Result<()> {
        self.check_grids()?;
        self.check_finite()?;
        self.check_symmetry()?;
        self.check_zero_row()
    }

    pub fn check_grids(&self) -> Result<()> {
        if self.r_grid.windows(2).any(|w| !(w[1] > w[0])) || self.r_grid[0] < 0.0 {
            return Err(Error::TableCheck("r grid not increasing".into()));
        }
        if self.beta_grid.first() != Some(&0.0) || self.beta_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::TableCheck("beta grid must start at 0 and increase".into()));
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(bad) => Err(Error::TableCheck(format!("non-finite value at flat index {bad}"))),
            None => Ok(()),
        }
    }

    /// `|k(r, s) - k(s, r)| <= 1e-12` relative to the largest diagonal entry of the layer.
    pub fn check_symmetry(&self) -> Result<()> {
        let n = self.r_grid.len();
        for b in 0..self.beta_grid.len() {
            let scale = (0..n).map(|i| self.get(b, i, i).abs()).fold(0.0, f64::max);
            for i in 0..n {
                for j in i + 1..n {
                    let (a, c) = (self.get(b, i, j), self.get(b, j, i));
                    if (a - c).abs() > 1e-12 * scale.max(a.abs()) {
                        return Err(Error::TableCheck(format!(
                            "kernel symmetry violated at beta={}, r={}, s={}: {a:e} vs {c:e}",
                            self.beta_grid[b], self.r_grid[i], self.r_grid[j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `k(0, s) = 0` exactly when the grid contains the zero radius.
    pub fn check_zero_row(&self) -> Result<()> {
        if self.r_grid[0] != 0.0 {
            return Ok(());
        }
        let n = self.r_grid.len();
        for b in 0..self.beta_grid.len() {
            if let Some(j) = (0..n).find(|&j| self.get(b, 0, j) != 0.0 || self.get(b, j, 0) != 0.0) {
                return Err(Error::TableCheck(format!(
                    "zero-argument kernel k(0, {}) = {:e} at beta={}",
                    self.r_grid[j],
                    self.get(b, 0, j),
                    self.beta_grid[b]
                )));
            }
        }
        Ok(())
    }

    /// `k(r, r; beta)` must not increase with `beta`.
    pub fn check_diagonal_monotone(&self) -> Result<()> {
        let n = self.r_grid.len();
        for i in 0..n {
            for b in 1..self.beta_grid.len() {
                let (prev, cur) = (self.get(b - 1, i, i), self.get(b, i, i));
                if cur > prev {
                    return Err(Error::TableCheck(format!(
                        "k(r, r) increases at r={}, beta={}: {prev:e} -> {cur:e}",
                        self.r_grid[i], self.beta_grid[b]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Uniform grid `0, step, ..., max`.
    pub fn uniform_grid(max: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0 && max > 0.0) {
            return Err(Error::InvalidArgument(format!("grid needs positive max and step, got {max}, {step}")));
        }
        let count = (max / step).round() as usize;
        if ((count as f64) * step - max).abs() > 1e-9 * max {
            return Err(Error::InvalidArgument(format!("grid max {max} is not a multiple of step {step}")));
        }
        Ok((0..=count).map(|k| k as f64 * step).collect())
    }
}
