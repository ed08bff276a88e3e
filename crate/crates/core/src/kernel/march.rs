//! Tabulation of `k(r, s; beta)` by integrating `dk/dbeta = -f(r, s, beta)` for all
//! `(r, s)` pairs in lockstep under one adaptive Dormand–Prince 5(4) controller.
//!
//! The march runs from the top of the `beta` grid down to `beta = 0`, starting from a
//! direct evaluation of the tail integral at `beta_max`. Each state component carries the
//! separable factor `e^{beta (a(r) + a(s))}` so that kernels which decay like
//! `e^{-beta m(r, s)}` keep full relative accuracy. At `beta = 0` the marched values are
//! compared against [`kernel_beta0`] (closure residual) and the table's first layer is
//! set to `kernel_beta0`.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::beta0::{kernel_beta0, Beta0Quadrature};
use super::direct::{kernel_direct_scaled, DirectQuadrature};
use super::integrand::decay_exponent;
use super::{KernelTable, TableMeta};
use crate::error::{Error, Result};
use crate::special::{i0e_i1e, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarchConfig {
    /// Gauss–Legendre nodes per panel of the composite `q` rule.
    pub q_order: usize,
    /// Relative tolerance of the step controller.
    pub rtol: f64,
    /// Absolute tolerance, relative to the Cauchy–Schwarz scale `sqrt(k(r,r) k(s,s))`.
    pub atol: f64,
    pub max_steps: usize,
    pub direct: DirectQuadrature,
    pub beta0: Beta0Quadrature,
}

impl Default for MarchConfig {
    fn default() -> Self {
        MarchConfig {
            q_order: 16,
            rtol: 1e-7,
            atol: 1e-9,
            max_steps: 100_000,
            direct: DirectQuadrature::default(),
            beta0: Beta0Quadrature::default(),
        }
    }
}

/// Composite `q` rule on `[0, 1]`: eight uniform panels plus panels graded geometrically
/// towards `q = 1`, where kernels with `r, s > 1` concentrate.
pub(crate) fn march_q_rule(order: usize) -> Result<QuadratureRule> {
    let mut pts: Vec<f64> = (0..8).map(|k| k as f64 / 8.0).collect();
    let mut gap = 1.0 / 16.0;
    while gap >= 1.0 / 1024.0 {
        pts.push(1.0 - gap);
        gap /= 2.0;
    }
    pts.push(1.0);
    QuadratureRule::panels(&pts, order)
}

struct Rhs {
    radii: Vec<f64>,
    decay: Vec<f64>,
    q: Vec<f64>,
    sqrt_wq: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    g: Vec<f64>,
}

impl Rhs {
    fn new(radii: &[f64], rule: &QuadratureRule) -> Self {
        let n = radii.len();
        let pairs = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        Rhs {
            radii: radii.to_vec(),
            decay: radii.iter().map(|&r| decay_exponent(r)).collect(),
            q: rule.nodes.clone(),
            sqrt_wq: rule.iter().map(|(q, w)| (q * w).sqrt()).collect(),
            pairs,
            g: vec![0.0; n * rule.len()],
        }
    }

    /// `out = d y / d beta` for the scaled state `y = e^{beta (a_i + a_j)} k_ij`.
    fn eval(&mut self, beta: f64, y: &[f64], out: &mut [f64]) {
        let nq = self.q.len();
        for (i, &r) in self.radii.iter().enumerate() {
            let row = &mut self.g[i * nq..(i + 1) * nq];
            let a = self.decay[i];
            for (m, g) in row.iter_mut().enumerate() {
                let q = self.q[m];
                let d = q - r;
                let (i0, i1) = i0e_i1e(2.0 * beta * q * r);
                *g = r * self.sqrt_wq[m] * (beta * (a - d * d)).exp() * (r * i0 - q * i1);
            }
        }
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            let gi = &self.g[i * nq..(i + 1) * nq];
            let gj = &self.g[j * nq..(j + 1) * nq];
            let dot: f64 = gi.iter().zip(gj).map(|(a, b)| a * b).sum();
            out[p] = (self.decay[i] + self.decay[j]) * y[p] - dot;
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn validate_grids(r_grid: &[f64], beta_grid: &[f64]) -> Result<()> {
    if r_grid.len() < 2 || r_grid[0] < 0.0 || r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "r grid must be nonnegative and strictly increasing with at least two nodes".into(),
        ));
    }
    if beta_grid.len() < 2 || beta_grid[0] != 0.0 || beta_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "beta grid must start at 0 and be strictly increasing with at least two nodes".into(),
        ));
    }
    Ok(())
}

/// Builds the kernel table on `r_grid x r_grid x beta_grid`.
pub fn kernel_ode_march(r_grid: &[f64], beta_grid: &[f64], config: &MarchConfig) -> Result<KernelTable> {
    validate_grids(r_grid, beta_grid)?;
    if !(config.rtol > 0.0) || !(config.atol > 0.0) {
        return Err(Error::InvalidArgument("march tolerances must be positive".into()));
    }
    let rule = march_q_rule(config.q_order)?;
    let mut rhs = Rhs::new(r_grid, &rule);
    let n = r_grid.len();
    let n_pairs = rhs.pairs.len();
    let nb = beta_grid.len();
    let beta_max = beta_grid[nb - 1];
    let pairs = rhs.pairs.clone();
    let decay = rhs.decay.clone();
    let diag: Vec<usize> = (0..n).map(|i| pairs.iter().position(|&p| p == (i, i)).unwrap()).collect();

    info!("kernel march: {n} radii, {nb} beta nodes, {n_pairs} pairs");
    let mut y = pairs
        .iter()
        .map(|&(i, j)| kernel_direct_scaled(r_grid[i], r_grid[j], beta_max, &config.direct))
        .collect::<Result<Vec<f64>>>()?;

    let mut values = vec![0.0; nb * n * n];
    let store = |b: usize, beta: f64, y: &[f64], values: &mut [f64]| {
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let k = y[p] * (-beta * (decay[i] + decay[j])).exp();
            values[(b * n + i) * n + j] = k;
            values[(b * n + j) * n + i] = k;
        }
    };
    store(nb - 1, beta_max, &y, &mut values);

    let mut k_stage = vec![vec![0.0; n_pairs]; 7];
    let mut y_stage = vec![0.0; n_pairs];
    let mut y_new = vec![0.0; n_pairs];
    let mut t = beta_max;
    let mut h = -(beta_grid[nb - 1] - beta_grid[nb - 2]).min(0.05);
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut evaluations = 0usize;
    rhs.eval(t, &y, &mut k_stage[0]);
    evaluations += 1;

    for b in (0..nb - 1).rev() {
        let target = beta_grid[b];
        while t > target {
            if steps + rejected >= config.max_steps {
                return Err(Error::Integration {
                    beta: t,
                    reason: format!("step budget of {} exhausted", config.max_steps),
                });
            }
            let mut last = false;
            if t + h <= target {
                h = target - t;
                last = true;
            }
            if h.abs() < 1e-12 * beta_max.max(1.0) {
                return Err(Error::Integration {
                    beta: t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            for s in 1..7 {
                for p in 0..n_pairs {
                    let mut acc = 0.0;
                    for (l, a) in A[s][..s].iter().enumerate() {
                        acc += a * k_stage[l][p];
                    }
                    y_stage[p] = y[p] + h * acc;
                }
                rhs.eval(t + C[s] * h, &y_stage, &mut k_stage[s]);
                evaluations += 1;
            }
            // Stage 7 is evaluated at the fifth-order solution (FSAL).
            y_new.copy_from_slice(&y_stage);
            let mut err = 0.0f64;
            for (p, &(i, j)) in pairs.iter().enumerate() {
                let mut e = 0.0;
                for (l, coef) in E.iter().enumerate() {
                    e += coef * k_stage[l][p];
                }
                e *= h;
                let scale_cs = (y_new[diag[i]].abs() * y_new[diag[j]].abs()).sqrt();
                let sc = config.atol * scale_cs + config.rtol * y[p].abs().max(y_new[p].abs());
                if sc > 0.0 {
                    err = err.max(e.abs() / sc);
                } else if e != 0.0 {
                    err = f64::INFINITY;
                }
            }
            if err <= 1.0 {
                t = if last { target } else { t + h };
                std::mem::swap(&mut y, &mut y_new);
                let (first, rest) = k_stage.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                steps += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h *= factor;
                } else {
                    h = -(h.abs() * factor).max(1e-6);
                }
            } else {
                rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        store(b, target, &y, &mut values);
        if b % (nb / 10).max(1) == 0 {
            info!("kernel march: reached beta = {target:.3} after {steps} steps");
        }
    }
    info!("kernel march: {steps} steps, {rejected} rejected, {evaluations} right-hand sides");

    // Closure against the independent beta = 0 kernel; the table keeps the latter.
    let mut closure = 0.0f64;
    let mut k0 = vec![0.0; n_pairs];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        k0[p] = kernel_beta0(r_grid[i], r_grid[j], &config.beta0)?;
    }
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let scale = (k0[diag[i]] * k0[diag[j]]).sqrt();
        if scale > 0.0 {
            closure = closure.max((y[p] - k0[p]).abs() / scale);
        }
        values[i * n + j] = k0[p];
        values[j * n + i] = k0[p];
    }
    debug!("kernel march: beta = 0 closure residual {closure:e}");

    let meta = TableMeta {
        q_order: config.q_order,
        q_nodes: rule.len(),
        rtol: config.rtol,
        atol: config.atol,
        steps,
        rejected_steps: rejected,
        closure_residual: closure,
        hash: String::new(),
    };
    KernelTable::from_parts(r_grid.to_vec(), beta_grid.to_vec(), values, meta)
}
