//! End-to-end checks of the whole pipeline, shared by the test suite and the `validate` command.
//!
//! Every check reports a pass/fail line; checks never abort the run, and an error inside a
//! check is recorded as a failure of that check.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{
    oracle_sensitivity, oracle_sensitivity_2d, run_estimation_experiment, sensitivity_field, solve_radial, BleachShape,
    ExperimentGeometry, PixelMask, SpaceTimeGrid,
};
use crate::kernel::{kernel_direct, kernel_ode_march, DirectQuadrature, KernelTable, MarchConfig};
use crate::optimizer::{
    default_energy_grid, l2_optimal_design, problem2_map, solve_problem1, sweep_beta, BetaSweep, PowerIteration,
    RadialDiscretization,
};
use crate::sensitivity::shape_sensitivity;
use crate::special::integrate_adaptive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {}: {} ({:.1} s)",
            self.criterion,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Knobs of the validation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationSettings {
    pub seed: u64,
    pub trials: usize,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings { seed: 20_240_601, trials: 200 }
    }
}

/// Runs `f`, timing it and turning errors into a failed outcome.
fn run_check(criterion: u8, name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let out = CheckOutcome {
        criterion,
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    };
    log::info!("{}", out.line());
    out
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Marched kernel on a coarse grid against direct quadrature at random grid nodes.
pub fn check_kernel_routes(seed: u64) -> CheckOutcome {
    run_check(1, "kernel route equivalence", || {
        let r_grid = KernelTable::uniform_grid(5.0, 0.1)?;
        let beta_grid = KernelTable::uniform_grid(20.0, 0.1)?;
        let start = Instant::now();
        let table = kernel_ode_march(&r_grid, &beta_grid, &MarchConfig::default())?;
        let seconds = start.elapsed().as_secs_f64();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let direct = DirectQuadrature::default();
        let mut worst: f64 = 0.0;
        let mut at = (0.0, 0.0, 0.0);
        for _ in 0..20 {
            // Nodes r, s in [0.1, 5] and beta in [0.1, 20].
            let i = rng.random_range(1..r_grid.len());
            let j = rng.random_range(1..r_grid.len());
            let b = rng.random_range(1..beta_grid.len());
            let marched = table.get(b, i, j);
            let reference = kernel_direct(r_grid[i], r_grid[j], beta_grid[b], &direct)?;
            let e = rel(marched, reference);
            if e > worst {
                worst = e;
                at = (r_grid[i], r_grid[j], beta_grid[b]);
            }
        }
        let passed = worst <= 1e-3 && seconds < 300.0;
        Ok((
            passed,
            format!(
                "worst relative deviation {worst:.2e} at (r, s, beta) = {at:?}; 51x51x201 march took {seconds:.1} s"
            ),
        ))
    })
}

/// Kernel-sum sensitivity against the brute-force cylinder quadrature.
pub fn check_oracle_equivalence(table: &KernelTable) -> CheckOutcome {
    run_check(2, "oracle equivalence", || {
        let shapes = [
            BleachShape::disk(0.5)?,
            BleachShape::disk(1.0)?,
            BleachShape::disk(2.0)?,
            BleachShape::annulus(1.0, 2.0)?,
        ];
        let mut worst: f64 = 0.0;
        let mut warnings = 0;
        for shape in &shapes {
            for &beta in &[0.5, 1.0, 3.0, 10.0] {
                let geometry = ExperimentGeometry::unit(beta)?;
                let grid = SpaceTimeGrid::for_shape(shape, 48, 64)?;
                let oracle = oracle_sensitivity(shape, &geometry, &grid, 1e-3)?;
                warnings += usize::from(oracle.warning.is_some());
                let from_table = shape_sensitivity(shape, table, beta)?;
                worst = worst.max(rel(from_table.s_int, oracle.value.s_int));
            }
        }
        Ok((
            worst <= 1e-2 && warnings == 0,
            format!("worst relative deviation {worst:.2e} over 16 cases, {warnings} accuracy warnings"),
        ))
    })
}

fn require_reference_grids(table: &KernelTable) -> Result<()> {
    let r = table.r_grid();
    let b = table.beta_grid();
    let ok = r.len() == 101
        && (r[100] - 5.0).abs() < 1e-9
        && b.len() == 201
        && (b[200] - 20.0).abs() < 1e-9;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "needs the reference grids (r step 0.05 to 5, beta step 0.1 to 20), table has {} radii and {} beta nodes",
            r.len(),
            b.len()
        )))
    }
}

/// Transition points of the optimal jump count.
pub fn check_transitions(table: &KernelTable, sweep: &BetaSweep) -> CheckOutcome {
    run_check(3, "transition reproduction", || {
        require_reference_grids(table)?;
        let expected = [(1, 2, 1.8, 0.3), (2, 3, 6.1, 0.4), (3, 4, 13.8, 0.6)];
        let found: Vec<String> = sweep
            .transitions
            .iter()
            .map(|t| format!("{}->{} at {:.2}", t.from_n, t.to_n, t.beta))
            .collect();
        let passed = sweep.transitions.len() == expected.len()
            && sweep.transitions.iter().zip(&expected).all(|(t, &(from, to, at, tol))| {
                t.from_n == from && t.to_n == to && (t.beta - at).abs() <= tol
            });
        Ok((passed, format!("transitions {}", found.join(", "))))
    })
}

/// Best annulus over best disk where the annulus is optimal.
pub fn check_sensitivity_gain(sweep: &BetaSweep) -> CheckOutcome {
    run_check(4, "sensitivity gain", || {
        let mut ratio: Option<(f64, f64)> = None;
        for r in sweep.results.iter().filter(|r| r.n_star() == 2) {
            let (Some(ann), Some(disk)) = (r.best_for(2), r.best_for(1)) else {
                continue;
            };
            let q = ann.kernel_sum / disk.kernel_sum;
            if ratio.is_none_or(|(best, _)| q > best) {
                ratio = Some((q, r.beta));
            }
        }
        let (q, beta) = ratio.ok_or_else(|| Error::InvalidArgument("annulus is never optimal".into()))?;
        Ok(((1.5..=2.5).contains(&q), format!("max ratio {q:.3} at beta = {beta:.1}")))
    })
}

/// Share of energy-constrained cells won by the double annulus.
pub fn check_problem2_majority(table: &KernelTable) -> CheckOutcome {
    run_check(5, "problem 2 majority", || {
        let r_max = table.r_grid()[table.r_grid().len() - 1];
        let map = problem2_map(table, &default_energy_grid(r_max, 100)?, 4)?;
        let (fours, total) = map.count(4);
        let share = fours as f64 / total as f64;
        Ok((share > 0.5, format!("{fours} of {total} non-empty cells choose N* = 4 ({:.1}%)", 100.0 * share)))
    })
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Empirical error of fitted `D` against the sensitivity prediction.
pub fn check_error_scaling(seed: u64, trials: usize) -> CheckOutcome {
    run_check(6, "error scaling", || {
        let shapes = [BleachShape::disk(1.0)?, BleachShape::annulus(1.0, 2.0)?];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut ratios = Vec::new();
        let start = Instant::now();
        for (s, shape) in shapes.iter().enumerate() {
            for (k, &sigma) in [0.02, 0.05, 0.1].iter().enumerate() {
                let geometry = ExperimentGeometry::unit(1.0)?.with_sigma(sigma)?;
                let cell_seed = seed.wrapping_add(1000 * s as u64 + k as u64);
                let report = run_estimation_experiment(shape, &geometry, trials, cell_seed)?;
                if report.failures > 0 {
                    log::warn!("{} failed fits for sigma = {sigma}", report.failures);
                }
                xs.push(report.predicted.ln());
                ys.push(report.empirical.ln());
                ratios.push(report.ratio());
            }
        }
        let seconds = start.elapsed().as_secs_f64();
        let slope = regression_slope(&xs, &ys);
        let ratio_text: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
        Ok((
            (slope - 1.0).abs() <= 0.15 && seconds < 600.0,
            format!(
                "slope {slope:.3}, empirical/predicted [{}], {trials} trials per cell, {seconds:.0} s",
                ratio_text.join(", ")
            ),
        ))
    })
}

fn table_check(result: Result<()>) -> Result<(bool, String)> {
    Ok(match result {
        Ok(()) => (true, "holds on every table node".into()),
        Err(e) => (false, e.to_string()),
    })
}

/// Naive enumeration: every strictly increasing tuple, full double sum, no shortcuts.
fn naive_best(table: &KernelTable, b: usize, n_max: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(
        table: &KernelTable,
        b: usize,
        start: usize,
        len: usize,
        tuple: &mut Vec<usize>,
        best: &mut Option<(Vec<usize>, f64)>,
    ) {
        if tuple.len() == len {
            let mut sum = 0.0;
            for (j, &a) in tuple.iter().enumerate() {
                for (k, &c) in tuple.iter().enumerate() {
                    let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
                    sum += sign * table.get(b, a, c);
                }
            }
            if best.as_ref().is_none_or(|(_, v)| sum > *v) {
                *best = Some((tuple.clone(), sum));
            }
            return;
        }
        for l in start..table.r_grid().len() {
            tuple.push(l);
            rec(table, b, l + 1, len, tuple, best);
            tuple.pop();
        }
    }
    let first = table.r_grid().iter().position(|&r| r > 0.0).unwrap_or(0);
    (1..=n_max)
        .filter_map(|len| {
            let mut best = None;
            rec(table, b, first, len, &mut Vec::new(), &mut best);
            best
        })
        .collect()
}

/// The property suite: one outcome per property.
pub fn check_invariant_suite(table: &KernelTable, seed: u64) -> Vec<CheckOutcome> {
    let mut out = vec![
        run_check(7, "kernel symmetry", || table_check(table.check_symmetry())),
        run_check(7, "zero-radius kernel", || {
            if table.r_grid()[0] != 0.0 {
                return Ok((false, "table grid does not contain r = 0".into()));
            }
            table_check(table.check_zero_row())
        }),
        run_check(7, "diagonal monotone in beta", || table_check(table.check_diagonal_monotone())),
    ];

    out.push(run_check(7, "mass conservation", || {
        let mut worst: f64 = 0.0;
        let beta: f64 = 1.0;
        for shape in [BleachShape::disk(1.0)?, BleachShape::annulus(1.0, 2.0)?] {
            for &tau in &[0.1, 0.5, 1.0] {
                let reach = shape.outer_radius() + 12.0 * (tau / (2.0 * beta)).sqrt();
                let mut failed = None;
                let res = integrate_adaptive(
                    |q| match solve_radial(&shape, beta, q, tau) {
                        Ok(v) => 2.0 * std::f64::consts::PI * q * v,
                        Err(e) => {
                            failed = Some(e);
                            0.0
                        }
                    },
                    &[0.0, shape.outer_radius(), reach],
                    0.0,
                    1e-10,
                    500,
                );
                if let Some(e) = failed {
                    return Err(e);
                }
                worst = worst.max(rel(res.value, shape.energy()));
            }
        }
        Ok((worst <= 1e-6, format!("worst relative mass defect {worst:.2e}")))
    }));

    out.push(run_check(7, "time-derivative identity", || {
        let beta = 1.0;
        let geometry = ExperimentGeometry::unit(beta)?;
        let mut worst: f64 = 0.0;
        for shape in [BleachShape::disk(1.0)?, BleachShape::annulus(0.6, 1.4)?] {
            for &q in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                for &tau in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                    let field = sensitivity_field(&shape, &geometry, q, tau)?;
                    let h = 1e-4 * tau;
                    let dv = (solve_radial(&shape, beta, q, tau + h)? - solve_radial(&shape, beta, q, tau - h)?)
                        / (2.0 * h);
                    worst = worst.max(rel(field, tau / geometry.diffusivity * dv));
                }
            }
        }
        Ok((worst <= 1e-4, format!("worst relative deviation {worst:.2e} on 2 x 5 x 5 points")))
    }));

    out.push(run_check(7, "rotation invariance", || {
        let geometry = ExperimentGeometry::unit(1.0)?;
        let grid = SpaceTimeGrid::graded(&[], 16, 16)?.with_angles(32)?;
        let (n, h) = (64, 2.0 / 64.0);
        let center = (0.3, 0.1);
        let angle = std::f64::consts::FRAC_PI_3;
        let turned = (
            center.0 * angle.cos() - center.1 * angle.sin(),
            center.0 * angle.sin() + center.1 * angle.cos(),
        );
        let mask = PixelMask::disk(n, h, center, 0.5, 8)?;
        let base = oracle_sensitivity_2d(&mask, &geometry, &grid, 1.0)?.value.s_int;
        let quarter = oracle_sensitivity_2d(&mask.rotate90(), &geometry, &grid, 1.0)?.value.s_int;
        let sixth = oracle_sensitivity_2d(&PixelMask::disk(n, h, turned, 0.5, 8)?, &geometry, &grid, 1.0)?
            .value
            .s_int;
        let centred = oracle_sensitivity_2d(&PixelMask::disk(n, h, (0.0, 0.0), 0.5, 8)?, &geometry, &grid, 1.0)?
            .value
            .s_int;
        let (e90, e60) = (rel(quarter, base), rel(sixth, base));
        Ok((
            e90 <= 1e-12 && e60 <= 1e-3 && centred != base,
            format!("90 degrees: {e90:.1e}, 60 degrees: {e60:.1e}; off-centre vs centred {base:.4e} vs {centred:.4e}"),
        ))
    }));

    out.push(run_check(7, "convexity over relaxed masks", || {
        let geometry = ExperimentGeometry::unit(1.0)?;
        let grid = SpaceTimeGrid::graded(&[], 12, 12)?.with_angles(16)?;
        let (n, h) = (32, 2.0 / 32.0);
        let a = PixelMask::disk(n, h, (0.2, -0.1), 0.4, 4)?;
        let b = PixelMask::rasterize(n, h, 4, |x, y| (x.abs() < 0.6 && y.abs() < 0.25) || x.hypot(y) < 0.15)?;
        let s = |m: &PixelMask| -> Result<f64> { Ok(oracle_sensitivity_2d(m, &geometry, &grid, 1.0)?.value.s_int) };
        let (sa, sb) = (s(&a)?, s(&b)?);
        let mut margin = f64::INFINITY;
        for &lambda in &[0.25, 0.5, 0.75] {
            let mix = s(&PixelMask::blend(lambda, &a, &b)?)?;
            margin = margin.min(lambda * sa + (1.0 - lambda) * sb - mix);
        }
        Ok((margin >= 0.0, format!("smallest convexity margin {margin:.3e}")))
    }));

    out.push(run_check(7, "exhaustive enumeration agreement", || {
        // 20 radii (every fifth node from 0) and a handful of beta layers of the table.
        let r_idx: Vec<usize> = (0..20).map(|i| (5 * i).min(table.r_grid().len() - 1)).collect();
        let mut b_idx: Vec<usize> = vec![0];
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let nb = table.beta_grid().len();
        let mut extra: Vec<usize> = (0..6).map(|_| rng.random_range(1..nb)).collect();
        extra.sort_unstable();
        extra.dedup();
        b_idx.extend(extra);
        let small = table.subtable(&r_idx, &b_idx)?;
        let mut mismatches = Vec::new();
        for (b, &beta) in small.beta_grid().iter().enumerate() {
            let fast = solve_problem1(&small, beta, 4)?;
            let naive = naive_best(&small, b, 4);
            for (cfg, (tuple, value)) in fast.per_n_best.iter().zip(&naive) {
                if &cfg.indices != tuple || rel(cfg.kernel_sum, *value) > 1e-12 {
                    mismatches.push(format!("beta={beta}: {:?} vs {:?}", cfg.indices, tuple));
                }
            }
            if fast.per_n_best.len() != naive.len() {
                mismatches.push(format!("beta={beta}: jump counts differ"));
            }
        }
        Ok((
            mismatches.is_empty(),
            if mismatches.is_empty() {
                format!("identical optima at {} beta values", small.beta_grid().len())
            } else {
                mismatches.join("; ")
            },
        ))
    }));
    out
}

/// L2-constrained design: monotone Rayleigh quotients and stability under radial refinement.
pub fn check_power_iteration() -> CheckOutcome {
    run_check(8, "power-iteration design", || {
        let geometry = ExperimentGeometry::unit(1.0)?;
        let grid = SpaceTimeGrid::graded(&[], 64, 64)?;
        let it = PowerIteration::default();
        let coarse = l2_optimal_design(&geometry, &RadialDiscretization { r_max: 3.0, cells: 64 }, 1.0, &grid, &it)?;
        let fine = l2_optimal_design(&geometry, &RadialDiscretization { r_max: 3.0, cells: 128 }, 1.0, &grid, &it)?;
        let monotone = [&coarse, &fine]
            .iter()
            .all(|d| d.rayleigh_history.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-14)));
        let change = rel(fine.singular_value, coarse.singular_value);
        Ok((
            monotone && change <= 1e-2,
            format!(
                "sigma_1 = {:.6} (64 rings) vs {:.6} (128 rings), change {change:.2e}, monotone: {monotone}",
                coarse.singular_value, fine.singular_value
            ),
        ))
    })
}

/// Every check, in criterion order.
pub fn run_all(table: &KernelTable, settings: &ValidationSettings) -> ValidationReport {
    let mut checks = vec![check_kernel_routes(settings.seed), check_oracle_equivalence(table)];
    match sweep_beta(table, 4) {
        Ok(sweep) => {
            checks.push(check_transitions(table, &sweep));
            checks.push(check_sensitivity_gain(&sweep));
        }
        Err(e) => {
            for (c, name) in [(3, "transition reproduction"), (4, "sensitivity gain")] {
                checks.push(run_check(c, name, || Err(Error::InvalidArgument(format!("sweep failed: {e}")))));
            }
        }
    }
    checks.push(check_problem2_majority(table));
    checks.push(check_error_scaling(settings.seed, settings.trials));
    checks.extend(check_invariant_suite(table, settings.seed));
    checks.push(check_power_iteration());
    ValidationReport { checks }
}
