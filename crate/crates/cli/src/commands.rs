//! The five commands. Each writes its outputs plus a resolved-config copy into `out_dir`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bleach_core::forward::{run_estimation_experiment, EstimationReport};
use bleach_core::kernel::{kernel_ode_march, load_table, load_table_unchecked, save_table, write_atomic, MarchConfig};
use bleach_core::optimizer::{
    default_energy_grid, find_transitions, problem2_map, sweep_beta, BetaSweep, EnergyConstrainedMap,
};
use bleach_core::validation::{self, CheckOutcome, ValidationReport, ValidationSettings};
use bleach_core::{BleachShape, ExperimentGeometry, KernelTable};

use crate::config::RunConfig;
use crate::records::{self, EnergyRow, Figure1Row, SweepRow};
use crate::svg::{self, Series, PALETTE};

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn write_resolved_config(cfg: &RunConfig, command: &str) -> Result<()> {
    let path = out_path(cfg, &format!("{command}.config"));
    write_atomic(&path, cfg.to_text().as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn march_config(cfg: &RunConfig) -> MarchConfig {
    MarchConfig {
        rtol: cfg.tol,
        atol: cfg.tol * 1e-2,
        ..MarchConfig::default()
    }
}

fn requested_grids(cfg: &RunConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((
        KernelTable::uniform_grid(cfg.r_max, cfg.r_step)?,
        KernelTable::uniform_grid(cfg.beta_max, cfg.beta_step)?,
    ))
}

fn cache_matches(table: &KernelTable, r: &[f64], b: &[f64], march: &MarchConfig) -> bool {
    table.r_grid() == r
        && table.beta_grid() == b
        && table.meta.rtol == march.rtol
        && table.meta.atol == march.atol
        && table.meta.q_order == march.q_order
}

/// Builds the kernel table unless an identical one is already cached.
pub fn tabulate(cfg: &RunConfig) -> Result<KernelTable> {
    cfg.validate()?;
    let (r, b) = requested_grids(cfg)?;
    let march = march_config(cfg);
    if cfg.cache.exists() {
        match load_table(&cfg.cache) {
            Ok(t) if cache_matches(&t, &r, &b, &march) => {
                log::info!("cache hit: {} ({})", cfg.cache.display(), t.meta.hash);
                write_resolved_config(cfg, "tabulate")?;
                return Ok(t);
            }
            Ok(_) => log::info!("cached table has different settings; rebuilding"),
            Err(e) => log::warn!("cached table unusable ({e}); rebuilding"),
        }
    }
    log::info!("tabulating {} radii x {} beta nodes", r.len(), b.len());
    let table = kernel_ode_march(&r, &b, &march)?;
    save_table(&table, &cfg.cache).with_context(|| format!("saving {}", cfg.cache.display()))?;
    log::info!(
        "wrote {}: {} steps, closure residual {:.2e}",
        cfg.cache.display(),
        table.meta.steps,
        table.meta.closure_residual
    );
    write_resolved_config(cfg, "tabulate")?;
    Ok(table)
}

fn missing_table(path: &Path) -> anyhow::Error {
    anyhow::anyhow!(
        "no kernel table at {}; run `bleach tabulate` with the same --cache first",
        path.display()
    )
}

pub fn load_cached(cfg: &RunConfig) -> Result<KernelTable> {
    if !cfg.cache.exists() {
        return Err(missing_table(&cfg.cache));
    }
    load_table(&cfg.cache).with_context(|| format!("loading {}", cfg.cache.display()))
}

/// Sweep restricted to the configured beta window.
pub fn windowed_sweep(cfg: &RunConfig, table: &KernelTable) -> Result<BetaSweep> {
    let mut sweep = sweep_beta(table, cfg.n_max)?;
    let eps = 1e-9;
    sweep
        .results
        .retain(|r| r.beta >= cfg.beta_min - eps && r.beta <= cfg.beta_max + eps);
    if sweep.results.is_empty() {
        bail!("no table beta nodes in [{}, {}]", cfg.beta_min, cfg.beta_max);
    }
    sweep.transitions = find_transitions(&sweep.results);
    Ok(sweep)
}

pub fn optimize(cfg: &RunConfig) -> Result<BetaSweep> {
    cfg.validate()?;
    let table = load_cached(cfg)?;
    let sweep = windowed_sweep(cfg, &table)?;
    for t in &sweep.transitions {
        log::info!(
            "N* {} -> {} at beta = {:.2} +- {:.2}{}",
            t.from_n,
            t.to_n,
            t.beta,
            t.uncertainty,
            if t.anomaly { " (anomalous decrease)" } else { "" }
        );
    }

    let fig1: Vec<Figure1Row> = records::sweep_rows(&sweep);
    records::write_rows(
        &out_path(cfg, "figure1.csv"),
        &[
            "log values are natural logs of the dimensionless kernel sum",
            "the shape-independent prefactor 32 pi beta^3 T^3 / R^2 is omitted",
        ],
        &fig1,
    )?;
    let rows: Vec<SweepRow> = records::sweep_rows(&sweep);
    records::write_rows(&out_path(cfg, "sweep.csv"), &["s_int uses R = T = 1"], &rows)?;
    let energy: Vec<EnergyRow> = records::sweep_rows(&sweep);
    records::write_rows(&out_path(cfg, "figure3.csv"), &["energy = pi x occupied area, units of R^2"], &energy)?;
    records::write_rows(&out_path(cfg, "transitions.csv"), &[], &sweep.transitions)?;
    records::write_json(&out_path(cfg, "sweep.json"), &sweep)?;

    let markers: Vec<f64> = sweep.transitions.iter().map(|t| t.beta).collect();
    let betas: Vec<f64> = fig1.iter().map(|r| r.beta).collect();
    let mut series = vec![Series {
        label: "optimum".into(),
        points: fig1.iter().map(|r| (r.beta, r.log_kernel_sum_overall)).collect(),
        color: "black",
        dashed: false,
    }];
    for n in 1..=cfg.n_max.min(4) {
        let pts = fig1
            .iter()
            .map(|r| {
                let v = [r.log_best_n1, r.log_best_n2, r.log_best_n3, r.log_best_n4][n - 1];
                (r.beta, v.unwrap_or(f64::NAN))
            })
            .collect();
        series.push(Series {
            label: format!("best N = {n}"),
            points: pts,
            color: PALETTE[n - 1],
            dashed: true,
        });
    }
    let svg1 = svg::line_chart("Optimal sensitivity", "beta", "ln kernel sum", &series, &markers);
    write_atomic(&out_path(cfg, "figure1.svg"), svg1.as_bytes())?;

    let radii: Vec<Series> = (0..4)
        .map(|k| Series {
            label: format!("r{}", k + 1),
            points: rows
                .iter()
                .map(|r| (r.beta, [r.r1, r.r2, r.r3, r.r4][k].unwrap_or(f64::NAN)))
                .collect(),
            color: PALETTE[k],
            dashed: false,
        })
        .collect();
    let svg2 = svg::line_chart("Radii of the optimal shape", "beta", "radius / R", &radii, &markers);
    write_atomic(&out_path(cfg, "figure2.svg"), svg2.as_bytes())?;

    let e_series = [Series {
        label: "energy".into(),
        points: betas.iter().zip(&energy).map(|(&b, e)| (b, e.energy)).collect(),
        color: PALETTE[0],
        dashed: false,
    }];
    let svg3 = svg::line_chart("Energy of the optimal shape", "beta", "energy / R^2", &e_series, &markers);
    write_atomic(&out_path(cfg, "figure3.svg"), svg3.as_bytes())?;
    write_resolved_config(cfg, "optimize")?;
    Ok(sweep)
}

pub fn problem2(cfg: &RunConfig) -> Result<EnergyConstrainedMap> {
    cfg.validate()?;
    let table = load_cached(cfg)?;
    let r_max = table.r_grid()[table.r_grid().len() - 1];
    let energies = default_energy_grid(r_max, cfg.energy_bins)?;
    let mut map = problem2_map(&table, &energies, cfg.n_max)?;
    let eps = 1e-9;
    let keep: Vec<bool> = map
        .beta_grid
        .iter()
        .map(|&b| b >= cfg.beta_min - eps && b <= cfg.beta_max + eps)
        .collect();
    let mut it = keep.iter();
    map.beta_grid.retain(|_| *it.next().unwrap());
    let mut it = keep.iter();
    map.cells.retain(|_| *it.next().unwrap());

    for n in 1..=cfg.n_max {
        let (count, total) = map.count(n);
        log::info!("N* = {n}: {count} of {total} non-empty cells");
    }
    records::write_rows(
        &out_path(cfg, "problem2.csv"),
        &["energy = pi x occupied area in units of R^2; empty cells have blank nstar"],
        &records::problem2_rows(&map),
    )?;
    records::write_json(&out_path(cfg, "problem2.json"), &map)?;
    let cells: Vec<Vec<Option<usize>>> = map
        .cells
        .iter()
        .map(|col| col.iter().map(|c| c.as_ref().map(|c| c.n_star - 1)).collect())
        .collect();
    let labels: Vec<(usize, String)> = (0..cfg.n_max).map(|k| (k, format!("N* = {}", k + 1))).collect();
    let svg4 = svg::category_map(
        "Optimal jump count at fixed energy",
        "beta",
        "energy / R^2",
        &map.beta_grid,
        &map.energy_grid,
        &cells,
        &labels,
    );
    write_atomic(&out_path(cfg, "figure4.svg"), svg4.as_bytes())?;
    write_resolved_config(cfg, "problem2")?;
    Ok(map)
}

/// Runs the acceptance checks against the cached table. Invariant defects of the table are
/// reported as failed checks rather than load errors.
pub fn validate(cfg: &RunConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    if !cfg.cache.exists() {
        return Err(missing_table(&cfg.cache));
    }
    let table = load_table_unchecked(&cfg.cache).with_context(|| format!("loading {}", cfg.cache.display()))?;
    let settings = ValidationSettings {
        seed: cfg.seed,
        trials: cfg.trials,
    };
    let wanted = |c: u8| cfg.criteria.is_empty() || cfg.criteria.contains(&c);
    let report = if (1..=8).all(wanted) {
        validation::run_all(&table, &settings)
    } else {
        let mut checks: Vec<CheckOutcome> = Vec::new();
        if wanted(1) {
            checks.push(validation::check_kernel_routes(settings.seed));
        }
        if wanted(2) {
            checks.push(validation::check_oracle_equivalence(&table));
        }
        if wanted(3) || wanted(4) {
            let sweep = sweep_beta(&table, 4)?;
            if wanted(3) {
                checks.push(validation::check_transitions(&table, &sweep));
            }
            if wanted(4) {
                checks.push(validation::check_sensitivity_gain(&sweep));
            }
        }
        if wanted(5) {
            checks.push(validation::check_problem2_majority(&table));
        }
        if wanted(6) {
            checks.push(validation::check_error_scaling(settings.seed, settings.trials));
        }
        if wanted(7) {
            checks.extend(validation::check_invariant_suite(&table, settings.seed));
        }
        if wanted(8) {
            checks.push(validation::check_power_iteration());
        }
        ValidationReport { checks }
    };
    records::write_json(&out_path(cfg, "validation.json"), &report)?;
    write_resolved_config(cfg, "validate")?;
    Ok(report)
}

pub fn estimate(cfg: &RunConfig) -> Result<EstimationReport> {
    cfg.validate()?;
    if !(cfg.sigma > 0.0) {
        bail!("the estimation experiment needs sigma > 0");
    }
    let shape = BleachShape::new(cfg.shape.clone())?;
    let geometry = ExperimentGeometry::unit(cfg.beta)?.with_sigma(cfg.sigma)?;
    let report = run_estimation_experiment(&shape, &geometry, cfg.trials, cfg.seed)?;
    records::write_json(&out_path(cfg, "estimation.json"), &report)?;
    write_resolved_config(cfg, "estimate")?;
    Ok(report)
}
