//! End-to-end checks on a small marched table: r in [0, 3] with step 0.1.

use std::sync::OnceLock;

use bleach_core::kernel::{kernel_ode_march, load_table, save_table, MarchConfig};
use bleach_core::optimizer::{solve_problem1, solve_problem2};
use bleach_core::sensitivity::{kernel_sum, shape_energy};
use bleach_core::{BleachShape, KernelTable};

const BETAS: [f64; 6] = [0.0, 1.0, 3.0, 10.0, 12.0, 18.0];

fn table() -> &'static KernelTable {
    static TABLE: OnceLock<KernelTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let r = KernelTable::uniform_grid(3.0, 0.1).unwrap();
        kernel_ode_march(&r, &BETAS, &MarchConfig::default()).expect("march")
    })
}

#[test]
fn optimal_jump_count_follows_beta() {
    let t = table();
    for (beta, expected) in [(1.0, 1), (3.0, 2), (10.0, 3), (18.0, 4)] {
        let res = solve_problem1(t, beta, 4).unwrap();
        assert_eq!(res.n_star(), expected, "beta = {beta}");
    }
}

#[test]
fn overall_best_dominates_every_jump_count() {
    let t = table();
    for &beta in &BETAS[1..] {
        let res = solve_problem1(t, beta, 4).unwrap();
        let best = res.overall_best.kernel_sum;
        for n in 1..=4 {
            let c = res.best_for(n).unwrap();
            assert!(c.kernel_sum <= best);
            assert_eq!(c.jump_count(), n);
        }
    }
}

#[test]
fn raising_n_max_never_lowers_the_optimum() {
    let t = table();
    for &beta in &BETAS[1..] {
        let mut prev = f64::NEG_INFINITY;
        for n_max in 1..=4 {
            let v = solve_problem1(t, beta, n_max).unwrap().overall_best.kernel_sum;
            assert!(v >= prev);
            prev = v;
        }
    }
}

#[test]
fn sweep_is_bit_for_bit_reproducible() {
    let t = table();
    let a = solve_problem1(t, 10.0, 4).unwrap();
    let b = solve_problem1(t, 10.0, 4).unwrap();
    assert_eq!(a.overall_best.indices, b.overall_best.indices);
    assert_eq!(a.overall_best.kernel_sum.to_bits(), b.overall_best.kernel_sum.to_bits());
}

#[test]
fn best_disk_is_interior_at_small_beta() {
    let t = table();
    let res = solve_problem1(t, 1.0, 1).unwrap();
    let r = res.overall_best.radii[0];
    assert!(r > 0.0 && r < 3.0, "best disk radius {r}");
}

#[test]
fn coincident_pair_collapses() {
    let t = table();
    let base = BleachShape::new(vec![0.5, 1.2]).unwrap();
    let v = kernel_sum(&base, t, 10.0).unwrap();
    // A zero-width annulus outside the shape contributes nothing.
    let mut radii = base.radii().to_vec();
    radii.extend([2.0, 2.0]);
    let v2 = bleach_core::sensitivity::alternating_sum(&radii, |r, s| t.interpolate(r, s, 10.0)).unwrap();
    assert!((v - v2).abs() <= 1e-12 * v.abs().max(1.0));
}

#[test]
fn energy_envelope_bounds_enumerated_shapes() {
    let t = table();
    let shapes = [
        BleachShape::new(vec![0.8, 1.5]).unwrap(),
        BleachShape::new(vec![0.3, 0.9, 1.4]).unwrap(),
        BleachShape::new(vec![0.4, 0.7, 1.1, 1.6]).unwrap(),
    ];
    let grid: Vec<f64> = shapes.iter().map(shape_energy).collect();
    let cells = solve_problem2(t, 10.0, &grid, 4).unwrap();
    for (shape, cell) in shapes.iter().zip(&cells) {
        let v = kernel_sum(shape, t, 10.0).unwrap();
        let cell = cell.as_ref().expect("non-empty cell");
        assert!(cell.kernel_sum >= v - 1e-12 * v.abs(), "{:?}: {} < {v}", shape.radii(), cell.kernel_sum);
    }
}

#[test]
fn table_survives_save_and_load() {
    let t = table();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.ktab");
    save_table(t, &path).unwrap();
    let back = load_table(&path).unwrap();
    assert_eq!(back.r_grid(), t.r_grid());
    assert_eq!(back.beta_grid(), t.beta_grid());
    assert!(back.values().iter().zip(t.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn corrupted_table_is_rejected() {
    let t = table();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.ktab");
    save_table(t, &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    let n = bytes.len();
    bytes[n - 9] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    assert!(load_table(&path).is_err());
    std::fs::write(&path, &bytes[..n / 2]).unwrap();
    assert!(load_table(&path).is_err());
}
