//! Forward model and estimation experiment through the public API.

use bleach_core::forward::{
    oracle_sensitivity, run_estimation_experiment, sensitivity_field, EstimationReport, SpaceTimeGrid,
};
use bleach_core::kernel::{kernel_direct, DirectQuadrature};
use bleach_core::sensitivity::alternating_sum;
use bleach_core::{BleachShape, ExperimentGeometry, SensitivityValue};

#[test]
fn disk_centre_field_at_final_time() {
    let disk = BleachShape::disk(1.0).unwrap();
    let g = ExperimentGeometry::unit(1.0).unwrap();
    let v = sensitivity_field(&disk, &g, 0.0, 1.0).unwrap();
    let expected = -4.0 * (-1.0f64).exp();
    assert!((v - expected).abs() < 1e-8 * expected.abs(), "{v} vs {expected}");
}

#[test]
fn oracle_matches_direct_kernel_sum() {
    let quad = DirectQuadrature::default();
    for (radii, beta) in [(vec![1.0], 1.0), (vec![0.6, 1.3], 4.0), (vec![0.4, 0.9, 1.5], 9.0)] {
        let shape = BleachShape::new(radii).unwrap();
        let g = ExperimentGeometry::unit(beta).unwrap();
        let sum = alternating_sum(shape.radii(), |r, s| kernel_direct(r, s, beta, &quad)).unwrap();
        let direct = SensitivityValue::new(sum, &g);
        let grid = SpaceTimeGrid::for_shape(&shape, 48, 64).unwrap();
        let oracle = oracle_sensitivity(&shape, &g, &grid, 1e-6).unwrap();
        let rel = (oracle.value.s_int - direct.s_int).abs() / direct.s_int;
        assert!(rel < 1e-5, "{:?} beta {beta}: rel {rel:e}", shape.radii());
    }
}

fn estimate(sigma: f64, trials: usize) -> EstimationReport {
    let disk = BleachShape::disk(1.0).unwrap();
    let g = ExperimentGeometry::unit(1.0).unwrap().with_sigma(sigma).unwrap();
    run_estimation_experiment(&disk, &g, trials, 7).unwrap()
}

#[test]
fn noiseless_data_recover_the_diffusivity() {
    let r = estimate(0.0, 10);
    assert_eq!(r.failures, 0);
    for d in r.estimates.iter().flatten() {
        assert!((d - r.true_diffusivity).abs() < 1e-6 * r.true_diffusivity);
    }
}

#[test]
fn error_grows_with_noise_squared() {
    let small = estimate(0.05, 200);
    let large = estimate(0.1, 200);
    assert!((0.5..=2.0).contains(&small.ratio()), "ratio {}", small.ratio());
    let quotient = large.empirical / small.empirical;
    let se = 4.0 * (large.standard_error / large.empirical + small.standard_error / small.empirical);
    assert!((quotient - 4.0).abs() <= 3.0 * se, "quotient {quotient}, tolerance {}", 3.0 * se);
}

#[test]
fn estimation_is_reproducible_from_the_seed() {
    let a = estimate(0.05, 10);
    let b = estimate(0.05, 10);
    assert_eq!(a.estimates, b.estimates);
}
