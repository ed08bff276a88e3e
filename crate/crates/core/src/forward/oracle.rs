//! Brute-force sensitivity by quadrature of `(dU/dD)^2` over the observation cylinder.

use serde::{Deserialize, Serialize};

use super::radial::scaled_laplacian;
use super::{BleachShape, ExperimentGeometry, SpaceTimeGrid};
use crate::error::Result;
use crate::sensitivity::SensitivityValue;

/// Oracle value together with its self-estimated relative quadrature error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: SensitivityValue,
    /// `|S(grid) - S(coarsened grid)| / S(grid)`; pessimistic for spectrally convergent rules.
    pub error_estimate: f64,
    pub warning: Option<String>,
}

pub(crate) fn attach_estimate(
    value: SensitivityValue,
    coarse_s_int: f64,
    tolerance: f64,
) -> OracleResult {
    let error_estimate = if value.s_int == coarse_s_int {
        0.0
    } else {
        (value.s_int - coarse_s_int).abs() / value.s_int.abs()
    };
    let warning = (error_estimate > tolerance).then(|| {
        let msg = format!(
            "quadrature grid may be too coarse: estimated relative error {error_estimate:.2e} exceeds {tolerance:.2e}"
        );
        log::warn!("{msg}");
        msg
    });
    OracleResult {
        value,
        error_estimate,
        warning,
    }
}

fn cylinder_integral(shape: &BleachShape, geometry: &ExperimentGeometry, grid: &SpaceTimeGrid) -> f64 {
    let beta = geometry.beta();
    let rw = grid.radial_weights();
    let mut acc = 0.0;
    for (&q, &wq) in grid.radial_nodes().iter().zip(&rw) {
        for (&tau, &wt) in grid.time_nodes().iter().zip(grid.time_weights()) {
            let f = tau * scaled_laplacian(shape, beta, q, tau);
            acc += wq * wt * f * f;
        }
    }
    let (r, t) = (geometry.radius, geometry.horizon);
    // S = R^2 T * int (T / R^2 tau Lap v)^2 = T^3 / R^2 * int (tau Lap v)^2
    t * t * t / (r * r) * acc
}

/// `S_int` of a radial shape by direct quadrature of the sensitivity field on `grid`.
/// A warning is attached when the comparison with the coarsened grid exceeds `tolerance`.
pub fn oracle_sensitivity(
    shape: &BleachShape,
    geometry: &ExperimentGeometry,
    grid: &SpaceTimeGrid,
    tolerance: f64,
) -> Result<OracleResult> {
    geometry.validate()?;
    let fine = cylinder_integral(shape, geometry, grid);
    let coarse = cylinder_integral(shape, geometry, &grid.coarsened()?);
    Ok(attach_estimate(SensitivityValue::from_s_int(fine, geometry), coarse, tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_direct, DirectQuadrature};
    use approx::assert_relative_eq;

    #[test]
    fn disk_matches_kernel_diagonal() {
        let g = ExperimentGeometry::unit(1.0).unwrap();
        let shape = BleachShape::disk(1.0).unwrap();
        let grid = SpaceTimeGrid::for_shape(&shape, 48, 48).unwrap();
        let res = oracle_sensitivity(&shape, &g, &grid, 1e-3).unwrap();
        let k = kernel_direct(1.0, 1.0, 1.0, &DirectQuadrature::default()).unwrap();
        assert_relative_eq!(res.value.kernel_sum, k, max_relative = 1e-3);
        assert!(res.warning.is_none(), "{res:?}");
    }

    #[test]
    fn vanishing_disk_gives_vanishing_sensitivity() {
        let g = ExperimentGeometry::unit(1.0).unwrap();
        let grid = SpaceTimeGrid::default();
        let small = oracle_sensitivity(&BleachShape::disk(1e-3).unwrap(), &g, &grid, 1.0).unwrap();
        let unit = oracle_sensitivity(&BleachShape::disk(1.0).unwrap(), &g, &grid, 1.0).unwrap();
        assert!(small.value.s_int < 1e-8 * unit.value.s_int);
    }

    #[test]
    fn coarse_grid_gets_a_warning() {
        let g = ExperimentGeometry::unit(10.0).unwrap();
        let shape = BleachShape::annulus(0.5, 0.8).unwrap();
        let grid = SpaceTimeGrid::tensor(4, 4).unwrap();
        let res = oracle_sensitivity(&shape, &g, &grid, 1e-3).unwrap();
        assert!(res.warning.is_some());
    }
}
