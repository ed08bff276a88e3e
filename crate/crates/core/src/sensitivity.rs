//! Sensitivity of a radial bleach shape as an alternating double sum of kernel values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{BleachShape, ExperimentGeometry};
use crate::kernel::KernelTable;

/// Relative size below which a negative kernel sum is treated as rounding noise.
pub const NEGATIVE_SUM_SLACK: f64 = 1e-9;

/// `s_int = prefactor * kernel_sum`, where `prefactor = 32 pi beta^3 T^3 / R^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityValue {
    pub kernel_sum: f64,
    pub prefactor: f64,
    pub s_int: f64,
    pub beta: f64,
}

impl SensitivityValue {
    pub fn new(kernel_sum: f64, geometry: &ExperimentGeometry) -> Self {
        let prefactor = geometry.sensitivity_prefactor();
        SensitivityValue {
            kernel_sum,
            prefactor,
            s_int: prefactor * kernel_sum,
            beta: geometry.beta(),
        }
    }

    /// Builds the value from a directly computed `s_int`.
    pub fn from_s_int(s_int: f64, geometry: &ExperimentGeometry) -> Self {
        let prefactor = geometry.sensitivity_prefactor();
        SensitivityValue {
            kernel_sum: s_int / prefactor,
            prefactor,
            s_int,
            beta: geometry.beta(),
        }
    }
}

/// Applies the clamping rule for small negative sums. `scale` is the sum of the
/// absolute values of the terms.
pub(crate) fn clamp_kernel_sum(sum: f64, scale: f64) -> Result<f64> {
    if sum >= 0.0 {
        Ok(sum)
    } else if sum >= -NEGATIVE_SUM_SLACK * scale {
        log::warn!("clamping kernel sum {sum:e} (scale {scale:e}) to zero");
        Ok(0.0)
    } else {
        Err(Error::NegativeKernelSum(sum))
    }
}

/// `sum_{j,k} (-1)^{j+k} k(r_j, r_k)` from an arbitrary kernel evaluator.
pub fn alternating_sum(radii: &[f64], mut kernel: impl FnMut(f64, f64) -> Result<f64>) -> Result<f64> {
    let mut sum = 0.0;
    let mut scale = 0.0;
    for (j, &rj) in radii.iter().enumerate() {
        for (k, &rk) in radii.iter().enumerate().skip(j) {
            let mult = if j == k { 1.0 } else { 2.0 };
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            let term = mult * sign * kernel(rj, rk)?;
            sum += term;
            scale += term.abs();
        }
    }
    clamp_kernel_sum(sum, scale)
}

/// Dimensionless kernel sum of `shape` at `beta`, interpolated from the table.
pub fn kernel_sum(shape: &BleachShape, table: &KernelTable, beta: f64) -> Result<f64> {
    alternating_sum(shape.radii(), |r, s| table.interpolate(r, s, beta))
}

/// Sensitivity with the normalisation `R = T = 1`.
pub fn shape_sensitivity(shape: &BleachShape, table: &KernelTable, beta: f64) -> Result<SensitivityValue> {
    let geometry = ExperimentGeometry::unit(beta)?;
    shape_sensitivity_in(shape, table, &geometry)
}

/// Sensitivity for a concrete experiment geometry.
pub fn shape_sensitivity_in(
    shape: &BleachShape,
    table: &KernelTable,
    geometry: &ExperimentGeometry,
) -> Result<SensitivityValue> {
    let sum = kernel_sum(shape, table, geometry.beta())?;
    Ok(SensitivityValue::new(sum, geometry))
}

/// `pi` times the occupied area, in units of `R^2`.
pub fn shape_energy(shape: &BleachShape) -> f64 {
    shape.energy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TableMeta;
    use approx::assert_relative_eq;

    fn synthetic_table() -> KernelTable {
        // Any symmetric positive semidefinite kernel with k(0, .) = 0 will do here.
        let r: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let betas = vec![0.0, 1.0, 2.0];
        let mut values = Vec::new();
        for &b in &betas {
            for &x in &r {
                for &y in &r {
                    values.push(x * y * (-(x - y) * (x - y) - 0.1 * b).exp());
                }
            }
        }
        KernelTable::from_parts(r, betas, values, TableMeta::default()).unwrap()
    }

    #[test]
    fn disk_and_annulus_sums() {
        let t = synthetic_table();
        let k = |r: f64, s: f64| t.interpolate(r, s, 1.0).unwrap();
        let disk = kernel_sum(&BleachShape::disk(1.5).unwrap(), &t, 1.0).unwrap();
        assert_eq!(disk, k(1.5, 1.5));
        let ann = kernel_sum(&BleachShape::annulus(1.0, 2.0).unwrap(), &t, 1.0).unwrap();
        assert_relative_eq!(ann, k(1.0, 1.0) - 2.0 * k(1.0, 2.0) + k(2.0, 2.0), max_relative = 1e-14);
    }

    #[test]
    fn coincident_pair_cancels() {
        let t = synthetic_table();
        let base = BleachShape::new(vec![0.5, 1.5]).unwrap();
        let s0 = kernel_sum(&base, &t, 2.0).unwrap();
        let s1 = alternating_sum(&[0.5, 1.5, 3.0, 3.0], |r, s| t.interpolate(r, s, 2.0)).unwrap();
        assert_relative_eq!(s0, s1, max_relative = 1e-12);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let t = synthetic_table();
        assert!(kernel_sum(&BleachShape::disk(6.0).unwrap(), &t, 1.0).is_err());
        assert!(kernel_sum(&BleachShape::disk(1.0).unwrap(), &t, 3.0).is_err());
    }

    #[test]
    fn prefactor_scales_as_beta_cubed() {
        let a = SensitivityValue::new(0.3, &ExperimentGeometry::unit(1.0).unwrap());
        let b = SensitivityValue::new(0.3, &ExperimentGeometry::unit(2.0).unwrap());
        assert_relative_eq!(b.s_int / a.s_int, 8.0, max_relative = 1e-14);
        assert_relative_eq!(a.s_int, a.prefactor * a.kernel_sum, max_relative = 1e-12);
    }

    #[test]
    fn clamping_rule() {
        assert_eq!(clamp_kernel_sum(-1e-12, 1.0).unwrap(), 0.0);
        assert!(clamp_kernel_sum(-1e-6, 1.0).is_err());
        assert_eq!(clamp_kernel_sum(0.5, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn energies() {
        use std::f64::consts::PI;
        assert_relative_eq!(shape_energy(&BleachShape::disk(1.0).unwrap()), PI);
        assert_relative_eq!(shape_energy(&BleachShape::annulus(1.0, 2.0).unwrap()), 3.0 * PI);
        let double = BleachShape::new(vec![0.5, 1.0, 1.5, 2.0]).unwrap();
        assert_relative_eq!(shape_energy(&double), 2.5 * PI, max_relative = 1e-14);
    }
}
