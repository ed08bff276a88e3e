//! Green's-function solution for radial bleach shapes and its `D`-sensitivity.
//!
//! In scaled variables (`q = |x|/R`, `tau = t/T`) the solution is
//! `v(q, tau) = \int_0^inf (s / sigma^2) e^{-(q - s)^2 / (2 sigma^2)} i0e(q s / sigma^2) g(s) ds`
//! with `sigma^2 = tau / (2 beta)`, and `dU/dD (qR, tau T) = (T / R^2) tau Lap v(q, tau)` where,
//! with `p = beta / tau`, `Lap v = 4 p^2 sum_j c_j r_j e^{-p (q - r_j)^2} (r_j i0e(2pqr_j) - q i1e(2pqr_j))`
//! and `c_j` the jump signs of `g`.

use super::{BleachShape, ExperimentGeometry};
use crate::error::{Error, Result};
use crate::kernel::radial_factor;
use crate::special::{i0e, integrate_adaptive};

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "scaled time must be positive, got {tau}; read the initial condition from the shape"
        )))
    }
}

/// Scaled concentration `v(q, tau)` of the free-space diffusion problem started from `shape`.
pub fn solve_radial(shape: &BleachShape, beta: f64, q: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if !(beta > 0.0) || !(q >= 0.0) {
        return Err(Error::Domain(format!("need beta > 0 and q >= 0, got beta={beta}, q={q}")));
    }
    let var = tau / (2.0 * beta);
    let sd = var.sqrt();
    let mut total = 0.0;
    for (a, b) in shape.occupied_intervals() {
        let mut pts = vec![a, b];
        for k in [-10.0, -4.0, -1.0, 0.0, 1.0, 4.0, 10.0] {
            let x = q + k * sd;
            if x > a && x < b {
                pts.push(x);
            }
        }
        pts.sort_by(f64::total_cmp);
        let res = integrate_adaptive(
            |s| {
                let d = q - s;
                s / var * (-0.5 * d * d / var).exp() * i0e(q * s / var)
            },
            &pts,
            1e-15,
            1e-12,
            500,
        );
        if !res.converged {
            return Err(Error::Quadrature {
                estimate: res.value,
                error: res.error,
            });
        }
        total += res.value;
    }
    Ok(total)
}

/// `Lap v(q, tau)` (scaled Laplacian) for a shape at parameter `beta`.
pub fn scaled_laplacian(shape: &BleachShape, beta: f64, q: f64, tau: f64) -> f64 {
    let p = beta / tau;
    let mut acc = 0.0;
    for (j, &r) in shape.radii().iter().enumerate() {
        acc += shape.jump_sign(j) * r * radial_factor(q, r, p, 0.0);
    }
    4.0 * p * p * acc
}

/// `dU/dD` at the physical point `(q R, tau T)`, per unit reference concentration.
pub fn sensitivity_field(shape: &BleachShape, geometry: &ExperimentGeometry, q: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if !(q >= 0.0) {
        return Err(Error::Domain(format!("scaled radius must be nonnegative, got {q}")));
    }
    let lap = scaled_laplacian(shape, geometry.beta(), q, tau);
    Ok(geometry.horizon / (geometry.radius * geometry.radius) * tau * lap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn disk_centre_closed_form() {
        for &(a, beta, tau) in &[(1.0, 1.0, 0.5), (0.5, 3.0, 1.0), (2.0, 0.2, 0.1)] {
            let shape = BleachShape::disk(a).unwrap();
            let v = solve_radial(&shape, beta, 0.0, tau).unwrap();
            let exact = 1.0 - (-beta * a * a / tau).exp();
            assert_relative_eq!(v, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn short_time_recovers_initial_condition() {
        let shape = BleachShape::new(vec![0.4, 1.0, 1.6]).unwrap();
        let beta = 1.0;
        for &(q, width) in &[(0.2, 0.4), (1.3, 0.6)] {
            let tau = 1e-6 * width * width * beta;
            let v = solve_radial(&shape, beta, q, tau).unwrap();
            assert!((v - 1.0).abs() < 1e-3, "q={q}: {v}");
        }
        let v = solve_radial(&shape, beta, 0.7, 1e-7).unwrap();
        assert!(v.abs() < 1e-3);
    }

    #[test]
    fn mass_is_conserved() {
        let beta: f64 = 1.0;
        for shape in [BleachShape::disk(1.0).unwrap(), BleachShape::annulus(1.0, 2.0).unwrap()] {
            for &tau in &[0.1, 1.0] {
                let reach = shape.outer_radius() + 12.0 * (tau / (2.0 * beta)).sqrt();
                let res = integrate_adaptive(
                    |q| 2.0 * PI * q * solve_radial(&shape, beta, q, tau).unwrap(),
                    &[0.0, shape.outer_radius(), reach],
                    0.0,
                    1e-10,
                    500,
                );
                assert_relative_eq!(res.value, shape.energy(), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn nonpositive_time_is_rejected() {
        let shape = BleachShape::disk(1.0).unwrap();
        assert!(solve_radial(&shape, 1.0, 0.5, 0.0).is_err());
        let g = ExperimentGeometry::unit(1.0).unwrap();
        assert!(sensitivity_field(&shape, &g, 0.5, -1.0).is_err());
    }

    fn time_derivative_identity(shape: &BleachShape, beta: f64, q: f64, tau: f64) -> (f64, f64) {
        let g = ExperimentGeometry::unit(beta).unwrap();
        let field = sensitivity_field(shape, &g, q, tau).unwrap();
        let h = 1e-4 * tau;
        let dv = (solve_radial(shape, beta, q, tau + h).unwrap() - solve_radial(shape, beta, q, tau - h).unwrap()) / (2.0 * h);
        // dU/dD = (t / D) dU/dt with t = tau T and dU/dt = dv/dtau / T.
        (field, tau / g.diffusivity * dv)
    }

    #[test]
    fn derivative_identity_on_sample_grid() {
        let shapes = [BleachShape::disk(1.0).unwrap(), BleachShape::annulus(0.6, 1.4).unwrap()];
        for shape in &shapes {
            for &q in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                for &tau in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                    let (a, b) = time_derivative_identity(shape, 1.0, q, tau);
                    assert!((a - b).abs() <= 1e-4 * a.abs().max(1e-8), "q={q} tau={tau}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn diffusivity_finite_difference() {
        let shape = BleachShape::disk(1.0).unwrap();
        let g = ExperimentGeometry::new(1.0, 1.0, 0.25, 0.0, 1.0).unwrap();
        let (q, tau) = (0.5, 0.5);
        let h = 1e-4;
        let at = |d: f64| solve_radial(&shape, g.with_diffusivity(d).unwrap().beta(), q, tau).unwrap();
        let fd = (at(g.diffusivity * (1.0 + h)) - at(g.diffusivity * (1.0 - h))) / (2.0 * h * g.diffusivity);
        let field = sensitivity_field(&shape, &g, q, tau).unwrap();
        assert_relative_eq!(field, fd, max_relative = 1e-6);
    }
}
