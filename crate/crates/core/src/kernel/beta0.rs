//! The kernel at `beta = 0`.
//!
//! Starting from the triple integral over `(q, theta1, theta2)`, the `theta2` integral is done
//! in closed form (`\int (s - q cos t)/(A - B cos t) dt`), leaving
//!
//! `k(r, s; 0) = r/(2 pi) \int_0^1 q \int_0^pi (r - q cos t) [1 + (s^2 - q^2 - d) / sqrt((A - B)(A + B))] dt dq`
//!
//! with `d = (q - r)^2 + 4qr sin^2(t/2)`, `A - B = d + (q - s)^2`, `A + B = d + (q + s)^2`.
//! The remaining integrand is bounded; its only non-smooth point is `q = r = s, t = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gauss_legendre, integrate_adaptive};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta0Quadrature {
    /// Relative tolerance of both nested adaptive integrals.
    pub rel_tol: f64,
    /// Segment budget per adaptive integral.
    pub max_segments: usize,
}

impl Default for Beta0Quadrature {
    fn default() -> Self {
        Beta0Quadrature {
            rel_tol: 1e-10,
            max_segments: 2000,
        }
    }
}

fn theta_integrand(q: f64, r: f64, s: f64, t: f64) -> f64 {
    let half = (0.5 * t).sin();
    let dq = q - r;
    let d = dq * dq + 4.0 * q * r * half * half;
    let minus = d + (q - s) * (q - s);
    let plus = d + (q + s) * (q + s);
    let root = (minus * plus).sqrt();
    let bracket = if root > 0.0 {
        1.0 + (s * s - q * q - d) / root
    } else {
        // Removable point q = r = s, t = 0: the prefactor (r - q cos t) vanishes there.
        1.0
    };
    (r - q * t.cos()) * bracket
}

/// `k(r, s; 0)`. Symmetric in `(r, s)` to the last bit: arguments are ordered before integrating.
pub fn kernel_beta0(r: f64, s: f64, quad: &Beta0Quadrature) -> Result<f64> {
    if !(r >= 0.0 && s >= 0.0) {
        return Err(Error::Domain(format!(
            "kernel arguments must be nonnegative, got ({r}, {s})"
        )));
    }
    if r == 0.0 || s == 0.0 {
        return Ok(0.0);
    }
    let (r, s) = if r <= s { (r, s) } else { (s, r) };
    let mut q_pts = vec![0.0, 1.0];
    for x in [r, s] {
        if x < 1.0 {
            q_pts.push(x);
        }
    }
    q_pts.sort_by(f64::total_cmp);
    q_pts.dedup();

    let mut inner_failed = false;
    let outer = integrate_adaptive(
        |q| {
            if q == 0.0 {
                return 0.0;
            }
            let inner = integrate_adaptive(
                |t| theta_integrand(q, r, s, t),
                &[0.0, PI],
                1e-300,
                quad.rel_tol,
                quad.max_segments,
            );
            if !inner.converged {
                inner_failed = true;
            }
            q * inner.value
        },
        &q_pts,
        1e-300,
        quad.rel_tol,
        quad.max_segments,
    );
    let value = r / (2.0 * PI) * outer.value;
    if !outer.converged || inner_failed {
        return Err(Error::Quadrature {
            estimate: value,
            error: r / (2.0 * PI) * outer.error,
        });
    }
    Ok(value)
}

/// Plain tensor Gauss–Legendre evaluation of the original triple integral.
/// Slow and only algebraically convergent on the diagonal; kept as an independent check.
pub fn kernel_beta0_tensor(r: f64, s: f64, n_q: usize, n_theta: usize) -> Result<f64> {
    if r == 0.0 || s == 0.0 {
        return Ok(0.0);
    }
    let qs = gauss_legendre(n_q, 0.0, 1.0)?;
    let th = gauss_legendre(n_theta, 0.0, 2.0 * PI)?;
    let trig: Vec<(f64, f64, f64)> = th.iter().map(|(t, w)| (t.cos(), (0.5 * t).sin(), w)).collect();
    let mut total = 0.0;
    for (q, wq) in qs.iter() {
        let mut acc = 0.0;
        for &(c1, h1, w1) in &trig {
            let d1 = (q - r) * (q - r) + 4.0 * q * r * h1 * h1;
            let a1 = r - q * c1;
            for &(c2, h2, w2) in &trig {
                let d2 = (q - s) * (q - s) + 4.0 * q * s * h2 * h2;
                acc += w1 * w2 * a1 * (s - q * c2) / (d1 + d2);
            }
        }
        total += wq * q * r * s * acc;
    }
    Ok(total / (4.0 * PI * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_argument_gives_zero() {
        let q = Beta0Quadrature::default();
        assert_eq!(kernel_beta0(0.0, 1.3, &q).unwrap(), 0.0);
        assert_eq!(kernel_beta0(0.7, 0.0, &q).unwrap(), 0.0);
    }

    #[test]
    fn swap_symmetry_is_exact() {
        let q = Beta0Quadrature::default();
        for &(r, s) in &[(0.3, 0.9), (1.0, 2.5), (0.5, 0.55), (4.0, 0.1)] {
            assert_eq!(kernel_beta0(r, s, &q).unwrap(), kernel_beta0(s, r, &q).unwrap());
        }
    }

    #[test]
    fn negative_argument_rejected() {
        assert!(kernel_beta0(-0.1, 1.0, &Beta0Quadrature::default()).is_err());
    }

    #[test]
    fn reduced_form_agrees_with_tensor_triple_integral() {
        // Off the diagonal the triple integrand is smooth and the tensor rule converges fast.
        let q = Beta0Quadrature::default();
        for &(r, s) in &[(0.5, 1.5), (2.0, 3.0), (0.25, 4.0)] {
            let reduced = kernel_beta0(r, s, &q).unwrap();
            let tensor = kernel_beta0_tensor(r, s, 96, 96).unwrap();
            assert_relative_eq!(reduced, tensor, max_relative = 1e-6);
        }
    }

    #[test]
    fn diagonal_agrees_with_refined_tensor_rule() {
        // On the diagonal the tensor rule converges slowly and not monotonically; the
        // reduced form must match a high-order tensor evaluation far better than a low one.
        let q = Beta0Quadrature::default();
        for &r in &[0.25, 0.5, 1.0] {
            let reduced = kernel_beta0(r, r, &q).unwrap();
            let coarse = kernel_beta0_tensor(r, r, 32, 32).unwrap();
            let fine = kernel_beta0_tensor(r, r, 192, 192).unwrap();
            assert!((fine - reduced).abs() <= 1e-5 * reduced.abs(), "r={r}: {reduced} vs {fine}");
            assert!((fine - reduced).abs() < (coarse - reduced).abs());
        }
    }

    #[test]
    fn diagonal_reference_value_is_stable_under_tightening() {
        let loose = kernel_beta0(1.0, 1.0, &Beta0Quadrature { rel_tol: 1e-8, max_segments: 2000 }).unwrap();
        let tight = kernel_beta0(1.0, 1.0, &Beta0Quadrature { rel_tol: 1e-12, max_segments: 4000 }).unwrap();
        assert_relative_eq!(loose, tight, max_relative = 1e-7);
    }
}
