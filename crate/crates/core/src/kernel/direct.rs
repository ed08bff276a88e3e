//! Slow reference evaluation of `k(r, s; beta)` from its `(q, rho)` double integral.
//!
//! The tail `rho in [beta, inf)` is mapped to `u in (0, 1]` by `rho = beta / u^2`, which
//! leaves a smooth integrand vanishing like `u^2` at the origin.

use serde::{Deserialize, Serialize};

use super::integrand::{decay_exponent, rho_slice};
use crate::error::{Error, Result};
use crate::special::integrate_adaptive;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectQuadrature {
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for DirectQuadrature {
    fn default() -> Self {
        DirectQuadrature {
            rel_tol: 1e-10,
            max_segments: 400,
        }
    }
}

/// `e^{beta (a(r) + a(s))} k(r, s; beta)`, which neither overflows nor underflows
/// for any radii in the table range.
pub(crate) fn kernel_direct_scaled(r: f64, s: f64, beta: f64, quad: &DirectQuadrature) -> Result<f64> {
    if r == 0.0 || s == 0.0 {
        return Ok(0.0);
    }
    let (r, s) = if r <= s { (r, s) } else { (s, r) };
    let shift_rate = decay_exponent(r) + decay_exponent(s);
    let mut inner_failed = false;
    let outer = integrate_adaptive(
        |u| {
            if u == 0.0 {
                return 0.0;
            }
            let p = beta / (u * u);
            let (v, _, ok) = rho_slice(r, s, p, beta * shift_rate, quad.rel_tol);
            if !ok {
                inner_failed = true;
            }
            2.0 * beta / (u * u * u) * v
        },
        &[0.0, 0.25, 0.5, 1.0],
        1e-300,
        quad.rel_tol,
        quad.max_segments,
    );
    if !outer.converged || inner_failed {
        return Err(Error::Quadrature {
            estimate: outer.value * (-beta * shift_rate).exp(),
            error: outer.error * (-beta * shift_rate).exp(),
        });
    }
    Ok(outer.value)
}

/// `k(r, s; beta)` for `beta > 0` by adaptive quadrature of the double integral.
pub fn kernel_direct(r: f64, s: f64, beta: f64, quad: &DirectQuadrature) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!(
            "kernel_direct needs beta > 0, got {beta}"
        )));
    }
    if !(r >= 0.0 && s >= 0.0) {
        return Err(Error::Domain(format!(
            "kernel arguments must be nonnegative, got ({r}, {s})"
        )));
    }
    let scaled = kernel_direct_scaled(r, s, beta, quad)?;
    Ok(scaled * (-beta * (decay_exponent(r) + decay_exponent(s))).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_argument() {
        assert_eq!(kernel_direct(0.0, 1.0, 1.0, &DirectQuadrature::default()).unwrap(), 0.0);
    }

    #[test]
    fn symmetric() {
        let q = DirectQuadrature::default();
        for &(r, s, b) in &[(0.5, 1.5, 3.0), (1.0, 0.2, 0.7)] {
            assert_eq!(kernel_direct(r, s, b, &q).unwrap(), kernel_direct(s, r, b, &q).unwrap());
        }
    }

    #[test]
    fn beta_must_be_positive() {
        assert!(kernel_direct(1.0, 1.0, 0.0, &DirectQuadrature::default()).is_err());
    }
}
