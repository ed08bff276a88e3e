//! Shared pieces of the kernel integrands.

use crate::special::{i0e_i1e, integrate_adaptive};

/// `e^{shift - p (q - r)^2} {r i0e(2pqr) - q i1e(2pqr)}`, i.e. the unscaled factor
/// `e^{-p(q^2 + r^2)} {r I0(2pqr) - q I1(2pqr)}` multiplied by `e^{shift}`.
#[inline]
pub(crate) fn radial_factor(q: f64, r: f64, p: f64, shift: f64) -> f64 {
    let d = q - r;
    let (i0, i1) = i0e_i1e(2.0 * p * q * r);
    (shift - p * d * d).exp() * (r * i0 - q * i1)
}

/// Separable decay exponent `max(r - 1, 0)^2`: for `q` in `[0, 1]`,
/// `(q - r)^2 >= a(r)`, so `e^{p a(r)} e^{-p (q - r)^2} <= 1`.
#[inline]
pub(crate) fn decay_exponent(r: f64) -> f64 {
    let excess = (r - 1.0).max(0.0);
    excess * excess
}

/// Sorted breakpoints on `[0, 1]` at which the `q` integrand of `k(r, s)` can have features.
pub(crate) fn q_breakpoints(r: f64, s: f64) -> Vec<f64> {
    let mut pts = vec![0.0, 1.0];
    for x in [r, s, 0.5 * (r + s)] {
        if x > 0.0 && x < 1.0 {
            pts.push(x);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `e^{shift} rs \int_0^1 q F_r(q, p) F_s(q, p) dq`, the right-hand side of the kernel's
/// `beta`-equation (up to sign) evaluated at `p`, integrated adaptively.
pub(crate) fn rho_slice(r: f64, s: f64, p: f64, shift: f64, rel_tol: f64) -> (f64, f64, bool) {
    if r == 0.0 || s == 0.0 {
        return (0.0, 0.0, true);
    }
    let pts = q_breakpoints(r, s);
    let res = integrate_adaptive(
        |q| {
            let dr = q - r;
            let ds = q - s;
            let (a0, a1) = i0e_i1e(2.0 * p * q * r);
            let (b0, b1) = i0e_i1e(2.0 * p * q * s);
            q * (shift - p * (dr * dr + ds * ds)).exp() * (r * a0 - q * a1) * (s * b0 - q * b1)
        },
        &pts,
        1e-300,
        rel_tol,
        400,
    );
    (r * s * res.value, r * s * res.error, res.converged)
}
