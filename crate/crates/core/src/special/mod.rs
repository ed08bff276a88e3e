//! Special functions and quadrature rules shared by every integral in the crate.

mod bessel;
mod quadrature;

pub use bessel::{bessel_i0_scaled, bessel_i1_scaled, i0e, i0e_i1e, i1e};
pub use quadrature::{gauss_legendre, integrate_adaptive, AdaptiveResult, QuadratureRule};
