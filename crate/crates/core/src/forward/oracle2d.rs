//! Sensitivity of arbitrary (non-radial, possibly relaxed) initial conditions on a pixel grid.
//!
//! Each pixel is a constant square source. Convolving it with the heat kernel factorises into
//! two differences of normal CDFs, so the Laplacian of the solution is evaluated exactly for
//! the pixelised initial condition, with no FFT and no periodic images.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use super::oracle::{attach_estimate, OracleResult};
use super::{BleachShape, ExperimentGeometry, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::sensitivity::SensitivityValue;

/// Square `n x n` mask centred on the origin; `values[row * n + col]`, row along `y`, column along `x`.
/// Values may be any real number (relaxed masks); binary masks use 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelMask {
    n: usize,
    pixel_size: f64,
    values: Vec<f64>,
}

impl PixelMask {
    pub fn new(n: usize, pixel_size: f64, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "mask of side {n} needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::InvalidArgument(format!("pixel size must be positive, got {pixel_size}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("mask values must be finite".into()));
        }
        Ok(PixelMask { n, pixel_size, values })
    }

    /// Area fraction of each pixel covered by `inside`, estimated on a `supersample^2` sub-grid.
    pub fn rasterize(n: usize, pixel_size: f64, supersample: usize, inside: impl Fn(f64, f64) -> bool) -> Result<Self> {
        let m = supersample.max(1);
        let mut values = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                let (x0, y0) = (edge(n, pixel_size, col), edge(n, pixel_size, row));
                let mut hits = 0usize;
                for a in 0..m {
                    for b in 0..m {
                        let x = x0 + (b as f64 + 0.5) / m as f64 * pixel_size;
                        let y = y0 + (a as f64 + 0.5) / m as f64 * pixel_size;
                        hits += usize::from(inside(x, y));
                    }
                }
                values.push(hits as f64 / (m * m) as f64);
            }
        }
        Self::new(n, pixel_size, values)
    }

    pub fn from_shape(shape: &BleachShape, n: usize, pixel_size: f64, supersample: usize) -> Result<Self> {
        Self::rasterize(n, pixel_size, supersample, |x, y| shape.indicator(x.hypot(y)) > 0.5)
    }

    pub fn disk(n: usize, pixel_size: f64, center: (f64, f64), radius: f64, supersample: usize) -> Result<Self> {
        Self::rasterize(n, pixel_size, supersample, |x, y| {
            (x - center.0).hypot(y - center.1) <= radius
        })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Rotation by +90 degrees about the origin, `(x, y) -> (-y, x)`; exact on the pixel grid.
    pub fn rotate90(&self) -> Self {
        let n = self.n;
        let mut values = vec![0.0; n * n];
        for row in 0..n {
            for col in 0..n {
                values[row * n + col] = self.values[(n - 1 - col) * n + row];
            }
        }
        PixelMask { values, ..*self }
    }

    /// `lambda a + (1 - lambda) b` on a common pixel grid.
    pub fn blend(lambda: f64, a: &PixelMask, b: &PixelMask) -> Result<Self> {
        if a.n != b.n || a.pixel_size != b.pixel_size {
            return Err(Error::InvalidArgument("masks live on different pixel grids".into()));
        }
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
            .collect();
        Self::new(a.n, a.pixel_size, values)
    }
}

fn edge(n: usize, h: f64, k: usize) -> f64 {
    (k as f64 - 0.5 * n as f64) * h
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Per-pixel smoothing factors along one axis at coordinate `x`:
/// `a[i] = P(x - e_{i+1} < sigma Z < x - e_i)` and its second derivative in `x`.
fn axis_factors(x: f64, edges: &[f64], sigma: f64, a: &mut [f64], a2: &mut [f64]) {
    let mut prev_cdf = normal_cdf((x - edges[0]) / sigma);
    let mut prev_zpdf = {
        let z = (x - edges[0]) / sigma;
        z * normal_pdf(z)
    };
    for i in 0..a.len() {
        let z = (x - edges[i + 1]) / sigma;
        let cdf = normal_cdf(z);
        let zpdf = z * normal_pdf(z);
        a[i] = prev_cdf - cdf;
        a2[i] = (zpdf - prev_zpdf) / (sigma * sigma);
        prev_cdf = cdf;
        prev_zpdf = zpdf;
    }
}

fn cylinder_integral_2d(mask: &PixelMask, geometry: &ExperimentGeometry, grid: &SpaceTimeGrid) -> f64 {
    let n = mask.n;
    let beta = geometry.beta();
    let edges: Vec<f64> = (0..=n).map(|k| edge(n, mask.pixel_size, k)).collect();
    let angles = grid.angles();
    let dphi = 2.0 * PI / angles.len() as f64;
    let rw = grid.radial_weights();
    let (mut ax, mut ax2, mut ay, mut ay2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut acc = 0.0;
    for (&tau, &wt) in grid.time_nodes().iter().zip(grid.time_weights()) {
        let sigma = (tau / (2.0 * beta)).sqrt();
        for (&q, &wq) in grid.radial_nodes().iter().zip(&rw) {
            // wq carries 2 pi q; the angular rule replaces the 2 pi.
            let w = wt * wq / (2.0 * PI) * dphi;
            for &phi in &angles {
                let (x, y) = (q * phi.cos(), q * phi.sin());
                axis_factors(x, &edges, sigma, &mut ax, &mut ax2);
                axis_factors(y, &edges, sigma, &mut ay, &mut ay2);
                let mut lap = 0.0;
                for row in 0..n {
                    let line = &mask.values[row * n..(row + 1) * n];
                    let (mut s, mut s2) = (0.0, 0.0);
                    for col in 0..n {
                        s += line[col] * ax[col];
                        s2 += line[col] * ax2[col];
                    }
                    lap += s2 * ay[row] + s * ay2[row];
                }
                let f = tau * lap;
                acc += w * f * f;
            }
        }
    }
    let (r, t) = (geometry.radius, geometry.horizon);
    t * t * t / (r * r) * acc
}

/// `S_int` for a pixelised initial condition. Lengths in the mask are in units of `R`.
pub fn oracle_sensitivity_2d(
    mask: &PixelMask,
    geometry: &ExperimentGeometry,
    grid: &SpaceTimeGrid,
    tolerance: f64,
) -> Result<OracleResult> {
    geometry.validate()?;
    if mask.is_empty() {
        let msg = "empty mask: sensitivity is identically zero".to_string();
        log::warn!("{msg}");
        return Ok(OracleResult {
            value: SensitivityValue::from_s_int(0.0, geometry),
            error_estimate: 0.0,
            warning: Some(msg),
        });
    }
    let fine = cylinder_integral_2d(mask, geometry, grid);
    let coarse = cylinder_integral_2d(mask, geometry, &grid.coarsened()?);
    Ok(attach_estimate(SensitivityValue::from_s_int(fine, geometry), coarse, tolerance))
}
