use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical setting of one experiment: observation disk radius `R`, horizon `T`,
/// diffusivity `D`, noise level `sigma` and reference concentration `u_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGeometry {
    pub radius: f64,
    pub horizon: f64,
    pub diffusivity: f64,
    pub sigma: f64,
    pub u_ref: f64,
}

impl ExperimentGeometry {
    pub fn new(radius: f64, horizon: f64, diffusivity: f64, sigma: f64, u_ref: f64) -> Result<Self> {
        let g = ExperimentGeometry {
            radius,
            horizon,
            diffusivity,
            sigma,
            u_ref,
        };
        g.validate()?;
        Ok(g)
    }

    /// `R = T = u_ref = 1`, `sigma = 0`, and `D` chosen so that the scaled parameter equals `beta`.
    pub fn unit(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        Self::new(1.0, 1.0, 1.0 / (4.0 * beta), 0.0, 1.0)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.sigma = sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_diffusivity(mut self, diffusivity: f64) -> Result<Self> {
        self.diffusivity = diffusivity;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius", self.radius),
            ("horizon", self.horizon),
            ("diffusivity", self.diffusivity),
            ("u_ref", self.u_ref),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        Ok(())
    }

    /// `R^2 / (4 T D)`: characteristic diffusion time over the observation horizon.
    pub fn beta(&self) -> f64 {
        self.radius * self.radius / (4.0 * self.horizon * self.diffusivity)
    }

    /// `32 pi beta^3 T^3 / R^2`, the factor between kernel sums and `S_int`.
    pub fn sensitivity_prefactor(&self) -> f64 {
        32.0 * PI * self.beta().powi(3) * self.horizon.powi(3) / (self.radius * self.radius)
    }
}

/// Radially symmetric `{0, 1}` initial condition given by its jump radii
/// `r_1 < ... < r_N` (units of `R`). The outermost interval `[r_{N-1}, r_N]` is bleached,
/// occupancy alternates inwards, and for odd `N` the innermost piece is the disk `[0, r_1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BleachShape {
    radii: Vec<f64>,
}

impl TryFrom<Vec<f64>> for BleachShape {
    type Error = Error;
    fn try_from(radii: Vec<f64>) -> Result<Self> {
        BleachShape::new(radii)
    }
}

impl From<BleachShape> for Vec<f64> {
    fn from(s: BleachShape) -> Vec<f64> {
        s.radii
    }
}

impl BleachShape {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidArgument("a bleach shape needs at least one jump".into()));
        }
        if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument(format!("jump radii must be positive and finite: {radii:?}")));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!("jump radii must strictly increase: {radii:?}")));
        }
        Ok(BleachShape { radii })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(vec![radius])
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        Self::new(vec![inner, outer])
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn jump_count(&self) -> usize {
        self.radii.len()
    }

    pub fn outer_radius(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    /// Bleached intervals, outermost first.
    pub fn occupied_intervals(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.radii.len().div_ceil(2));
        let mut k = self.radii.len();
        while k >= 2 {
            out.push((self.radii[k - 2], self.radii[k - 1]));
            k -= 2;
        }
        if k == 1 {
            out.push((0.0, self.radii[0]));
        }
        out
    }

    /// Sign of the jump of `g` at `radii[j]` (0-based): `-1` at the outermost radius, alternating inwards.
    pub fn jump_sign(&self, j: usize) -> f64 {
        if (self.radii.len() - j) % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Value of the indicator at scaled radius `s`; jump points count as bleached.
    pub fn indicator(&self, s: f64) -> f64 {
        let inside = self.occupied_intervals().iter().any(|&(a, b)| s >= a && s <= b);
        if inside {
            1.0
        } else {
            0.0
        }
    }

    /// Bleached area in units of `R^2` (the scaled `L^1` norm of the initial condition).
    pub fn energy(&self) -> f64 {
        PI * self
            .occupied_intervals()
            .iter()
            .map(|&(a, b)| b * b - a * a)
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_of_geometry() {
        let g = ExperimentGeometry::new(2.0, 0.5, 0.25, 0.1, 1.0).unwrap();
        assert!((g.beta() - 4.0 / 0.5).abs() < 1e-15);
        assert!((ExperimentGeometry::unit(3.0).unwrap().beta() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn geometry_rejects_bad_values() {
        assert!(ExperimentGeometry::new(0.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(ExperimentGeometry::new(1.0, 1.0, 1.0, -0.1, 1.0).is_err());
        assert!(ExperimentGeometry::new(1.0, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn occupancy_alternates_from_outside() {
        let s = BleachShape::new(vec![0.5, 1.0, 1.5, 2.0]).unwrap();
        assert_eq!(s.occupied_intervals(), vec![(1.5, 2.0), (0.5, 1.0)]);
        let s = BleachShape::new(vec![0.5, 1.0, 1.5]).unwrap();
        assert_eq!(s.occupied_intervals(), vec![(1.0, 1.5), (0.0, 0.5)]);
        assert_eq!(s.jump_sign(2), -1.0);
        assert_eq!(s.jump_sign(1), 1.0);
        assert_eq!(s.jump_sign(0), -1.0);
        assert_eq!(s.indicator(0.2), 1.0);
        assert_eq!(s.indicator(0.7), 0.0);
    }

    #[test]
    fn invalid_shapes() {
        assert!(BleachShape::new(vec![]).is_err());
        assert!(BleachShape::new(vec![0.0, 1.0]).is_err());
        assert!(BleachShape::new(vec![1.0, 1.0]).is_err());
        assert!(BleachShape::new(vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn serde_validates() {
        let s: BleachShape = serde_json::from_str("[0.5, 1.0]").unwrap();
        assert_eq!(s.radii(), &[0.5, 1.0]);
        assert!(serde_json::from_str::<BleachShape>("[1.0, 0.5]").is_err());
    }
}
