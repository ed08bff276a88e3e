use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::BleachShape;
use crate::error::{Error, Result};
use crate::special::QuadratureRule;

/// Recipe for a [`SpaceTimeGrid`]: Gauss–Legendre panels in `q` between `q_breaks`, a
/// Gauss–Legendre rule in `tau` (optionally through `tau = u^2`, which clusters nodes at
/// early times where the field is sharp) and `angles` equispaced directions for 2-D use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_breaks: Vec<f64>,
    pub q_order: usize,
    pub tau_order: usize,
    pub graded_time: bool,
    pub angles: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            q_breaks: vec![0.0, 1.0],
            q_order: 64,
            tau_order: 64,
            graded_time: false,
            angles: 64,
        }
    }
}

/// Quadrature for the scaled observation cylinder `{|z| <= 1} x (0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    spec: GridSpec,
    q: QuadratureRule,
    tau: QuadratureRule,
}

impl Default for SpaceTimeGrid {
    fn default() -> Self {
        SpaceTimeGrid::from_spec(GridSpec::default()).expect("default grid spec is valid")
    }
}

impl SpaceTimeGrid {
    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        let b = &spec.q_breaks;
        if b.first() != Some(&0.0) || b.last() != Some(&1.0) || b.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!(
                "radial breakpoints must increase from 0 to 1, got {b:?}"
            )));
        }
        if spec.angles == 0 {
            return Err(Error::InvalidArgument("need at least one angle".into()));
        }
        let q = QuadratureRule::panels(b, spec.q_order)?;
        let tau = if spec.graded_time {
            let u = QuadratureRule::panels(&[0.0, 1.0], spec.tau_order)?;
            QuadratureRule {
                nodes: u.nodes.iter().map(|x| x * x).collect(),
                weights: u.iter().map(|(x, w)| 2.0 * x * w).collect(),
                interval: (0.0, 1.0),
            }
        } else {
            QuadratureRule::panels(&[0.0, 1.0], spec.tau_order)?
        };
        Ok(SpaceTimeGrid { spec, q, tau })
    }

    /// Plain tensor Gauss–Legendre grid.
    pub fn tensor(q_order: usize, tau_order: usize) -> Result<Self> {
        Self::from_spec(GridSpec {
            q_order,
            tau_order,
            ..GridSpec::default()
        })
    }

    /// Radial panels split at `breaks` (points outside `(0, 1)` are ignored) and graded time.
    pub fn graded(breaks: &[f64], q_order: usize, tau_order: usize) -> Result<Self> {
        let mut q_breaks = vec![0.0];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > 0.0 && x < 1.0).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        q_breaks.extend(inner);
        q_breaks.push(1.0);
        Self::from_spec(GridSpec {
            q_breaks,
            q_order,
            tau_order,
            graded_time: true,
            ..GridSpec::default()
        })
    }

    /// Graded grid with radial panels split at the jump radii of `shape`.
    pub fn for_shape(shape: &BleachShape, q_order: usize, tau_order: usize) -> Result<Self> {
        Self::graded(shape.radii(), q_order, tau_order)
    }

    pub fn with_angles(mut self, angles: usize) -> Result<Self> {
        self.spec.angles = angles;
        Self::from_spec(self.spec)
    }

    /// Same layout at half the orders; used for self-estimating the quadrature error.
    pub fn coarsened(&self) -> Result<Self> {
        Self::from_spec(GridSpec {
            q_order: (self.spec.q_order / 2).max(1),
            tau_order: (self.spec.tau_order / 2).max(1),
            angles: (self.spec.angles / 2).max(1),
            ..self.spec.clone()
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.q.nodes
    }

    pub fn time_nodes(&self) -> &[f64] {
        &self.tau.nodes
    }

    /// Radial weights including the `2 pi q` area element.
    pub fn radial_weights(&self) -> Vec<f64> {
        self.q.iter().map(|(q, w)| 2.0 * PI * q * w).collect()
    }

    pub fn time_weights(&self) -> &[f64] {
        &self.tau.weights
    }

    /// Equispaced directions `2 pi k / angles`, starting at 0.
    pub fn angles(&self) -> Vec<f64> {
        let n = self.spec.angles;
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    /// Tensor weights, `weights[iq * n_tau + it]`.
    pub fn weights(&self) -> Vec<f64> {
        let rw = self.radial_weights();
        rw.iter()
            .flat_map(|&a| self.tau.weights.iter().map(move |&b| a * b))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cylinder_measure_is_pi() {
        let grids = [
            SpaceTimeGrid::default(),
            SpaceTimeGrid::tensor(5, 3).unwrap(),
            SpaceTimeGrid::graded(&[0.3, 0.7, 2.0], 16, 24).unwrap(),
        ];
        for g in &grids {
            assert_relative_eq!(g.weights().iter().sum::<f64>(), PI, max_relative = 1e-10);
        }
    }

    #[test]
    fn nodes_stay_inside_open_time_interval() {
        let g = SpaceTimeGrid::graded(&[0.5], 8, 8).unwrap();
        assert!(g.time_nodes().iter().all(|&t| t > 0.0 && t < 1.0));
        assert!(g.radial_nodes().iter().all(|&q| q > 0.0 && q < 1.0));
    }

    #[test]
    fn bad_breakpoints_rejected() {
        let spec = GridSpec {
            q_breaks: vec![0.0, 0.5],
            ..GridSpec::default()
        };
        assert!(SpaceTimeGrid::from_spec(spec).is_err());
    }
}
