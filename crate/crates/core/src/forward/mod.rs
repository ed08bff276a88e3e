//! Forward diffusion model: radial Green's-function solutions, the `D`-sensitivity field,
//! brute-force sensitivity oracles and the synthetic estimation experiment.

mod estimation;
mod grid;
mod oracle;
mod oracle2d;
mod radial;
mod shape;

pub use estimation::{
    run_estimation_experiment, run_estimation_experiment_with, trial_rng, EstimationConfig, EstimationReport,
};
pub use grid::{GridSpec, SpaceTimeGrid};
pub use oracle::{oracle_sensitivity, OracleResult};
pub use oracle2d::{oracle_sensitivity_2d, PixelMask};
pub use radial::{scaled_laplacian, sensitivity_field, solve_radial};
pub use shape::{BleachShape, ExperimentGeometry};
