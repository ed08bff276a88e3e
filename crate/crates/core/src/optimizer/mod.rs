//! Global grid search over radial shapes and the spectral L2-constrained design.

mod l2;
mod problem1;
mod problem2;

pub use l2::{l2_optimal_design, profile_rayleigh_quotient, L2Design, PowerIteration, RadialDiscretization};
pub use problem1::{
    find_transitions, solve_problem1, sweep_beta, BetaSweep, Configuration, DesignSweepResult, Transition,
};
pub use problem2::{default_energy_grid, problem2_map, solve_problem2, EnergyCell, EnergyConstrainedMap};
