//! Shared fixtures for the kernel benchmarks.

use blowup_core::params::ProblemParams;
use blowup_core::pde::{InitialData, Simulation, SolverConfig};

/// The standard 1D test configuration (n=1, p=2, α=0, β=2, μ₁=μ₂=1).
pub fn standard_params(eps: f64) -> ProblemParams {
    ProblemParams::new(1, 2.0, 0.0, 2.0, 1.0, 1.0, eps, 1.0).unwrap()
}

/// A ready-to-step simulation on a `points`-sized grid.
pub fn standard_simulation(dr: f64, t_max: f64) -> Simulation {
    let config = SolverConfig {
        dr,
        t_max,
        ..SolverConfig::default()
    };
    Simulation::new(&standard_params(0.5), &InitialData::bump(), config).unwrap()
}
