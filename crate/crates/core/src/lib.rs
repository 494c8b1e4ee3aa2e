//! Numerical laboratory for finite-time blow-up of semilinear wave equations
//! with scattering damping and a negative (time-decaying) mass term.
//!
//! The crate evaluates every constructive piece of the blow-up argument and
//! checks each against an independent route:
//!
//! * [`params`] — problem parameters, the damping/mass coefficients and the
//!   damping-absorbing multiplier `m(t)`;
//! * [`specfun`] — gamma and modified Bessel functions `I_ν`, `K_ν` at real
//!   order, with log-scaled companions;
//! * [`comparison`] — the auxiliary ODE solution `J(t)` in Bessel form, the
//!   Hölder weight `B(t)`, the exponential lower envelope `A(t)`, and the
//!   scalar lower-bound ODE for the mean functional `F₀`;
//! * [`kato`] — an executable ODE blow-up certificate (`T ≤ 3T̃`), validated
//!   against brute-force integration of the equality case;
//! * [`lifespan`] — the transcendental lifespan equation, its larger root ζ,
//!   the assembled small-data constant `C`, and the log-type asymptote;
//! * [`pde`] — a radially symmetric explicit solver that produces empirical
//!   blow-up brackets, tracks `F₀`, energy and support;
//! * [`sweep`] — ε-sweeps, CSV serialization and the lifespan curve fit.

pub mod comparison;
pub mod kato;
pub mod lifespan;
pub mod params;
pub mod pde;
pub mod specfun;
pub mod sweep;

mod ivp;

pub use comparison::{ComparisonSetup, DataNorms, EnvelopeConstants};
pub use kato::{KatoInstance, KatoReport};
pub use lifespan::{LifespanQuery, LifespanReport};
pub use params::{CoefficientSet, ProblemParams};
pub use pde::{SimulationTrace, SolverConfig};
pub use sweep::{FitResult, SweepPlan, SweepRow};
