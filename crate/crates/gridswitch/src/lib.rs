//! gridswitch — synchronization-aware transmission switching.
//!
//! The library quantifies how well a structure-preserved power grid rejects
//! persistent disturbances, using the squared H2 norm of the linearized
//! swing dynamics as the metric, and selects which switchable transmission
//! lines to energize in order to shrink that metric.
//!
//! The pipeline is:
//!
//! 1. [`grid`] — load and validate a grid description (buses, branches,
//!    output weights) and fix the canonical ordering.
//! 2. [`powerflow`] — solve the lossless active-power flow for an operating
//!    point and its per-line stiffness weights.
//! 3. [`linearize`] — assemble the structure-preserved state space around
//!    that point.
//! 4. [`h2`] — evaluate the metric via the observability Gramian, via a
//!    load-graph closed form, or via ratio bounds.
//! 5. [`switching`] — rank candidate lines by analytic susceptance
//!    sensitivities and build a greedy switching plan.
//! 6. [`simulation`] — validate plans in the time domain with impulse or
//!    sampled stochastic disturbances.

pub mod error;
pub mod fixtures;
pub mod grid;
pub mod h2;
pub mod linearize;
pub mod lyapunov;
pub mod powerflow;
pub mod report;
pub mod selfcheck;
pub mod simulation;
pub mod switching;

pub use error::{Error, Result};
pub use grid::{load_grid, Grid};
pub use h2::{h2_report, H2Method, H2Report};
pub use linearize::{build_state_space, StateSpace};
pub use powerflow::{solve_equilibrium, EquilibriumState};
pub use switching::{greedy_switch, SwitchingPlan};
