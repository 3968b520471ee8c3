//! Lossless steady-state power flow and the linearization edge weights.
//!
//! The network equations are `p_i = Σ_j V_i V_j b_ij sin(θ_i − θ_j)` over the
//! active branches. The reference bus is the slack: its angle is zero and its
//! injection is whatever balances the system, so the solve runs over the
//! non-reference angles only. Newton iteration from a flat start with a
//! backtracking line search is used; the Jacobian of the mismatch is the
//! negative reduced Laplacian weighted by the instantaneous stiffnesses
//! `V_i V_j b_ij cos(θ_i − θ_j)`.
//!
//! A solution is *secure* when every active branch keeps its angle spread
//! strictly inside (−π/2, π/2); the resulting positive weights
//! `W_p = diag(V_i V_j b_ij cos(θ_i⁰ − θ_j⁰))` are the stiffnesses entering
//! every downstream matrix.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::{self, Grid};

/// Convergence tolerance on the ∞-norm of the power mismatch.
pub const TOLERANCE: f64 = 1e-10;

/// Newton iteration cap.
pub const MAX_ITERATIONS: usize = 50;

/// A solved operating point for one active edge set.
#[derive(Debug, Clone)]
pub struct EquilibriumState {
    /// Active branch indices (file order, deduplicated).
    pub active: Vec<usize>,
    /// Bus angles in canonical order, radians; entry 0 (reference) is 0.
    pub theta: Vec<f64>,
    /// Relative angles α = θ_i − θ_ref over non-reference buses (canonical
    /// order), i.e. `theta[1..]`.
    pub alpha: DVector<f64>,
    /// Stiffness weight per active edge, aligned with `active`.
    pub wp: Vec<f64>,
    /// Active power flowing from `from` to `to` per active edge.
    pub flows: Vec<f64>,
    /// Power absorbed (negative) or supplied (positive) at the reference to
    /// balance the network.
    pub slack_injection: f64,
    /// Newton iterations used.
    pub iterations: usize,
    /// Final mismatch ∞-norm.
    pub residual: f64,
}

impl EquilibriumState {
    /// Position of a branch in `active`, if present.
    pub fn active_pos(&self, edge: usize) -> Option<usize> {
        self.active.iter().position(|&e| e == edge)
    }

    /// Angle of a bus by file index.
    pub fn theta_of(&self, grid: &Grid, file_idx: usize) -> f64 {
        self.theta[grid.maps.canon_of_file[file_idx]]
    }

    /// Angle spread θ_from − θ_to across a branch (needs only the endpoint
    /// angles, so it is defined for inactive branches too).
    pub fn angle_spread(&self, grid: &Grid, edge: usize) -> f64 {
        let br = &grid.branches[edge];
        self.theta_of(grid, br.from) - self.theta_of(grid, br.to)
    }
}

fn mismatch(grid: &Grid, active: &[usize], theta: &[f64]) -> DVector<f64> {
    let n = grid.n_buses();
    let mut r = vec![0.0; n];
    for (canon, &file) in grid.maps.file_of_canon.iter().enumerate() {
        r[canon] = grid.buses[file].p_in;
    }
    for &e in active {
        let br = &grid.branches[e];
        let i = grid.maps.canon_of_file[br.from];
        let j = grid.maps.canon_of_file[br.to];
        let s = grid.buses[br.from].voltage
            * grid.buses[br.to].voltage
            * br.susceptance
            * (theta[i] - theta[j]).sin();
        r[i] -= s;
        r[j] += s;
    }
    DVector::from_iterator(n - 1, r[1..].iter().copied())
}

fn stiffness_weights(grid: &Grid, active: &[usize], theta: &[f64]) -> Vec<f64> {
    active
        .iter()
        .map(|&e| {
            let br = &grid.branches[e];
            let i = grid.maps.canon_of_file[br.from];
            let j = grid.maps.canon_of_file[br.to];
            grid.buses[br.from].voltage
                * grid.buses[br.to].voltage
                * br.susceptance
                * (theta[i] - theta[j]).cos()
        })
        .collect()
}

/// Solve the lossless power flow on the given active edge set.
pub fn solve_equilibrium(grid: &Grid, active_edges: &[usize]) -> Result<EquilibriumState> {
    let mut active = active_edges.to_vec();
    active.sort_unstable();
    active.dedup();
    if let Some(&bad) = active.iter().find(|&&e| e >= grid.n_branches()) {
        return Err(Error::UnknownEdge(format!("branch index {bad} out of range")));
    }
    if !grid::is_connected(grid, &active) {
        return Err(Error::Disconnected(
            "the active branch set does not connect all buses".into(),
        ));
    }

    let n = grid.n_buses();
    let mut theta = vec![0.0; n];
    let mut r = mismatch(grid, &active, &theta);
    let mut iterations = 0;
    while r.amax() > TOLERANCE {
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NonConvergence(format!(
                "residual {:.3e} after {MAX_ITERATIONS} Newton iterations",
                r.amax()
            )));
        }
        let w = stiffness_weights(grid, &active, &theta);
        let jac = grid::reduced_laplacian(grid, &active, &w);
        let step = jac.lu().solve(&r).ok_or_else(|| {
            Error::NonConvergence("singular Jacobian in Newton iteration".into())
        })?;
        // Backtracking: halve until the mismatch strictly decreases.
        let base = r.amax();
        let mut scale = 1.0;
        let mut next = theta.clone();
        for _ in 0..=20 {
            for k in 1..n {
                next[k] = theta[k] + scale * step[k - 1];
            }
            if mismatch(grid, &active, &next).amax() < base {
                break;
            }
            scale *= 0.5;
        }
        theta = next;
        r = mismatch(grid, &active, &theta);
        iterations += 1;
    }
    // Polish with full steps while they still help, to push the mismatch to
    // the floating-point floor (keeps the conservation identity tight).
    for _ in 0..3 {
        if r.amax() == 0.0 {
            break;
        }
        let w = stiffness_weights(grid, &active, &theta);
        let jac = grid::reduced_laplacian(grid, &active, &w);
        let Some(step) = jac.lu().solve(&r) else { break };
        let mut next = theta.clone();
        for k in 1..n {
            next[k] += step[k - 1];
        }
        let r_next = mismatch(grid, &active, &next);
        if r_next.amax() < r.amax() {
            theta = next;
            r = r_next;
        } else {
            break;
        }
    }

    let wp = stiffness_weights(grid, &active, &theta);
    for (pos, &e) in active.iter().enumerate() {
        if wp[pos] <= 0.0 {
            let br = &grid.branches[e];
            let spread = theta[grid.maps.canon_of_file[br.from]]
                - theta[grid.maps.canon_of_file[br.to]];
            return Err(Error::InsecureEquilibrium(format!(
                "branch '{}' has angle spread {:.4} rad (stiffness {:.4e})",
                grid.branch_label(e),
                spread,
                wp[pos]
            )));
        }
    }
    let flows: Vec<f64> = active
        .iter()
        .map(|&e| {
            let br = &grid.branches[e];
            let i = grid.maps.canon_of_file[br.from];
            let j = grid.maps.canon_of_file[br.to];
            grid.buses[br.from].voltage
                * grid.buses[br.to].voltage
                * br.susceptance
                * (theta[i] - theta[j]).sin()
        })
        .collect();
    let mut slack = 0.0;
    for (pos, &e) in active.iter().enumerate() {
        let br = &grid.branches[e];
        if br.from == grid.maps.reference {
            slack += flows[pos];
        } else if br.to == grid.maps.reference {
            slack -= flows[pos];
        }
    }

    let alpha = DVector::from_iterator(n - 1, theta[1..].iter().copied());
    let residual = r.amax();
    Ok(EquilibriumState {
        active,
        theta,
        alpha,
        wp,
        flows,
        slack_injection: slack,
        iterations,
        residual,
    })
}

/// Stiffness weights restricted to a requested edge subset; every requested
/// edge must be active in the equilibrium.
pub fn branch_weights(grid: &Grid, eq: &EquilibriumState, edges: &[usize]) -> Result<Vec<f64>> {
    edges
        .iter()
        .map(|&e| {
            eq.active_pos(e).map(|pos| eq.wp[pos]).ok_or_else(|| {
                Error::UnknownEdge(format!(
                    "branch '{}' is not in the active set",
                    grid.branch_label(e)
                ))
            })
        })
        .collect()
}
