//! Line-switching sensitivities and greedy plan construction.
//!
//! Adding a load-load line `e = (i, j)` with susceptance `b` perturbs the
//! load-graph stiffness matrix by the rank-one term `b·w̄_e·u_e u_eᵀ`, where
//! `w̄_e = V_i V_j cos(θ_i⁰ − θ_j⁰)` and `u_e` is the signed indicator of the
//! endpoints. Differentiating the closed-form metric in `b` at the current
//! operating point gives the exact first-order sensitivity
//!
//! ```text
//! ∂‖G‖²/∂b_e = −(λ_d/2) · w̄_e · u_eᵀ L_S⁻¹ L_S* L_S⁻¹ u_e,
//! ```
//!
//! which is always ≤ 0: closing a line can only help the metric at first
//! order. The greedy planner repeatedly closes the candidate with the most
//! negative sensitivity, re-solves the power flow, and records the realized
//! metric after each step.

use nalgebra::{Cholesky, DVector, Dyn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::h2::{
    decompose_laplacians, h2_closed_with_lambda, uniform_ratio, LaplacianDecomposition,
};
use crate::powerflow::{solve_equilibrium, EquilibriumState};

/// One row of a per-iteration sensitivity table.
#[derive(Debug, Clone)]
pub struct CandidateSensitivity {
    /// Branch file index.
    pub edge: usize,
    /// `from-to` label of the branch.
    pub label: String,
    /// Metric derivative with respect to the branch susceptance.
    pub sensitivity: f64,
    /// Whether the line was already energized when the table was computed.
    pub was_on: bool,
}

/// Record of one greedy step.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// Sensitivities of every load-load line that was on plus every
    /// remaining candidate, in file order.
    pub table: Vec<CandidateSensitivity>,
    /// File index of the candidate closed in this step.
    pub selected: usize,
    /// Label of the selected candidate.
    pub selected_label: String,
    /// Its sensitivity at selection time.
    pub sensitivity: f64,
    /// Closed-form metric after re-solving with the line closed.
    pub h2_after: f64,
}

/// Output of the greedy planner.
#[derive(Debug, Clone)]
pub struct SwitchingPlan {
    /// Selected branch file indices, in selection order.
    pub selected: Vec<usize>,
    /// Their labels, in selection order.
    pub selected_labels: Vec<String>,
    /// Closed-form metric per step; entry 0 is the baseline before any
    /// switching, entry k the value after k lines closed.
    pub h2_trajectory: Vec<f64>,
    /// Per-step sensitivity tables and selections.
    pub iterations: Vec<IterationRecord>,
}

fn endpoint_vector(grid: &Grid, edge: usize) -> Result<DVector<f64>> {
    let br = grid
        .branches
        .get(edge)
        .ok_or_else(|| Error::UnknownEdge(format!("branch index {edge} out of range")))?;
    if grid.buses[br.from].kind.is_sf() || grid.buses[br.to].kind.is_sf() {
        return Err(Error::UnknownEdge(format!(
            "branch '{}' is a feeder; sensitivities are defined for load-load lines",
            grid.branch_label(edge)
        )));
    }
    let nl = grid.maps.load_file.len();
    let mut u = DVector::zeros(nl);
    u[grid.maps.load_pos[br.from]] = 1.0;
    u[grid.maps.load_pos[br.to]] = -1.0;
    Ok(u)
}

/// `w̄_e = V_i V_j cos(θ_i⁰ − θ_j⁰)` for a branch at the given equilibrium.
pub fn stiffness_coefficient(grid: &Grid, eq: &EquilibriumState, edge: usize) -> f64 {
    let br = &grid.branches[edge];
    let delta = eq.theta_of(grid, br.from) - eq.theta_of(grid, br.to);
    grid.buses[br.from].voltage * grid.buses[br.to].voltage * delta.cos()
}

fn sensitivity_with(
    grid: &Grid,
    eq: &EquilibriumState,
    decomp: &LaplacianDecomposition,
    chol: &Cholesky<f64, Dyn>,
    lambda: f64,
    edge: usize,
) -> Result<f64> {
    let u = endpoint_vector(grid, edge)?;
    let z = chol.solve(&u);
    let quad = (&decomp.l_s_star * &z).dot(&z);
    Ok(-0.5 * lambda * stiffness_coefficient(grid, eq, edge) * quad)
}

/// Susceptance sensitivity of the metric for one load-load line (energized
/// or not).
pub fn sensitivity(
    grid: &Grid,
    eq: &EquilibriumState,
    decomp: &LaplacianDecomposition,
    edge: usize,
) -> Result<f64> {
    let lambda = uniform_ratio(grid)?;
    let chol = decomp.l_s_cholesky()?;
    sensitivity_with(grid, eq, decomp, &chol, lambda, edge)
}

/// Sensitivities for a batch of load-load lines, sharing one factorization.
pub fn sensitivities_all(
    grid: &Grid,
    eq: &EquilibriumState,
    decomp: &LaplacianDecomposition,
    edges: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let lambda = uniform_ratio(grid)?;
    let chol = decomp.l_s_cholesky()?;
    edges
        .par_iter()
        .map(|&e| sensitivity_with(grid, eq, decomp, &chol, lambda, e).map(|s| (e, s)))
        .collect()
}

/// Most negative sensitivity; ties resolve to the earliest file index.
pub fn pick_best(table: &[(usize, f64)]) -> Option<(usize, f64)> {
    let mut rows: Vec<(usize, f64)> = table.to_vec();
    rows.sort_by_key(|&(e, _)| e);
    let mut best: Option<(usize, f64)> = None;
    for (e, s) in rows {
        match best {
            Some((_, bs)) if s < bs => best = Some((e, s)),
            None => best = Some((e, s)),
            _ => {}
        }
    }
    best
}

/// Greedily close `n_on` candidates, most negative sensitivity first.
pub fn greedy_switch(grid: &Grid, dispatchable: &[usize], n_on: usize) -> Result<SwitchingPlan> {
    let mut remaining: Vec<usize> = dispatchable.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    if remaining.len() != dispatchable.len() {
        return Err(Error::InvalidParameter(
            "candidate list contains duplicates".into(),
        ));
    }
    for &e in &remaining {
        let br = grid
            .branches
            .get(e)
            .ok_or_else(|| Error::UnknownEdge(format!("branch index {e} out of range")))?;
        if !br.switchable || br.initially_on {
            return Err(Error::InvalidParameter(format!(
                "branch '{}' is not a dispatchable off candidate",
                grid.branch_label(e)
            )));
        }
    }
    if n_on > remaining.len() {
        if remaining.is_empty() {
            return Err(Error::EmptyCandidates(
                "no switchable off lines are available".into(),
            ));
        }
        return Err(Error::InvalidParameter(format!(
            "requested {n_on} lines but only {} candidates exist",
            remaining.len()
        )));
    }

    let lambda = uniform_ratio(grid)?;
    let mut active = grid.initially_active();
    let mut eq = solve_equilibrium(grid, &active)?;
    let mut decomp = decompose_laplacians(grid, &eq)?;
    let mut trajectory = vec![h2_closed_with_lambda(grid, &decomp, lambda)?];
    let mut iterations = Vec::with_capacity(n_on);
    let mut selected = Vec::with_capacity(n_on);

    for _ in 0..n_on {
        let mut table_edges: Vec<usize> = grid
            .maps
            .e_l
            .iter()
            .copied()
            .filter(|e| active.contains(e))
            .chain(remaining.iter().copied())
            .collect();
        table_edges.sort_unstable();
        let batch = sensitivities_all(grid, &eq, &decomp, &table_edges)?;
        let table: Vec<CandidateSensitivity> = batch
            .iter()
            .map(|&(e, s)| CandidateSensitivity {
                edge: e,
                label: grid.branch_label(e),
                sensitivity: s,
                was_on: active.contains(&e),
            })
            .collect();
        let off_rows: Vec<(usize, f64)> = batch
            .iter()
            .copied()
            .filter(|(e, _)| remaining.contains(e))
            .collect();
        let (choice, sens) = pick_best(&off_rows).expect("remaining is non-empty");

        remaining.retain(|&e| e != choice);
        active.push(choice);
        active.sort_unstable();
        eq = solve_equilibrium(grid, &active)?;
        decomp = decompose_laplacians(grid, &eq)?;
        let h2_after = h2_closed_with_lambda(grid, &decomp, lambda)?;
        trajectory.push(h2_after);
        selected.push(choice);
        iterations.push(IterationRecord {
            table,
            selected: choice,
            selected_label: grid.branch_label(choice),
            sensitivity: sens,
            h2_after,
        });
    }

    Ok(SwitchingPlan {
        selected_labels: selected.iter().map(|&e| grid.branch_label(e)).collect(),
        selected,
        h2_trajectory: trajectory,
        iterations,
    })
}
