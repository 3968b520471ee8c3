//! Built-in invariant suite over the embedded fixtures.
//!
//! `gridswitch selfcheck` runs every check and reports one line per check;
//! any failure is collected into a single [`Error::SelfCheck`]. The suite
//! re-verifies the analytic identities the tool relies on — decomposition
//! equalities, bound ordering, closed-form/Gramian agreement, sensitivity
//! signs and derivatives — on networks small enough to run in well under a
//! second.

use crate::error::{Error, Result};
use crate::fixtures;
use crate::grid::Grid;
use crate::h2::{
    decompose_laplacians, h2_bounds, h2_closed_form, h2_gramian, trace_pi, uniform_ratio,
};
use crate::linearize::build_state_space;
use crate::powerflow::solve_equilibrium;
use crate::simulation::{impulse_energy, settle_horizon, simulate, DisturbanceSpec};
use crate::switching::{greedy_switch, sensitivities_all, stiffness_coefficient};

/// Result of one named check.
#[derive(Debug)]
pub struct CheckOutcome {
    /// Stable check identifier.
    pub name: &'static str,
    /// `Ok` on pass, diagnostic message on failure.
    pub result: std::result::Result<(), String>,
}

fn check(name: &'static str, f: impl FnOnce() -> std::result::Result<(), String>) -> CheckOutcome {
    CheckOutcome { name, result: f() }
}

fn ensure_close(label: &str, got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{label}: got {got}, want {want} (tol {tol:e})"))
    }
}

fn baseline(grid: &Grid) -> std::result::Result<crate::powerflow::EquilibriumState, String> {
    solve_equilibrium(grid, &grid.initially_active()).map_err(|e| e.to_string())
}

fn corridor_closed_form() -> std::result::Result<(), String> {
    let g = fixtures::t3();
    let eq = baseline(&g)?;
    let d = decompose_laplacians(&g, &eq).map_err(|e| e.to_string())?;
    let closed = h2_closed_form(&g, &d).map_err(|e| e.to_string())?;
    ensure_close("three-bus corridor closed form", closed, 1.75, 1e-12)
}

fn corridor_gramian_agreement() -> std::result::Result<(), String> {
    let g = fixtures::t3();
    let eq = baseline(&g)?;
    let ss = build_state_space(&g, &eq).map_err(|e| e.to_string())?;
    let gram = h2_gramian(&ss).map_err(|e| e.to_string())?;
    ensure_close("three-bus corridor Gramian", gram, 1.75, 1e-9)
}

fn corridor_bounds_collapse() -> std::result::Result<(), String> {
    let g = fixtures::t3();
    let eq = baseline(&g)?;
    let d = decompose_laplacians(&g, &eq).map_err(|e| e.to_string())?;
    let (lo, hi) = h2_bounds(&g, &eq, &d).map_err(|e| e.to_string())?;
    ensure_close("lower bound", lo, 1.75, 1e-9)?;
    ensure_close("upper bound", hi, 1.75, 1e-9)
}

fn lemma_decomposition() -> std::result::Result<(), String> {
    for (label, g) in [
        ("corridor", fixtures::t3()),
        ("extended corridor", fixtures::t3x()),
        ("ring", fixtures::ring36()),
    ] {
        let eq = baseline(&g)?;
        let d = decompose_laplacians(&g, &eq).map_err(|e| e.to_string())?;
        let (direct, decomposed) = trace_pi(&g, &eq, &d).map_err(|e| e.to_string())?;
        if (direct - decomposed).abs() > 1e-9 * (1.0 + direct.abs()) {
            return Err(format!(
                "{label}: trace {direct} vs decomposed {decomposed}"
            ));
        }
        if d.block_inverse_defect > 1e-9 {
            return Err(format!(
                "{label}: block-inverse defect {:e}",
                d.block_inverse_defect
            ));
        }
    }
    Ok(())
}

fn heterogeneous_bounds_strict() -> std::result::Result<(), String> {
    let mut f = fixtures::t3_file();
    f.buses[1].disturbance = 2.0;
    let g = Grid::from_file(f).map_err(|e| e.to_string())?;
    let eq = baseline(&g)?;
    let d = decompose_laplacians(&g, &eq).map_err(|e| e.to_string())?;
    match h2_closed_form(&g, &d) {
        Err(Error::NonUniformRatios(_)) => {}
        other => return Err(format!("closed form should be refused, got {other:?}")),
    }
    let ss = build_state_space(&g, &eq).map_err(|e| e.to_string())?;
    let gram = h2_gramian(&ss).map_err(|e| e.to_string())?;
    let (lo, hi) = h2_bounds(&g, &eq, &d).map_err(|e| e.to_string())?;
    if lo < gram && gram < hi {
        Ok(())
    } else {
        Err(format!("bounds not strict: {lo} / {gram} / {hi}"))
    }
}

fn sensitivity_signs() -> std::result::Result<(), String> {
    let g = fixtures::t3x();
    let eq = baseline(&g)?;
    let d = decompose_laplacians(&g, &eq).map_err(|e| e.to_string())?;
    let batch = sensitivities_all(&g, &eq, &d, &g.maps.e_l).map_err(|e| e.to_string())?;
    for (e, s) in batch {
        if s >= 0.0 {
            return Err(format!("line {}: sensitivity {s} not negative", e));
        }
    }
    Ok(())
}

fn sensitivity_finite_difference() -> std::result::Result<(), String> {
    let g = fixtures::t3x();
    let eq = baseline(&g)?;
    let d = decompose_laplacians(&g, &eq).map_err(|e| e.to_string())?;
    let lambda = uniform_ratio(&g).map_err(|e| e.to_string())?;
    let batch = sensitivities_all(&g, &eq, &d, &g.candidates()).map_err(|e| e.to_string())?;
    for (e, s) in batch {
        let br = &g.branches[e];
        let wbar = stiffness_coefficient(&g, &eq, e);
        let nl = d.loads.len();
        let mut u = nalgebra::DVector::zeros(nl);
        u[g.maps.load_pos[br.from]] = 1.0;
        u[g.maps.load_pos[br.to]] = -1.0;
        let h = 1e-6 * br.susceptance;
        let objective = |step: f64| -> std::result::Result<f64, String> {
            let mut ls = d.l_s.clone();
            for r in 0..nl {
                for c in 0..nl {
                    ls[(r, c)] += step * wbar * u[r] * u[c];
                }
            }
            let chol = ls.cholesky().ok_or("perturbed matrix not positive definite")?;
            Ok(0.5 * lambda * chol.solve(&d.l_s_star).trace())
        };
        let fd = (objective(h)? - objective(-h)?) / (2.0 * h);
        if (fd - s).abs() > 1e-4 * s.abs().max(1e-12) {
            return Err(format!("line {e}: analytic {s} vs finite difference {fd}"));
        }
    }
    Ok(())
}

fn greedy_frozen_trajectory() -> std::result::Result<(), String> {
    let g = fixtures::t3x();
    let plan = greedy_switch(&g, &g.candidates(), 2).map_err(|e| e.to_string())?;
    if plan.selected_labels != ["c1-l2", "c2-l2"] {
        return Err(format!("selection order {:?}", plan.selected_labels));
    }
    let expected = [43.0 / 12.0, 59.0 / 24.0, 47.0 / 22.0];
    for (got, want) in plan.h2_trajectory.iter().zip(expected) {
        ensure_close("trajectory point", *got, want, 1e-10)?;
    }
    Ok(())
}

fn impulse_energy_convergence() -> std::result::Result<(), String> {
    let g = fixtures::t3();
    let eq = baseline(&g)?;
    let ss = build_state_space(&g, &eq).map_err(|e| e.to_string())?;
    let gram = h2_gramian(&ss).map_err(|e| e.to_string())?;
    let horizon = settle_horizon(&ss).map_err(|e| e.to_string())?;
    let energy = impulse_energy(&ss, horizon, 0.002).map_err(|e| e.to_string())?;
    ensure_close("impulse energy", energy, gram, 1e-3 * gram)
}

fn simulation_determinism() -> std::result::Result<(), String> {
    let g = fixtures::t3();
    let eq = baseline(&g)?;
    let ss = build_state_space(&g, &eq).map_err(|e| e.to_string())?;
    let spec = DisturbanceSpec::noise(20.0, 0.02, 2.0, 11);
    let a = simulate(&ss, &spec).map_err(|e| e.to_string())?;
    let b = simulate(&ss, &spec).map_err(|e| e.to_string())?;
    if a.s_accumulative != b.s_accumulative || a.outputs != b.outputs {
        return Err("repeated runs with one seed diverged".into());
    }
    Ok(())
}

fn ring_equilibrium_quality() -> std::result::Result<(), String> {
    let g = fixtures::ring36();
    let eq = baseline(&g)?;
    if eq.residual > 1e-10 {
        return Err(format!("power-flow residual {:e}", eq.residual));
    }
    let min_wp = eq.wp.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_wp <= 0.0 {
        return Err(format!("equilibrium not secure, min weight {min_wp}"));
    }
    Ok(())
}

/// Run every check, pass or fail.
pub fn run_checks() -> Vec<CheckOutcome> {
    vec![
        check("corridor-closed-form", corridor_closed_form),
        check("corridor-gramian-agreement", corridor_gramian_agreement),
        check("corridor-bounds-collapse", corridor_bounds_collapse),
        check("lemma-decomposition", lemma_decomposition),
        check("heterogeneous-bounds-strict", heterogeneous_bounds_strict),
        check("sensitivity-signs", sensitivity_signs),
        check("sensitivity-finite-difference", sensitivity_finite_difference),
        check("greedy-frozen-trajectory", greedy_frozen_trajectory),
        check("impulse-energy-convergence", impulse_energy_convergence),
        check("simulation-determinism", simulation_determinism),
        check("ring-equilibrium-quality", ring_equilibrium_quality),
    ]
}

/// Run every check and fold failures into one error.
pub fn ensure() -> Result<Vec<CheckOutcome>> {
    let outcomes = run_checks();
    let failures: Vec<String> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().err().map(|m| format!("{}: {m}", o.name)))
        .collect();
    if failures.is_empty() {
        Ok(outcomes)
    } else {
        Err(Error::SelfCheck(failures.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_on_a_fresh_build() {
        for outcome in run_checks() {
            assert!(
                outcome.result.is_ok(),
                "{}: {}",
                outcome.name,
                outcome.result.unwrap_err()
            );
        }
    }

    #[test]
    fn check_names_are_unique() {
        let mut names: Vec<_> = run_checks().iter().map(|o| o.name).collect();
        let before = names.len();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), before);
    }

    #[test]
    fn ensure_returns_the_outcome_list() {
        let outcomes = ensure().unwrap();
        assert_eq!(outcomes.len(), 11);
    }
}
