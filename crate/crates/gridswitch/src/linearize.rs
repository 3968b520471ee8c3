//! State-space linearization of the grid dynamics around an equilibrium.
//!
//! States are `x = col(α, ω̲)` where α are the relative bus angles (non-
//! reference buses, canonical order) and ω̲ the frequency deviations of the
//! non-reference generating units. With the reference grounded, the blocks
//! are
//!
//! ```text
//! A = [ -S L̲          T_SF        ]      S = blockdiag(0, D_L⁻¹)
//!     [ -M̲⁻¹ T_SFᵀ L̲  -M̲⁻¹ D̲_SF ]
//!
//! B = [ 0              T_L D_L⁻¹ Λ_L^{1/2} ]
//!     [ M̲⁻¹ Λ_SF^{1/2}  0                  ]
//!
//! C = [ W_1^{1/2} E̲ᵀ  0        ]
//!     [ 0              W_2^{1/2} ]
//! ```
//!
//! `L̲` is the reduced stiffness Laplacian over the *active* branches, while
//! `C`'s incidence spans *all* branches: the synchronization metric always
//! scores every corridor of the grid, switched on or off, so metric values
//! before and after switching are comparable.
//!
//! Inputs are disturbances at the non-reference buses, ordered units first
//! then loads (file order within each block). Outputs are the weighted angle
//! differences per branch followed by the weighted unit frequencies.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::powerflow::EquilibriumState;

/// Spectral-abscissa threshold for the stability check.
pub const HURWITZ_TOLERANCE: f64 = -1e-9;

/// The angle-difference transformation α = Tθ and its column partitions.
#[derive(Debug, Clone)]
pub struct TransformationT {
    /// (|V|−1) × |V| matrix `[−1 | I]` in canonical bus order.
    pub t: DMatrix<f64>,
    /// Columns of `t` at the non-reference generating units.
    pub t_sf: DMatrix<f64>,
    /// Columns of `t` at the load buses.
    pub t_l: DMatrix<f64>,
}

/// Build the transformation matrix for a grid's canonical ordering.
pub fn build_t(grid: &Grid) -> TransformationT {
    let n = grid.n_buses();
    let k = grid.maps.sf_rest_file.len();
    let nl = grid.maps.load_file.len();
    let mut t = DMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        t[(i, 0)] = -1.0;
        t[(i, i + 1)] = 1.0;
    }
    let t_sf = t.view((0, 1), (n - 1, k)).into_owned();
    let t_l = t.view((0, 1 + k), (n - 1, nl)).into_owned();
    TransformationT { t, t_sf, t_l }
}

/// Dense linearized system with channel labelling.
#[derive(Debug, Clone)]
pub struct StateSpace {
    /// State matrix, (n_alpha + n_omega) square.
    pub a: DMatrix<f64>,
    /// Input matrix; one column per non-reference bus (units then loads).
    pub b: DMatrix<f64>,
    /// Output matrix; one row per branch then per non-reference unit.
    pub c: DMatrix<f64>,
    /// Number of angle states (|V|−1).
    pub n_alpha: usize,
    /// Number of frequency states (non-reference units).
    pub n_omega: usize,
    /// Number of branch output rows (= all branches of the grid).
    pub n_edge_outputs: usize,
    /// State labels: `alpha:<bus>` then `omega:<bus>`.
    pub state_labels: Vec<String>,
    /// Input labels: `u:<bus>`.
    pub input_labels: Vec<String>,
    /// Output labels: `dtheta:<from>-<to>` then `freq:<bus>`.
    pub output_labels: Vec<String>,
    /// Per-output factors mapping weighted outputs back to physical units
    /// (1/√w1 per branch row, 1/√w2 per frequency row).
    pub output_unweight: Vec<f64>,
}

impl StateSpace {
    /// State dimension.
    pub fn n_states(&self) -> usize {
        self.n_alpha + self.n_omega
    }

    /// Input dimension.
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension.
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
}

/// Assemble the linearization for the equilibrium's active edge set.
pub fn build_state_space(grid: &Grid, eq: &EquilibriumState) -> Result<StateSpace> {
    for &i in &grid.maps.load_file {
        if grid.buses[i].damping <= 0.0 {
            return Err(Error::NonPositiveDamping(format!(
                "load bus '{}' has damping {}",
                grid.buses[i].id, grid.buses[i].damping
            )));
        }
    }
    if let Some(pos) = eq.wp.iter().position(|&w| w <= 0.0) {
        return Err(Error::InsecureEquilibrium(format!(
            "branch '{}' has non-positive stiffness",
            grid.branch_label(eq.active[pos])
        )));
    }

    let n = grid.n_buses();
    let k = grid.maps.sf_rest_file.len();
    let nl = grid.maps.load_file.len();
    let n_alpha = n - 1;
    let n_states = n_alpha + k;
    let lred = grid::reduced_laplacian(grid, &eq.active, &eq.wp);

    let mut a = DMatrix::zeros(n_states, n_states);
    // Angle rows: units integrate their frequency state, loads follow the
    // damped gradient flow of the stiffness Laplacian.
    for j in 0..k {
        a[(j, n_alpha + j)] = 1.0;
    }
    for (pos, &file) in grid.maps.load_file.iter().enumerate() {
        let row = k + pos;
        let inv_d = 1.0 / grid.buses[file].damping;
        for col in 0..n_alpha {
            a[(row, col)] = -inv_d * lred[(row, col)];
        }
    }
    // Swing rows of the non-reference units.
    for (j, &file) in grid.maps.sf_rest_file.iter().enumerate() {
        let bus = &grid.buses[file];
        let inv_m = 1.0 / bus.inertia.expect("validated: units carry inertia");
        let row = n_alpha + j;
        for col in 0..n_alpha {
            a[(row, col)] = -inv_m * lred[(j, col)];
        }
        a[(row, row)] = -inv_m * bus.damping;
    }

    let n_inputs = k + nl;
    let mut b = DMatrix::zeros(n_states, n_inputs);
    for (j, &file) in grid.maps.sf_rest_file.iter().enumerate() {
        let bus = &grid.buses[file];
        b[(n_alpha + j, j)] = bus.disturbance.sqrt() / bus.inertia.unwrap();
    }
    for (pos, &file) in grid.maps.load_file.iter().enumerate() {
        let bus = &grid.buses[file];
        b[(k + pos, k + pos)] = bus.disturbance.sqrt() / bus.damping;
    }

    let all_edges: Vec<usize> = (0..grid.n_branches()).collect();
    let einc = grid::incidence_reduced(grid, &all_edges);
    let n_outputs = grid.n_branches() + k;
    let mut c = DMatrix::zeros(n_outputs, n_states);
    let mut output_labels = Vec::with_capacity(n_outputs);
    let mut output_unweight = Vec::with_capacity(n_outputs);
    for e in 0..grid.n_branches() {
        let sw = grid.w1[e].sqrt();
        for col in 0..n_alpha {
            c[(e, col)] = sw * einc[(col, e)];
        }
        output_labels.push(format!("dtheta:{}", grid.branch_label(e)));
        output_unweight.push(1.0 / sw);
    }
    for (j, &file) in grid.maps.sf_rest_file.iter().enumerate() {
        let sw = grid.w2[file].sqrt();
        c[(grid.n_branches() + j, n_alpha + j)] = sw;
        output_labels.push(format!("freq:{}", grid.buses[file].id));
        output_unweight.push(1.0 / sw);
    }

    let mut state_labels = Vec::with_capacity(n_states);
    for &file in &grid.maps.file_of_canon[1..] {
        state_labels.push(format!("alpha:{}", grid.buses[file].id));
    }
    for &file in &grid.maps.sf_rest_file {
        state_labels.push(format!("omega:{}", grid.buses[file].id));
    }
    let mut input_labels = Vec::with_capacity(n_inputs);
    for &file in &grid.maps.sf_rest_file {
        input_labels.push(format!("u:{}", grid.buses[file].id));
    }
    for &file in &grid.maps.load_file {
        input_labels.push(format!("u:{}", grid.buses[file].id));
    }

    Ok(StateSpace {
        a,
        b,
        c,
        n_alpha,
        n_omega: k,
        n_edge_outputs: grid.n_branches(),
        state_labels,
        input_labels,
        output_labels,
        output_unweight,
    })
}

/// Spectral abscissa (largest real part of the eigenvalues) of a matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Stability check: true iff every eigenvalue has real part below the
/// threshold. Returns the abscissa alongside.
pub fn hurwitz_check(ss: &StateSpace) -> (bool, f64) {
    let abscissa = spectral_abscissa(&ss.a);
    (abscissa < HURWITZ_TOLERANCE, abscissa)
}
