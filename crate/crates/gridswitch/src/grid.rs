//! Structure-preserved grid model: buses, branches, orderings, and graph
//! matrices.
//!
//! A grid is a connected graph whose vertices are buses of three kinds:
//!
//! * **load** buses with first-order (damped) angle dynamics,
//! * **sync** buses (synchronous generators) and **inverter** buses
//!   (grid-forming inverters) with second-order swing dynamics.
//!
//! Sync and inverter buses together form the *SF set*. The input format
//! models each generating unit behind its own internal bus, so every SF bus
//! attaches to the network through exactly one branch, and that branch ends
//! at a load bus. Branches therefore split into the SF attachment set
//! (SF-load) and the load-load set; only load-load branches may be
//! switchable.
//!
//! # Orderings
//!
//! The file order of buses and branches is the contract for every derived
//! object. The *reference bus* is the first SF bus in file order; its angle
//! is the datum for all relative coordinates. Matrices use the *canonical
//! bus order*
//!
//! ```text
//! [reference, other SF buses (file order), load buses (file order)]
//! ```
//!
//! so that deleting the first row/column of a bus-indexed matrix removes the
//! reference, and the remaining rows split into an SF block followed by a
//! load block. Edge-indexed objects always use branch file order.
//!
//! # Validation
//!
//! [`load_grid`] and [`Grid::from_json`] reject exactly the constructions
//! that violate the documented invariants and report the offending element.
//! Zero-injection load buses with zero damping are given the small
//! singular-perturbation damping `epsilon` from the file (default `1e-3`).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default singular-perturbation damping for zero-injection load buses.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Default per-edge weight on angle-difference outputs.
pub const DEFAULT_W1: f64 = 1.0;

/// Default per-bus weight on frequency-deviation outputs.
pub const DEFAULT_W2: f64 = 1.0;

/// Bus dynamic kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    /// First-order load bus.
    #[serde(rename = "load")]
    Load,
    /// Synchronous generator (second-order swing dynamics).
    #[serde(rename = "sync")]
    SyncGen,
    /// Grid-forming inverter (second-order swing dynamics).
    #[serde(rename = "inverter")]
    FormingInverter,
}

impl BusKind {
    /// True for sync and inverter buses (the SF set).
    pub fn is_sf(self) -> bool {
        !matches!(self, BusKind::Load)
    }
}

/// A validated bus. `damping` already includes the epsilon substitution for
/// zero-injection, zero-damping load buses.
#[derive(Debug, Clone)]
pub struct Bus {
    /// Unique identifier from the input file.
    pub id: String,
    /// Dynamic kind.
    pub kind: BusKind,
    /// Voltage magnitude (per unit), positive.
    pub voltage: f64,
    /// Damping coefficient, positive after epsilon substitution for
    /// zero-injection loads; may be zero for loads with nonzero injection
    /// (rejected later when a positive-definite damping block is required).
    pub damping: f64,
    /// Rotational (or virtual) inertia; present exactly for SF buses.
    pub inertia: Option<f64>,
    /// Net active-power injection (per unit).
    pub p_in: f64,
    /// Disturbance intensity entering the input matrix, non-negative.
    pub disturbance: f64,
}

/// A validated branch. Endpoints are file indices into [`Grid::buses`].
#[derive(Debug, Clone)]
pub struct Branch {
    /// File index of the `from` bus.
    pub from: usize,
    /// File index of the `to` bus.
    pub to: usize,
    /// Nominal susceptance, positive. Switched-off lines are modelled by
    /// excluding the branch from the active edge set (susceptance exactly
    /// zero), never by a zero value here.
    pub susceptance: f64,
    /// Whether the line may be toggled by switching.
    pub switchable: bool,
    /// Whether the line starts in the active set.
    pub initially_on: bool,
}

/// Precomputed orderings shared by all matrix builders.
#[derive(Debug, Clone)]
pub struct IndexMaps {
    /// File index of the reference bus (first SF bus in file order).
    pub reference: usize,
    /// Canonical position of each bus, indexed by file index.
    pub canon_of_file: Vec<usize>,
    /// File index of each bus, indexed by canonical position.
    pub file_of_canon: Vec<usize>,
    /// SF buses in file order.
    pub sf_file: Vec<usize>,
    /// Non-reference SF buses in file order.
    pub sf_rest_file: Vec<usize>,
    /// Load buses in file order.
    pub load_file: Vec<usize>,
    /// Branch indices of SF attachment edges, file order.
    pub e_sf: Vec<usize>,
    /// Branch indices of load-load edges, file order.
    pub e_l: Vec<usize>,
    /// Position of a bus within `load_file`, indexed by file index
    /// (`usize::MAX` for non-loads).
    pub load_pos: Vec<usize>,
    /// Position of a bus within `sf_rest_file`, indexed by file index
    /// (`usize::MAX` otherwise).
    pub sf_rest_pos: Vec<usize>,
    /// Branch index of the single attachment edge of each SF bus, indexed by
    /// file index (`usize::MAX` for loads).
    pub sf_edge: Vec<usize>,
}

/// A validated grid with resolved output weights and index maps.
#[derive(Debug, Clone)]
pub struct Grid {
    /// Singular-perturbation damping used for zero-injection load buses.
    pub epsilon: f64,
    /// Buses in file order.
    pub buses: Vec<Bus>,
    /// Branches in file order.
    pub branches: Vec<Branch>,
    /// Angle-difference output weight per branch (file order), positive.
    pub w1: Vec<f64>,
    /// Frequency output weight per bus (file order), positive; meaningful
    /// for SF buses.
    pub w2: Vec<f64>,
    /// Orderings derived from the file.
    pub maps: IndexMaps,
}

// ---------------------------------------------------------------------------
// Input schema
// ---------------------------------------------------------------------------

/// Raw bus record as found in the JSON input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusFile {
    pub id: String,
    pub kind: BusKind,
    pub voltage: f64,
    pub damping: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<f64>,
    pub p_in: f64,
    pub disturbance: f64,
}

/// Raw branch record as found in the JSON input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchFile {
    pub from: String,
    pub to: String,
    pub susceptance: f64,
    pub switchable: bool,
    pub initially_on: bool,
}

/// Raw weight overrides as found in the JSON input.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1_default: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2_default: Option<f64>,
    /// Per-edge overrides keyed `"<from>-<to>"` with the branch's own
    /// orientation.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub w1: BTreeMap<String, f64>,
    /// Per-bus overrides keyed by SF bus id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub w2: BTreeMap<String, f64>,
}

/// Raw grid document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub buses: Vec<BusFile>,
    pub branches: Vec<BranchFile>,
    #[serde(default)]
    pub weights: WeightsFile,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

// ---------------------------------------------------------------------------
// Loading and validation
// ---------------------------------------------------------------------------

/// Load and validate a grid from a JSON file.
pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let text = std::fs::read_to_string(path.as_ref())?;
    Grid::from_json(&text)
}

impl Grid {
    /// Parse and validate a grid from JSON text.
    pub fn from_json(text: &str) -> Result<Grid> {
        let file: GridFile =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Grid::from_file(file)
    }

    /// Validate a raw document and build the index maps.
    pub fn from_file(file: GridFile) -> Result<Grid> {
        if !(file.epsilon.is_finite() && file.epsilon > 0.0) {
            return Err(Error::invariant(
                "epsilon-positive",
                format!("epsilon = {}", file.epsilon),
            ));
        }
        if file.buses.is_empty() {
            return Err(Error::invariant("buses-nonempty", "no buses"));
        }

        // --- buses ---
        let mut bus_index: BTreeMap<String, usize> = BTreeMap::new();
        let mut buses = Vec::with_capacity(file.buses.len());
        for (i, b) in file.buses.iter().enumerate() {
            if b.id.is_empty() {
                return Err(Error::invariant("bus-id-nonempty", format!("bus #{i}")));
            }
            if b.id.contains('-') {
                return Err(Error::invariant(
                    "bus-id-charset",
                    format!("bus '{}': ids must not contain '-'", b.id),
                ));
            }
            if bus_index.insert(b.id.clone(), i).is_some() {
                return Err(Error::invariant("bus-id-unique", format!("bus '{}'", b.id)));
            }
            if !(b.voltage.is_finite() && b.voltage > 0.0) {
                return Err(Error::invariant(
                    "voltage-positive",
                    format!("bus '{}': voltage = {}", b.id, b.voltage),
                ));
            }
            if !(b.damping.is_finite() && b.damping >= 0.0) {
                return Err(Error::invariant(
                    "damping-nonnegative",
                    format!("bus '{}': damping = {}", b.id, b.damping),
                ));
            }
            if !b.p_in.is_finite() {
                return Err(Error::invariant(
                    "injection-finite",
                    format!("bus '{}'", b.id),
                ));
            }
            if !(b.disturbance.is_finite() && b.disturbance >= 0.0) {
                return Err(Error::invariant(
                    "disturbance-nonnegative",
                    format!("bus '{}': disturbance = {}", b.id, b.disturbance),
                ));
            }
            if b.kind.is_sf() && b.damping == 0.0 {
                return Err(Error::invariant(
                    "sf-damping-positive",
                    format!("bus '{}': sync/inverter buses need damping > 0", b.id),
                ));
            }
            match (b.kind.is_sf(), b.inertia) {
                (true, Some(m)) if m.is_finite() && m > 0.0 => {}
                (true, Some(m)) => {
                    return Err(Error::invariant(
                        "inertia-positive",
                        format!("bus '{}': inertia = {}", b.id, m),
                    ));
                }
                (true, None) => {
                    return Err(Error::invariant(
                        "inertia-required",
                        format!("bus '{}': sync/inverter buses need inertia", b.id),
                    ));
                }
                (false, Some(_)) => {
                    return Err(Error::invariant(
                        "inertia-absent-for-loads",
                        format!("bus '{}': load buses must not declare inertia", b.id),
                    ));
                }
                (false, None) => {}
            }
            // Singular-perturbation substitution: zero-injection, zero-damping
            // load buses get the small damping epsilon.
            let damping = if !b.kind.is_sf() && b.p_in == 0.0 && b.damping == 0.0 {
                file.epsilon
            } else {
                b.damping
            };
            buses.push(Bus {
                id: b.id.clone(),
                kind: b.kind,
                voltage: b.voltage,
                damping,
                inertia: b.inertia,
                p_in: b.p_in,
                disturbance: b.disturbance,
            });
        }

        let sf_file: Vec<usize> = (0..buses.len()).filter(|&i| buses[i].kind.is_sf()).collect();
        let load_file: Vec<usize> =
            (0..buses.len()).filter(|&i| !buses[i].kind.is_sf()).collect();
        let reference = *sf_file.first().ok_or_else(|| {
            Error::invariant("sf-nonempty", "grid has no sync or inverter bus")
        })?;

        // --- branches ---
        let mut seen_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut branches = Vec::with_capacity(file.branches.len());
        let mut e_sf = Vec::new();
        let mut e_l = Vec::new();
        let mut sf_degree = vec![0usize; buses.len()];
        let mut sf_edge = vec![usize::MAX; buses.len()];
        for (e, br) in file.branches.iter().enumerate() {
            let label = format!("{}-{}", br.from, br.to);
            let from = *bus_index.get(&br.from).ok_or_else(|| {
                Error::invariant("branch-endpoint-exists", format!("branch '{label}': '{}'", br.from))
            })?;
            let to = *bus_index.get(&br.to).ok_or_else(|| {
                Error::invariant("branch-endpoint-exists", format!("branch '{label}': '{}'", br.to))
            })?;
            if from == to {
                return Err(Error::invariant("branch-no-self-loop", format!("branch '{label}'")));
            }
            let key = (from.min(to), from.max(to));
            if !seen_pairs.insert(key) {
                return Err(Error::invariant(
                    "branch-pair-unique",
                    format!("branch '{label}' duplicates an unordered bus pair"),
                ));
            }
            if !(br.susceptance.is_finite() && br.susceptance > 0.0) {
                return Err(Error::invariant(
                    "susceptance-positive",
                    format!(
                        "branch '{label}': susceptance = {} (switched-off lines are \
                         modelled via the active edge set, not a zero value)",
                        br.susceptance
                    ),
                ));
            }
            let sf_ends = (buses[from].kind.is_sf(), buses[to].kind.is_sf());
            match sf_ends {
                (true, true) => {
                    return Err(Error::invariant(
                        "branch-partition",
                        format!("branch '{label}' connects two sync/inverter buses; \
                                 SF attachment edges must connect an SF bus to a load bus"),
                    ));
                }
                (false, false) => e_l.push(e),
                _ => {
                    let sf_end = if sf_ends.0 { from } else { to };
                    sf_degree[sf_end] += 1;
                    sf_edge[sf_end] = e;
                    e_sf.push(e);
                }
            }
            if br.switchable && !matches!(sf_ends, (false, false)) {
                return Err(Error::invariant(
                    "switchable-load-load",
                    format!("branch '{label}': only load-load lines may be switchable"),
                ));
            }
            if !br.switchable && !br.initially_on {
                return Err(Error::invariant(
                    "fixed-line-on",
                    format!("branch '{label}' is not switchable and cannot start switched off"),
                ));
            }
            branches.push(Branch {
                from,
                to,
                susceptance: br.susceptance,
                switchable: br.switchable,
                initially_on: br.initially_on,
            });
        }

        // Each SF bus is an internal generating-unit bus behind exactly one
        // attachment branch; the partitioned network matrices rely on this.
        for &s in &sf_file {
            if sf_degree[s] != 1 {
                return Err(Error::invariant(
                    "sf-single-attachment",
                    format!(
                        "bus '{}' has {} incident branches; every sync/inverter bus \
                         must attach through exactly one branch",
                        buses[s].id, sf_degree[s]
                    ),
                ));
            }
        }

        // --- weights ---
        let w1_default = file.weights.w1_default.unwrap_or(DEFAULT_W1);
        let w2_default = file.weights.w2_default.unwrap_or(DEFAULT_W2);
        for (name, v) in [("w1_default", w1_default), ("w2_default", w2_default)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invariant(
                    "weight-positive",
                    format!("{name} = {v}"),
                ));
            }
        }
        let mut w1 = vec![w1_default; branches.len()];
        let mut labels: BTreeMap<String, usize> = BTreeMap::new();
        for (e, br) in branches.iter().enumerate() {
            labels.insert(format!("{}-{}", buses[br.from].id, buses[br.to].id), e);
        }
        for (key, &v) in &file.weights.w1 {
            let e = *labels.get(key).ok_or_else(|| {
                Error::Schema(format!("w1 override '{key}' matches no branch (keys use \
                                       the branch's own '<from>-<to>' orientation)"))
            })?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invariant("weight-positive", format!("w1['{key}'] = {v}")));
            }
            w1[e] = v;
        }
        let mut w2 = vec![w2_default; buses.len()];
        for (key, &v) in &file.weights.w2 {
            let i = *bus_index.get(key).ok_or_else(|| {
                Error::Schema(format!("w2 override '{key}' matches no bus"))
            })?;
            if !buses[i].kind.is_sf() {
                return Err(Error::Schema(format!(
                    "w2 override '{key}' targets a load bus; frequency weights \
                     apply to sync/inverter buses"
                )));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invariant("weight-positive", format!("w2['{key}'] = {v}")));
            }
            w2[i] = v;
        }

        // --- orderings ---
        let sf_rest_file: Vec<usize> =
            sf_file.iter().copied().filter(|&i| i != reference).collect();
        let mut file_of_canon = Vec::with_capacity(buses.len());
        file_of_canon.push(reference);
        file_of_canon.extend(sf_rest_file.iter().copied());
        file_of_canon.extend(load_file.iter().copied());
        let mut canon_of_file = vec![0usize; buses.len()];
        for (pos, &i) in file_of_canon.iter().enumerate() {
            canon_of_file[i] = pos;
        }
        let mut load_pos = vec![usize::MAX; buses.len()];
        for (k, &i) in load_file.iter().enumerate() {
            load_pos[i] = k;
        }
        let mut sf_rest_pos = vec![usize::MAX; buses.len()];
        for (k, &i) in sf_rest_file.iter().enumerate() {
            sf_rest_pos[i] = k;
        }

        let grid = Grid {
            epsilon: file.epsilon,
            buses,
            branches,
            w1,
            w2,
            maps: IndexMaps {
                reference,
                canon_of_file,
                file_of_canon,
                sf_file,
                sf_rest_file,
                load_file,
                e_sf,
                e_l,
                load_pos,
                sf_rest_pos,
                sf_edge,
            },
        };

        // --- connectivity of the full graph ---
        let all: Vec<usize> = (0..grid.branches.len()).collect();
        if !is_connected(&grid, &all) {
            return Err(Error::Disconnected(
                "the grid graph with all branches present is disconnected".into(),
            ));
        }

        Ok(grid)
    }

    /// Number of buses.
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    /// Number of branches.
    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    /// Human-readable `"<from>-<to>"` label of a branch.
    pub fn branch_label(&self, e: usize) -> String {
        let br = &self.branches[e];
        format!("{}-{}", self.buses[br.from].id, self.buses[br.to].id)
    }

    /// Branch indices active before any switching: every non-switchable
    /// branch plus switchable branches marked initially on.
    pub fn initially_active(&self) -> Vec<usize> {
        (0..self.branches.len())
            .filter(|&e| !self.branches[e].switchable || self.branches[e].initially_on)
            .collect()
    }

    /// Switchable branches that start off: the candidate set for switching.
    pub fn candidates(&self) -> Vec<usize> {
        (0..self.branches.len())
            .filter(|&e| self.branches[e].switchable && !self.branches[e].initially_on)
            .collect()
    }

    /// Resolve a `"<from>-<to>"` label to a branch index.
    pub fn branch_by_label(&self, label: &str) -> Option<usize> {
        (0..self.branches.len()).find(|&e| self.branch_label(e) == label)
    }

    /// Serialize back to the input document form (canonical for fixtures).
    pub fn to_file(&self) -> GridFile {
        GridFile {
            epsilon: self.epsilon,
            buses: self
                .buses
                .iter()
                .map(|b| BusFile {
                    id: b.id.clone(),
                    kind: b.kind,
                    voltage: b.voltage,
                    damping: if !b.kind.is_sf() && b.p_in == 0.0 && b.damping == self.epsilon {
                        0.0
                    } else {
                        b.damping
                    },
                    inertia: b.inertia,
                    p_in: b.p_in,
                    disturbance: b.disturbance,
                })
                .collect(),
            branches: self
                .branches
                .iter()
                .map(|br| BranchFile {
                    from: self.buses[br.from].id.clone(),
                    to: self.buses[br.to].id.clone(),
                    susceptance: br.susceptance,
                    switchable: br.switchable,
                    initially_on: br.initially_on,
                })
                .collect(),
            weights: WeightsFile {
                w1_default: Some(DEFAULT_W1),
                w2_default: Some(DEFAULT_W2),
                w1: (0..self.branches.len())
                    .filter(|&e| self.w1[e] != DEFAULT_W1)
                    .map(|e| (self.branch_label(e), self.w1[e]))
                    .collect(),
                w2: self
                    .maps
                    .sf_file
                    .iter()
                    .filter(|&&i| self.w2[i] != DEFAULT_W2)
                    .map(|&i| (self.buses[i].id.clone(), self.w2[i]))
                    .collect(),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Graph matrices
// ---------------------------------------------------------------------------

/// Oriented incidence matrix over the given branch subset: one row per bus in
/// canonical order, one column per listed branch (+1 at `from`, -1 at `to`).
pub fn incidence(grid: &Grid, edges: &[usize]) -> DMatrix<f64> {
    let n = grid.n_buses();
    let mut m = DMatrix::zeros(n, edges.len());
    for (c, &e) in edges.iter().enumerate() {
        let br = &grid.branches[e];
        m[(grid.maps.canon_of_file[br.from], c)] = 1.0;
        m[(grid.maps.canon_of_file[br.to], c)] = -1.0;
    }
    m
}

/// Incidence matrix with the reference row removed.
pub fn incidence_reduced(grid: &Grid, edges: &[usize]) -> DMatrix<f64> {
    let full = incidence(grid, edges);
    full.view((1, 0), (grid.n_buses() - 1, edges.len())).into_owned()
}

/// Weighted graph Laplacian over the given branch subset in canonical bus
/// order. `weights` aligns with `edges` and must be the same length.
pub fn laplacian(grid: &Grid, edges: &[usize], weights: &[f64]) -> DMatrix<f64> {
    assert_eq!(
        edges.len(),
        weights.len(),
        "one weight per listed branch is required"
    );
    let n = grid.n_buses();
    let mut l = DMatrix::zeros(n, n);
    for (&e, &w) in edges.iter().zip(weights) {
        let br = &grid.branches[e];
        let i = grid.maps.canon_of_file[br.from];
        let j = grid.maps.canon_of_file[br.to];
        l[(i, i)] += w;
        l[(j, j)] += w;
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    }
    l
}

/// Weighted Laplacian with the reference row and column removed.
pub fn reduced_laplacian(grid: &Grid, edges: &[usize], weights: &[f64]) -> DMatrix<f64> {
    let full = laplacian(grid, edges, weights);
    let n = grid.n_buses();
    full.view((1, 1), (n - 1, n - 1)).into_owned()
}

/// Whether the given branch subset connects all buses.
pub fn is_connected(grid: &Grid, edges: &[usize]) -> bool {
    let n = grid.n_buses();
    if n == 0 {
        return true;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &e in edges {
        let br = &grid.branches[e];
        adj[br.from].push(br.to);
        adj[br.to].push(br.from);
    }
    reachable_count(&adj, 0) == n
}

/// Whether the load-load subgraph of the given branch subset connects all
/// load buses (SF buses are leaves, so this is the binding connectivity
/// condition once every SF bus is attached).
pub fn load_graph_connected(grid: &Grid, edges: &[usize]) -> bool {
    let loads = &grid.maps.load_file;
    if loads.len() <= 1 {
        return true;
    }
    let n = grid.n_buses();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &e in edges {
        let br = &grid.branches[e];
        if !grid.buses[br.from].kind.is_sf() && !grid.buses[br.to].kind.is_sf() {
            adj[br.from].push(br.to);
            adj[br.to].push(br.from);
        }
    }
    reachable_count(&adj, loads[0]) == loads.len()
}

fn reachable_count(adj: &[Vec<usize>], start: usize) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut count = 0;
    while let Some(v) = stack.pop() {
        count += 1;
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    count
}
