//! Built-in grids: small hand-checked cases, a mid-size synthetic network,
//! and a seeded random-grid generator for property checks.
//!
//! The JSON fixtures live in `fixtures/` and are embedded into the binary so
//! the self-check command works without any files on disk. The random
//! generator produces valid, connected grids with stiff generator feeders and
//! small injections, so their equilibria are always secure; the
//! `uniform_ratio` switch decides whether the disturbance-to-damping ratio is
//! shared by every bus (closed-form regime) or deliberately scattered
//! (bounds-only regime).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{BranchFile, BusFile, BusKind, Grid, GridFile, WeightsFile};

/// Four buses around a single load corridor; every metric of this grid is
/// known in closed form and pinned in tests.
pub const T3_JSON: &str = include_str!("../fixtures/t3.json");

/// The corridor grid extended with two candidate paths of different
/// susceptance; exercises switching.
pub const T3X_JSON: &str = include_str!("../fixtures/t3x.json");

/// 36-bus synthetic network: a 24-load ring with chords, 12 generating units
/// on stiff feeders, and 10 dispatchable lines.
pub const RING36_JSON: &str = include_str!("../fixtures/ring36.json");

fn parse(json: &str) -> GridFile {
    serde_json::from_str(json).expect("embedded fixture must parse")
}

fn validate(file: GridFile) -> Grid {
    Grid::from_file(file).expect("embedded fixture must validate")
}

/// Raw document of the 4-bus corridor grid.
pub fn t3_file() -> GridFile {
    parse(T3_JSON)
}

/// Validated 4-bus corridor grid.
pub fn t3() -> Grid {
    validate(t3_file())
}

/// Raw document of the corridor grid with candidate lines.
pub fn t3x_file() -> GridFile {
    parse(T3X_JSON)
}

/// Validated corridor grid with candidate lines.
pub fn t3x() -> Grid {
    validate(t3x_file())
}

/// Raw document of the 36-bus ring network.
pub fn ring36_file() -> GridFile {
    parse(RING36_JSON)
}

/// Validated 36-bus ring network.
pub fn ring36() -> Grid {
    validate(ring36_file())
}

/// A grid whose power flow converges but leaves one line with an angle
/// spread beyond pi/2: a stiff four-edge chain moves 0.5 pu end to end
/// (0.47 rad per edge), so the weak line shorting the chain ends sees the
/// accumulated 1.88 rad and a negative stiffness weight.
pub fn insecure_chain_file() -> GridFile {
    let load = |id: &str, p: f64| BusFile {
        id: id.into(),
        kind: BusKind::Load,
        voltage: 1.0,
        damping: 1.0,
        inertia: None,
        p_in: p,
        disturbance: 1.0,
    };
    let branch = |from: &str, to: &str, b: f64| BranchFile {
        from: from.into(),
        to: to.into(),
        susceptance: b,
        switchable: false,
        initially_on: true,
    };
    GridFile {
        epsilon: 1e-3,
        buses: vec![
            BusFile {
                id: "g1".into(),
                kind: BusKind::SyncGen,
                voltage: 1.0,
                damping: 1.0,
                inertia: Some(2.0),
                p_in: 0.0,
                disturbance: 1.0,
            },
            load("l1", 0.5),
            load("c1", 0.0),
            load("c2", 0.0),
            load("c3", 0.0),
            load("l3", -0.5),
        ],
        branches: vec![
            branch("g1", "c2", 5.0),
            branch("l1", "c1", 1.0),
            branch("c1", "c2", 1.0),
            branch("c2", "c3", 1.0),
            branch("c3", "l3", 1.0),
            branch("l1", "l3", 0.05),
        ],
        weights: WeightsFile::default(),
    }
}

/// Knobs of the random-grid generator.
#[derive(Debug, Clone, Copy)]
pub struct RandomGridConfig {
    /// Lower bound on total bus count.
    pub min_buses: usize,
    /// Upper bound on total bus count.
    pub max_buses: usize,
    /// Give all buses one disturbance-to-damping ratio (true) or scatter the
    /// ratios (false).
    pub uniform_ratio: bool,
    /// Switchable, initially-off load-load lines to try to add.
    pub n_candidates: usize,
    /// Scale of the total injected power (kept small so equilibria stay
    /// secure for any topology the generator emits).
    pub injection_scale: f64,
}

impl Default for RandomGridConfig {
    fn default() -> Self {
        RandomGridConfig {
            min_buses: 5,
            max_buses: 20,
            uniform_ratio: true,
            n_candidates: 2,
            injection_scale: 0.15,
        }
    }
}

/// Deterministically generate a valid connected grid from a seed.
pub fn random_grid(seed: u64, cfg: RandomGridConfig) -> Grid {
    Grid::from_file(random_grid_file(seed, cfg)).expect("generated grid must validate")
}

/// Raw document form of [`random_grid`].
pub fn random_grid_file(seed: u64, cfg: RandomGridConfig) -> GridFile {
    assert!(cfg.min_buses >= 4 && cfg.max_buses >= cfg.min_buses);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = rng.gen_range(cfg.min_buses..=cfg.max_buses);
    // At least one generating unit and three network buses; usually several
    // units so the swing block is nontrivial.
    let max_sf = (total - 3).min(1 + total / 3);
    let n_sf = if max_sf >= 2 && rng.gen_range(0..6) > 0 {
        rng.gen_range(2..=max_sf)
    } else {
        1
    };
    let n_loads = total - n_sf;

    let lam_shared = rng.gen_range(0.5..2.0);
    let mut buses = Vec::new();
    for k in 0..n_sf {
        let damping = rng.gen_range(0.5..2.0);
        buses.push(BusFile {
            id: format!("g{k}"),
            kind: if rng.gen_bool(0.5) {
                BusKind::SyncGen
            } else {
                BusKind::FormingInverter
            },
            voltage: rng.gen_range(0.95..1.05),
            damping,
            inertia: Some(rng.gen_range(1.0..4.0)),
            p_in: 0.0, // filled below
            disturbance: 0.0,
        });
    }
    for k in 0..n_loads {
        buses.push(BusFile {
            id: format!("l{k}"),
            kind: BusKind::Load,
            voltage: rng.gen_range(0.95..1.05),
            damping: rng.gen_range(0.5..2.0),
            inertia: None,
            p_in: 0.0,
            disturbance: 0.0,
        });
    }
    for b in &mut buses {
        b.disturbance = if cfg.uniform_ratio {
            lam_shared * b.damping
        } else {
            rng.gen_range(0.2..2.0)
        };
    }

    // Injections: units generate, loads consume the exact total.
    let mut total_gen = 0.0;
    for b in buses.iter_mut().take(n_sf) {
        b.p_in = cfg.injection_scale * rng.gen_range(0.5..1.0) / n_sf as f64;
        total_gen += b.p_in;
    }
    for b in buses.iter_mut().skip(n_sf) {
        b.p_in = -total_gen / n_loads as f64;
    }

    let load_id = |k: usize| format!("l{k}");
    let mut branches = Vec::new();
    let mut pairs = std::collections::BTreeSet::new();
    let add = |branches: &mut Vec<BranchFile>,
                   pairs: &mut std::collections::BTreeSet<(String, String)>,
                   from: String,
                   to: String,
                   b: f64,
                   switchable: bool,
                   on: bool|
     -> bool {
        let key = if from < to {
            (from.clone(), to.clone())
        } else {
            (to.clone(), from.clone())
        };
        if !pairs.insert(key) {
            return false;
        }
        branches.push(BranchFile {
            from,
            to,
            susceptance: b,
            switchable,
            initially_on: on,
        });
        true
    };

    // Spanning tree over the loads, then a few reinforcing lines.
    for k in 1..n_loads {
        let j = rng.gen_range(0..k);
        let b = rng.gen_range(1.0..5.0);
        add(&mut branches, &mut pairs, load_id(k), load_id(j), b, false, true);
    }
    for _ in 0..rng.gen_range(0..=3usize) {
        if n_loads < 2 {
            break;
        }
        let i = rng.gen_range(0..n_loads);
        let j = rng.gen_range(0..n_loads);
        if i == j {
            continue;
        }
        let b = rng.gen_range(1.0..5.0);
        add(&mut branches, &mut pairs, load_id(i), load_id(j), b, false, true);
    }
    // One stiff feeder per generating unit.
    for k in 0..n_sf {
        let j = rng.gen_range(0..n_loads);
        let b = rng.gen_range(5.0..15.0);
        add(&mut branches, &mut pairs, format!("g{k}"), load_id(j), b, false, true);
    }
    // Candidate lines start switched off, so they do not affect the
    // equilibrium; duplicates are simply skipped.
    let mut added = 0;
    let mut attempts = 0;
    while added < cfg.n_candidates && attempts < 20 && n_loads >= 2 {
        attempts += 1;
        let i = rng.gen_range(0..n_loads);
        let j = rng.gen_range(0..n_loads);
        if i == j {
            continue;
        }
        let b = rng.gen_range(1.0..3.0);
        if add(&mut branches, &mut pairs, load_id(i), load_id(j), b, true, false) {
            added += 1;
        }
    }

    // Shuffle bus and branch file order so orderings are exercised, keeping
    // validity (reference = first unit in file order, whichever that is).
    for k in (1..buses.len()).rev() {
        let j = rng.gen_range(0..=k);
        buses.swap(k, j);
    }
    for k in (1..branches.len()).rev() {
        let j = rng.gen_range(0..=k);
        branches.swap(k, j);
    }

    let mut weights = WeightsFile {
        w1_default: Some(1.0),
        w2_default: Some(1.0),
        ..WeightsFile::default()
    };
    for br in &branches {
        if rng.gen_bool(0.5) {
            weights
                .w1
                .insert(format!("{}-{}", br.from, br.to), rng.gen_range(0.5..2.0));
        }
    }
    for b in &buses {
        if b.kind.is_sf() && rng.gen_bool(0.5) {
            weights.w2.insert(b.id.clone(), rng.gen_range(0.5..2.0));
        }
    }

    GridFile {
        epsilon: 1e-3,
        buses,
        branches,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_fixtures_validate() {
        assert_eq!(t3().n_buses(), 4);
        assert_eq!(t3x().n_buses(), 6);
        assert_eq!(t3x().candidates().len(), 2);
        let r = ring36();
        assert_eq!(r.n_buses(), 36);
        assert_eq!(r.n_branches(), 50);
        assert_eq!(r.candidates().len(), 10);
        assert_eq!(r.maps.sf_file.len(), 12);
        assert_eq!(r.buses[r.maps.reference].id, "g0");
    }

    #[test]
    fn ring36_injections_balance() {
        let r = ring36();
        let total: f64 = r.buses.iter().map(|b| b.p_in).sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn random_grids_are_valid_and_in_range() {
        for seed in 0..50u64 {
            let g = random_grid(seed, RandomGridConfig::default());
            assert!(g.n_buses() >= 5 && g.n_buses() <= 20);
            assert!(!g.maps.sf_file.is_empty());
            let total: f64 = g.buses.iter().map(|b| b.p_in).sum();
            assert!(total.abs() < 1e-12);
        }
    }

    #[test]
    fn random_grid_is_deterministic_per_seed() {
        let cfg = RandomGridConfig::default();
        let a = serde_json::to_string(&random_grid_file(7, cfg)).unwrap();
        let b = serde_json::to_string(&random_grid_file(7, cfg)).unwrap();
        let c = serde_json::to_string(&random_grid_file(8, cfg)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn heterogeneous_mode_scatters_ratios() {
        let cfg = RandomGridConfig {
            uniform_ratio: false,
            ..RandomGridConfig::default()
        };
        let g = random_grid(3, cfg);
        let ratios: Vec<f64> = g
            .buses
            .iter()
            .map(|b| b.disturbance / b.damping)
            .collect();
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max / min > 1.0 + 1e-6);
    }
}
