//! Command-line surface for the gridswitch pipeline.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on domain errors (which
//! print `error[kind]: message` to standard error). Every primary output
//! file is accompanied by `<file>.manifest.json` recording the command, the
//! resolved flags, the grid digest, and the tool version.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use gridswitch::error::{Error, Result};
use gridswitch::grid::Grid;
use gridswitch::h2::{h2_report, H2Method};
use gridswitch::linearize::build_state_space;
use gridswitch::powerflow::solve_equilibrium;
use gridswitch::report::{fmt_sig, num, to_json_bytes, ManifestBuilder, RunManifest};
use gridswitch::selfcheck;
use gridswitch::simulation::{simulate, DisturbanceMode, DisturbanceSpec};
use gridswitch::switching::greedy_switch;

#[derive(Parser)]
#[command(
    name = "gridswitch",
    version,
    about = "Synchronization-aware transmission switching",
    propagate_version = true
)]
struct Cli {
    /// Suppress informational messages.
    #[arg(long, global = true)]
    quiet: bool,
    /// Size of the worker thread pool (defaults to the core count).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Gramian,
    Closed,
    Bounds,
    All,
}

impl From<MethodArg> for H2Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Gramian => H2Method::Gramian,
            MethodArg::Closed => H2Method::Closed,
            MethodArg::Bounds => H2Method::Bounds,
            MethodArg::All => H2Method::All,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Impulse,
    Noise,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the lossless power flow and report angles, stiffness weights,
    /// flows, and the slack injection.
    Equilibrium {
        /// Grid description file.
        #[arg(long)]
        grid: PathBuf,
        /// Output JSON path (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the structure-preserved state-space matrices around the solved
    /// equilibrium.
    Linearize {
        /// Grid description file.
        #[arg(long)]
        grid: PathBuf,
        /// Output JSON path (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the synchronization metric.
    H2 {
        /// Grid description file.
        #[arg(long)]
        grid: PathBuf,
        /// Which evaluation paths to run.
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        /// Use the mean disturbance-to-damping ratio even when ratios are
        /// heterogeneous.
        #[arg(long)]
        assume_uniform: bool,
        /// Output JSON path (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedily select switchable lines to energize.
    Switch {
        /// Grid description file.
        #[arg(long)]
        grid: PathBuf,
        /// Number of lines to switch on (clamped to the candidate count).
        #[arg(long = "n-on", default_value_t = 20)]
        n_on: usize,
        /// Plan JSON path (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional per-iteration sensitivity table CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Simulate the linearized response to impulse or sampled noise
    /// disturbances.
    Simulate {
        /// Grid description file.
        #[arg(long)]
        grid: PathBuf,
        /// Switching plan JSON whose selected lines are energized first.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Disturbance model.
        #[arg(long, value_enum, default_value_t = ModeArg::Noise)]
        mode: ModeArg,
        /// Horizon in seconds.
        #[arg(long, default_value_t = 600.0)]
        tf: f64,
        /// Step size in seconds.
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        /// Hold interval between disturbance redraws, seconds (noise mode).
        #[arg(long, default_value_t = 2.0)]
        interval: f64,
        /// Sampling seed (noise mode).
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Trajectory CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Optional response-statistics JSON path.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Run the built-in invariant suite on embedded fixtures.
    Selfcheck,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Err(e) = run(cli) {
        eprintln!("error[{}]: {}", e.kind(), e);
        std::process::exit(2);
    }
}

fn load(grid_path: &Path) -> Result<(Grid, Vec<u8>)> {
    let bytes = std::fs::read(grid_path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Schema(format!("grid file is not UTF-8: {e}")))?;
    let grid = Grid::from_json(text)?;
    Ok((grid, bytes))
}

/// Write a JSON value to `out` with its manifest, or to standard output.
fn emit_json(value: &Value, out: Option<&Path>, manifest: &ManifestBuilder) -> Result<()> {
    let bytes = to_json_bytes(value);
    match out {
        Some(path) => {
            std::fs::write(path, bytes)?;
            gridswitch::report::write_manifest(path, &manifest.finish())?;
        }
        None => {
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Equilibrium { grid, out } => cmd_equilibrium(&grid, out.as_deref()),
        Command::Linearize { grid, out } => cmd_linearize(&grid, out.as_deref()),
        Command::H2 {
            grid,
            method,
            assume_uniform,
            out,
        } => cmd_h2(&grid, method, assume_uniform, out.as_deref()),
        Command::Switch {
            grid,
            n_on,
            out,
            trace,
        } => cmd_switch(&grid, n_on, out.as_deref(), trace.as_deref(), cli.quiet),
        Command::Simulate {
            grid,
            plan,
            mode,
            tf,
            dt,
            interval,
            seed,
            out,
            stats,
        } => cmd_simulate(
            &grid,
            plan.as_deref(),
            mode,
            tf,
            dt,
            interval,
            seed,
            &out,
            stats.as_deref(),
        ),
        Command::Selfcheck => cmd_selfcheck(cli.quiet),
    }
}

fn cmd_equilibrium(grid_path: &Path, out: Option<&Path>) -> Result<()> {
    let (grid, bytes) = load(grid_path)?;
    let mut manifest = RunManifest::begin("equilibrium", &bytes);
    manifest.flag("grid", grid_path.display());
    let eq = solve_equilibrium(&grid, &grid.initially_active())?;

    let mut theta0 = Map::new();
    for (file, bus) in grid.buses.iter().enumerate() {
        theta0.insert(bus.id.clone(), num(eq.theta_of(&grid, file)));
    }
    let mut wp = Map::new();
    let mut flows = Map::new();
    for (pos, &e) in eq.active.iter().enumerate() {
        wp.insert(grid.branch_label(e), num(eq.wp[pos]));
        flows.insert(grid.branch_label(e), num(eq.flows[pos]));
    }
    let mut root = Map::new();
    root.insert("theta0".into(), Value::Object(theta0));
    root.insert("wp".into(), Value::Object(wp));
    root.insert("flows".into(), Value::Object(flows));
    root.insert("slack_injection".into(), num(eq.slack_injection));
    emit_json(&Value::Object(root), out, &manifest)
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
            .collect(),
    )
}

fn string_list(items: &[String]) -> Value {
    Value::Array(items.iter().map(|s| Value::String(s.clone())).collect())
}

fn cmd_linearize(grid_path: &Path, out: Option<&Path>) -> Result<()> {
    let (grid, bytes) = load(grid_path)?;
    let mut manifest = RunManifest::begin("linearize", &bytes);
    manifest.flag("grid", grid_path.display());
    let eq = solve_equilibrium(&grid, &grid.initially_active())?;
    let ss = build_state_space(&grid, &eq)?;

    let mut root = Map::new();
    root.insert("n_states".into(), Value::from(ss.n_states()));
    root.insert("n_inputs".into(), Value::from(ss.n_inputs()));
    root.insert("n_outputs".into(), Value::from(ss.n_outputs()));
    root.insert("a".into(), matrix_rows(&ss.a));
    root.insert("b".into(), matrix_rows(&ss.b));
    root.insert("c".into(), matrix_rows(&ss.c));
    root.insert("state_labels".into(), string_list(&ss.state_labels));
    root.insert("input_labels".into(), string_list(&ss.input_labels));
    root.insert("output_labels".into(), string_list(&ss.output_labels));
    emit_json(&Value::Object(root), out, &manifest)
}

fn cmd_h2(
    grid_path: &Path,
    method: MethodArg,
    assume_uniform: bool,
    out: Option<&Path>,
) -> Result<()> {
    let (grid, bytes) = load(grid_path)?;
    let mut manifest = RunManifest::begin("h2", &bytes);
    manifest
        .flag("grid", grid_path.display())
        .flag("method", format!("{method:?}").to_lowercase())
        .flag("assume_uniform", assume_uniform);
    let eq = solve_equilibrium(&grid, &grid.initially_active())?;
    let ss = build_state_space(&grid, &eq)?;
    let report = h2_report(&grid, &eq, &ss, method.into(), assume_uniform)?;

    let mut root = Map::new();
    let mut put = |key: &str, v: Option<f64>| {
        if let Some(x) = v {
            root.insert(key.into(), num(x));
        }
    };
    put("h2_squared_gramian", report.h2_squared_gramian);
    put("h2_squared_closed", report.h2_squared_closed);
    put("lower_bound", report.lower_bound);
    put("upper_bound", report.upper_bound);
    put("trace_pi", report.trace_pi);
    put("trace_pi_decomposed", report.trace_pi_decomposed);
    put("lambda_d_min", report.lambda_d_min);
    put("lambda_d_max", report.lambda_d_max);
    emit_json(&Value::Object(root), out, &manifest)
}

fn cmd_switch(
    grid_path: &Path,
    n_on: usize,
    out: Option<&Path>,
    trace: Option<&Path>,
    quiet: bool,
) -> Result<()> {
    let (grid, bytes) = load(grid_path)?;
    let mut manifest = RunManifest::begin("switch", &bytes);
    let candidates = grid.candidates();
    let depth = n_on.min(candidates.len());
    if depth < n_on && !quiet {
        eprintln!(
            "note: only {} dispatchable lines are available; switching {} instead of {}",
            candidates.len(),
            depth,
            n_on
        );
    }
    manifest
        .flag("grid", grid_path.display())
        .flag("n_on", depth);
    let plan = greedy_switch(&grid, &candidates, depth)?;

    let mut root = Map::new();
    root.insert(
        "baseline_h2_squared".into(),
        num(plan.h2_trajectory[0]),
    );
    root.insert("selected".into(), string_list(&plan.selected_labels));
    root.insert(
        "h2_trajectory".into(),
        Value::Array(plan.h2_trajectory.iter().map(|&v| num(v)).collect()),
    );
    root.insert(
        "iterations".into(),
        Value::Array(
            plan.iterations
                .iter()
                .enumerate()
                .map(|(i, it)| {
                    let mut row = Map::new();
                    row.insert("iteration".into(), Value::from(i + 1));
                    row.insert("selected".into(), Value::String(it.selected_label.clone()));
                    row.insert("sensitivity".into(), num(it.sensitivity));
                    row.insert("h2_squared_after".into(), num(it.h2_after));
                    Value::Object(row)
                })
                .collect(),
        ),
    );

    if let Some(trace_path) = trace {
        let mut csv = String::from("iteration,line_id,sensitivity,selected,h2_squared_after\n");
        for (i, it) in plan.iterations.iter().enumerate() {
            for row in &it.table {
                let selected = if row.edge == it.selected { 1 } else { 0 };
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    i + 1,
                    row.label,
                    fmt_sig(row.sensitivity),
                    selected,
                    fmt_sig(it.h2_after)
                ));
            }
        }
        std::fs::write(trace_path, csv)?;
    }
    emit_json(&Value::Object(root), out, &manifest)
}

fn selected_labels_from_plan(plan_path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(plan_path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("plan file is not valid JSON: {e}")))?;
    let selected = value
        .get("selected")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Schema("plan file lacks a 'selected' array".into()))?;
    selected
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Schema("plan 'selected' entries must be strings".into()))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    grid_path: &Path,
    plan: Option<&Path>,
    mode: ModeArg,
    tf: f64,
    dt: f64,
    interval: f64,
    seed: u64,
    out: &Path,
    stats: Option<&Path>,
) -> Result<()> {
    let (grid, bytes) = load(grid_path)?;
    let mut manifest = RunManifest::begin("simulate", &bytes);
    manifest
        .flag("grid", grid_path.display())
        .flag("mode", format!("{mode:?}").to_lowercase())
        .flag("tf", tf)
        .flag("dt", dt)
        .flag("interval", interval)
        .flag("out", out.display())
        .seed(seed);
    if let Some(p) = plan {
        manifest.flag("plan", p.display());
    }
    if let Some(s) = stats {
        manifest.flag("stats", s.display());
    }

    let mut active = grid.initially_active();
    if let Some(plan_path) = plan {
        for label in selected_labels_from_plan(plan_path)? {
            let e = grid.branch_by_label(&label).ok_or_else(|| {
                Error::UnknownEdge(format!("plan selects unknown line '{label}'"))
            })?;
            if active.contains(&e) {
                return Err(Error::InvalidParameter(format!(
                    "plan selects line '{label}' which is already energized"
                )));
            }
            active.push(e);
        }
    }
    let eq = solve_equilibrium(&grid, &active)?;
    let ss = build_state_space(&grid, &eq)?;
    let spec = match mode {
        ModeArg::Impulse => DisturbanceSpec {
            mode: DisturbanceMode::Impulse,
            t_f: tf,
            dt,
            interval,
            seed,
        },
        ModeArg::Noise => DisturbanceSpec::noise(tf, dt, interval, seed),
    };
    let result = simulate(&ss, &spec)?;

    let file = std::fs::File::create(out)?;
    let mut w = std::io::BufWriter::new(file);
    write!(w, "time")?;
    for (j, label) in ss.output_labels.iter().enumerate() {
        let header = if let Some(edge) = label.strip_prefix("dtheta:") {
            format!("dtheta:{edge}")
        } else if let Some(bus) = label.strip_prefix("freq:") {
            format!("df:{bus}")
        } else {
            format!("y{j}")
        };
        write!(w, ",{header}")?;
    }
    writeln!(w)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    for (i, t) in result.times.iter().enumerate() {
        write!(w, "{}", fmt_sig(*t))?;
        for (j, label) in ss.output_labels.iter().enumerate() {
            let mut v = result.outputs[(i, j)] * ss.output_unweight[j];
            if label.starts_with("freq:") {
                v /= two_pi;
            }
            write!(w, ",{}", fmt_sig(v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    gridswitch::report::write_manifest(out, &manifest.finish())?;

    if let Some(stats_path) = stats {
        let mut dtheta = Map::new();
        for (label, v) in &result.e_abs_dtheta {
            dtheta.insert(label.clone(), num(*v));
        }
        let mut df = Map::new();
        for (bus, v) in &result.e_abs_df {
            df.insert(bus.clone(), num(*v));
        }
        let mut root = Map::new();
        root.insert("S_average".into(), num(result.s_average));
        root.insert("S_accumulative".into(), num(result.s_accumulative));
        root.insert("E_abs_dtheta".into(), Value::Object(dtheta));
        root.insert("E_abs_df".into(), Value::Object(df));
        std::fs::write(stats_path, to_json_bytes(&Value::Object(root)))?;
    }
    Ok(())
}

fn cmd_selfcheck(quiet: bool) -> Result<()> {
    let outcomes = selfcheck::run_checks();
    let mut failures = Vec::new();
    for outcome in &outcomes {
        match &outcome.result {
            Ok(()) => {
                if !quiet {
                    println!("ok {}", outcome.name);
                }
            }
            Err(msg) => {
                println!("FAIL {}: {msg}", outcome.name);
                failures.push(format!("{}: {msg}", outcome.name));
            }
        }
    }
    if failures.is_empty() {
        if !quiet {
            println!("all {} checks passed", outcomes.len());
        }
        Ok(())
    } else {
        Err(Error::SelfCheck(failures.join("; ")))
    }
}
