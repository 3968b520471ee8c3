//! End-to-end tests of the command-line binary: exit codes, output file
//! shapes, manifests, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gridswitch"))
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).expect("output file exists");
    serde_json::from_str(&text).expect("valid JSON")
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = run(&["h2"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--grid"), "stderr: {err}");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["transmogrify"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["simulate", "--help"]).status.code(), Some(0));
}

#[test]
fn domain_errors_use_named_kinds_and_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"buses": [], "branches": []}"#).unwrap();
    let out = run(&["h2", "--grid", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error["), "stderr: {err}");

    let out = run(&["h2", "--grid", "/nonexistent/grid.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[io]"), "stderr: {err}");
}

#[test]
fn h2_report_reproduces_the_corridor_value() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "h2",
        "--grid",
        &fixture("t3.json"),
        "--method",
        "all",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&report_path);
    let closed = report["h2_squared_closed"].as_f64().unwrap();
    let gram = report["h2_squared_gramian"].as_f64().unwrap();
    assert!((closed - 1.75).abs() <= 1e-8, "closed {closed}");
    assert!((gram - 1.75).abs() <= 1e-8, "gramian {gram}");

    let manifest = read_json(&dir.path().join("report.json.manifest.json"));
    assert_eq!(manifest["command"], "h2");
    assert_eq!(manifest["flags"]["method"], "all");
    assert_eq!(manifest["grid_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["version"].is_string());
}

#[test]
fn h2_without_out_prints_json_to_stdout() {
    let out = run(&["h2", "--grid", &fixture("t3.json"), "--method", "closed"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).expect("stdout JSON");
    assert!((value["h2_squared_closed"].as_f64().unwrap() - 1.75).abs() <= 1e-8);
    assert!(value.get("h2_squared_gramian").is_none());
}

#[test]
fn switch_selects_the_stronger_corridor_first() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    let out = run(&[
        "switch",
        "--grid",
        &fixture("t3x.json"),
        "--n-on",
        "1",
        "--out",
        plan_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let plan = read_json(&plan_path);
    assert_eq!(plan["selected"], serde_json::json!(["c1-l2"]));
    let trajectory = plan["h2_trajectory"].as_array().unwrap();
    assert_eq!(trajectory.len(), 2);
    assert!(trajectory[1].as_f64().unwrap() < trajectory[0].as_f64().unwrap());
}

#[test]
fn switch_trace_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    let trace_path = dir.path().join("trace.csv");
    let out = run(&[
        "switch",
        "--grid",
        &fixture("t3x.json"),
        "--n-on",
        "2",
        "--out",
        plan_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,line_id,sensitivity,selected,h2_squared_after"
    );
    let rows: Vec<&str> = lines.collect();
    // five load-load lines in iteration 1, then four in iteration 2 (one
    // candidate moved on but stays listed as an on-line)
    assert_eq!(rows.len(), 10);
    let selected_rows: Vec<&str> = rows
        .iter()
        .copied()
        .filter(|r| r.split(',').nth(3) == Some("1"))
        .collect();
    assert_eq!(selected_rows.len(), 2);
    assert!(selected_rows[0].contains("c1-l2"));
    assert!(selected_rows[1].contains("c2-l2"));
}

#[test]
fn oversized_switch_request_is_clamped_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    let out = run(&[
        "switch",
        "--grid",
        &fixture("t3x.json"),
        "--out",
        plan_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let note = String::from_utf8_lossy(&out.stderr);
    assert!(note.contains("2"), "stderr: {note}");
    let plan = read_json(&plan_path);
    assert_eq!(plan["selected"].as_array().unwrap().len(), 2);

    // --quiet suppresses the note but not the clamping
    let out = bin()
        .args([
            "switch",
            "--grid",
            &fixture("t3x.json"),
            "--quiet",
            "--out",
            plan_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stderr.is_empty());
}

#[test]
fn equilibrium_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let eq_path = dir.path().join("eq.json");
    let out = run(&[
        "equilibrium",
        "--grid",
        &fixture("t3.json"),
        "--out",
        eq_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let eq = read_json(&eq_path);
    assert_eq!(eq["theta0"]["g1"], serde_json::json!(0.0));
    assert_eq!(eq["theta0"].as_object().unwrap().len(), 4);
    assert_eq!(eq["wp"].as_object().unwrap().len(), 3);
    assert_eq!(eq["flows"].as_object().unwrap().len(), 3);
    assert!((eq["wp"]["g1-l1"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert_eq!(eq["slack_injection"], serde_json::json!(0.0));
}

#[test]
fn linearize_emits_dense_matrices_with_labels() {
    let dir = tempfile::tempdir().unwrap();
    let ss_path = dir.path().join("ss.json");
    let out = run(&[
        "linearize",
        "--grid",
        &fixture("t3.json"),
        "--out",
        ss_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let ss = read_json(&ss_path);
    assert_eq!(ss["n_states"], serde_json::json!(4));
    assert_eq!(ss["n_inputs"], serde_json::json!(3));
    assert_eq!(ss["n_outputs"], serde_json::json!(4));
    let a = ss["a"].as_array().unwrap();
    assert_eq!(a.len(), 4);
    assert_eq!(a[0].as_array().unwrap().len(), 4);
    assert_eq!(
        ss["state_labels"],
        serde_json::json!(["alpha:f1", "alpha:l1", "alpha:l2", "omega:f1"])
    );
}

#[test]
fn simulate_writes_plot_ready_columns_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let sim_path = dir.path().join("sim.csv");
    let stats_path = dir.path().join("stats.json");
    let out = run(&[
        "simulate",
        "--grid",
        &fixture("t3.json"),
        "--mode",
        "noise",
        "--tf",
        "20",
        "--dt",
        "0.02",
        "--seed",
        "7",
        "--out",
        sim_path.to_str().unwrap(),
        "--stats",
        stats_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&sim_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time,dtheta:g1-l1,dtheta:l1-l2,dtheta:f1-l2,df:f1"
    );
    assert_eq!(lines.count(), 1001);

    let stats = read_json(&stats_path);
    let s_acc = stats["S_accumulative"].as_f64().unwrap();
    let s_avg = stats["S_average"].as_f64().unwrap();
    assert!((s_avg - s_acc / 20.0).abs() <= 1e-12 * s_acc.abs().max(1.0));
    assert_eq!(stats["E_abs_dtheta"].as_object().unwrap().len(), 3);
    assert_eq!(stats["E_abs_df"].as_object().unwrap().len(), 1);

    let manifest = read_json(&dir.path().join("sim.csv.manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], serde_json::json!(7));
}

#[test]
fn plan_feeds_into_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    let sim_path = dir.path().join("sim.csv");
    assert!(run(&[
        "switch",
        "--grid",
        &fixture("t3x.json"),
        "--n-on",
        "2",
        "--out",
        plan_path.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&[
        "simulate",
        "--grid",
        &fixture("t3x.json"),
        "--plan",
        plan_path.to_str().unwrap(),
        "--mode",
        "impulse",
        "--tf",
        "40",
        "--dt",
        "0.01",
        "--out",
        sim_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&sim_path).unwrap();
    assert_eq!(csv.lines().count(), 4002);

    // a plan naming an unknown line is refused with a named kind
    let bogus = dir.path().join("bogus.json");
    std::fs::write(&bogus, r#"{"selected": ["l1-l9"]}"#).unwrap();
    let out = run(&[
        "simulate",
        "--grid",
        &fixture("t3x.json"),
        "--plan",
        bogus.to_str().unwrap(),
        "--tf",
        "10",
        "--dt",
        "0.02",
        "--out",
        sim_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[unknown-edge]"), "stderr: {err}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut artifacts = Vec::new();
    for tag in ["a", "b"] {
        let sim = dir.path().join(format!("sim_{tag}.csv"));
        let stats = dir.path().join(format!("stats_{tag}.json"));
        let report = dir.path().join(format!("report_{tag}.json"));
        assert!(run(&[
            "simulate",
            "--grid",
            &fixture("ring36.json"),
            "--mode",
            "noise",
            "--tf",
            "60",
            "--dt",
            "0.02",
            "--seed",
            "42",
            "--out",
            sim.to_str().unwrap(),
            "--stats",
            stats.to_str().unwrap(),
        ])
        .status
        .success());
        assert!(run(&[
            "h2",
            "--grid",
            &fixture("ring36.json"),
            "--out",
            report.to_str().unwrap(),
        ])
        .status
        .success());
        artifacts.push((
            std::fs::read(&sim).unwrap(),
            std::fs::read(&stats).unwrap(),
            std::fs::read(&report).unwrap(),
        ));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "sim.csv differs across reruns");
    assert_eq!(artifacts[0].1, artifacts[1].1, "stats.json differs across reruns");
    assert_eq!(artifacts[0].2, artifacts[1].2, "report.json differs across reruns");
}

#[test]
fn selfcheck_passes_on_the_shipped_fixtures() {
    let out = run(&["selfcheck"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ok corridor-closed-form"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");

    let quiet = run(&["selfcheck", "--quiet"]);
    assert!(quiet.status.success());
    assert!(quiet.stdout.is_empty());
}
