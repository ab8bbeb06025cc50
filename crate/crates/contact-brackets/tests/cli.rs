//! End-to-end tests of the command-line interface: outputs, flags and the
//! documented exit codes (0 success, 1 verification failure, 2 config,
//! 3 numeric failure).

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contact-brackets"))
}

fn spec(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/specs")).join(name)
}

fn run(args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    cmd.output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn simulate_free_particle_reaches_closed_form() {
    let output = run(&[
        "simulate",
        "--spec",
        spec("free_particle.json").to_str().unwrap(),
        "--span",
        "0:1",
        "--dt",
        "1e-3",
        "--init",
        "q=0,p=1",
    ]);
    assert!(output.status.success());
    let text = stdout(&output);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "s,q,p,s,H");
    let last = text.lines().last().unwrap();
    let cells: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    assert!((cells[1] - 1.0).abs() < 1e-9, "q(1) = {}", cells[1]);
    assert!((cells[2] - 1.0).abs() < 1e-12);
    assert!((cells[4] - 0.5).abs() < 1e-12, "H column");
}

#[test]
fn simulate_oscillator_closes_after_a_period() {
    let output = run(&[
        "simulate",
        "--spec",
        spec("harmonic_oscillator.json").to_str().unwrap(),
        "--span",
        &format!("0:{}", 2.0 * std::f64::consts::PI),
        "--dt",
        "1e-3",
        "--init",
        "q=1,p=0",
    ]);
    assert!(output.status.success());
    let text = stdout(&output);
    let last = text.lines().last().unwrap();
    let cells: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    assert!((cells[1] - 1.0).abs() < 1e-6);
    assert!(cells[2].abs() < 1e-6);
}

#[test]
fn simulate_missing_spec_file_exits_2() {
    let output = run(&[
        "simulate",
        "--spec",
        "/nonexistent/nowhere.json",
        "--span",
        "0:1",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn simulate_needs_spec_flag() {
    let output = run(&["simulate", "--span", "0:1"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn bracket_mass_shell_positions() {
    let output = run(&[
        "bracket",
        "--spec",
        spec("relativistic_m1.json").to_str().unwrap(),
        "--f",
        "u1",
        "--g",
        "u0",
        "--point",
        "u0=2,u1=1,u2=0,u3=0,p1=0,p2=0,p3=0",
        "--format",
        "json",
    ]);
    assert!(output.status.success());
    let payload: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    let value = payload["values"][0]["jacobi"].as_f64().unwrap();
    assert!((value - 1.0).abs() < 1e-10);
}

#[test]
fn bracket_of_function_with_itself_is_zero() {
    let output = run(&[
        "bracket",
        "--spec",
        spec("free_particle.json").to_str().unwrap(),
        "--f",
        "q*p - s",
        "--g",
        "q*p - s",
        "--count",
        "5",
        "--seed",
        "3",
    ]);
    assert!(output.status.success());
    let payload: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    for record in payload["values"].as_array().unwrap() {
        assert!(record["jacobi"].as_f64().unwrap().abs() < 1e-12);
    }
}

#[test]
fn bracket_on_darboux_section_compares_canonical_values() {
    let output = run(&[
        "bracket",
        "--spec",
        spec("darboux.json").to_str().unwrap(),
        "--f",
        "Q",
        "--g",
        "P",
        "--count",
        "6",
        "--section",
        "W=0",
    ]);
    assert!(output.status.success());
    let payload: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    let records = payload["values"].as_array().unwrap();
    assert_eq!(records.len(), 6);
    for record in records {
        let jacobi = record["jacobi"].as_f64().unwrap();
        let section = record["section"].as_f64().unwrap();
        assert!((jacobi - section).abs() < 1e-9);
        assert!((jacobi + 1.0).abs() < 1e-9);
    }
}

#[test]
fn bracket_with_bad_expression_exits_2() {
    let output = run(&[
        "bracket",
        "--spec",
        spec("free_particle.json").to_str().unwrap(),
        "--f",
        "p+*q",
        "--g",
        "q",
    ]);
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr).into_owned();
    assert!(err.contains("column 3"), "stderr: {err}");
}

#[test]
fn bracket_at_degenerate_point_exits_3() {
    let output = run(&[
        "bracket",
        "--spec",
        spec("free_particle.json").to_str().unwrap(),
        "--f",
        "q",
        "--g",
        "p",
        "--point",
        "q=0,p=0,s=0",
    ]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn verify_degenerate_probe_exits_1_with_diagnostic() {
    let output = run(&[
        "verify",
        "--suite",
        "contact",
        "--spec",
        spec("free_particle.json").to_str().unwrap(),
        "--probe",
        "q=0,p=0,s=0",
        "--seed",
        "7",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(false));
    let diagnostic = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "spec/probe-0-nondegenerate")
        .expect("probe check present");
    assert!(diagnostic["detail"]
        .as_str()
        .unwrap()
        .contains("degenerate"));
}

#[test]
fn verify_unknown_suite_exits_2() {
    let output = run(&["verify", "--suite", "no-such-suite"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn solve_bvp_free_particle_writes_solution_and_omega_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solution.csv");
    let output = run(&[
        "solve-bvp",
        "--spec",
        spec("free_particle.json").to_str().unwrap(),
        "--span",
        "0:1",
        "--n",
        "64",
        "--q0",
        "0",
        "--q1",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "s,q,p");
    assert_eq!(csv.lines().count(), 66);
    for line in csv.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells[2] - 1.0).abs() < 1e-10, "p column");
    }
    let omega: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.with_extension("csv.omega.json")).unwrap(),
    )
    .unwrap();
    assert!(omega["max_node_spread"].as_f64().unwrap() < 1e-10);
    let first = &omega["per_node"][0];
    assert!((first[0][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((first[1][0].as_f64().unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn solve_bvp_conjugate_span_exits_3_with_diagnostic() {
    let output = run(&[
        "solve-bvp",
        "--spec",
        spec("harmonic_oscillator.json").to_str().unwrap(),
        "--span",
        &format!("0:{}", std::f64::consts::PI),
        "--n",
        "64",
        "--q0",
        "0",
        "--q1",
        "0",
        "--format",
        "json",
    ]);
    assert_eq!(output.status.code(), Some(3));
    let err = String::from_utf8_lossy(&output.stderr).into_owned();
    assert!(err.contains("singular Jacobian"), "stderr: {err}");
}

#[test]
fn solve_bvp_with_one_interval_exits_2() {
    let output = run(&[
        "solve-bvp",
        "--spec",
        spec("free_particle.json").to_str().unwrap(),
        "--span",
        "0:1",
        "--n",
        "1",
        "--q0",
        "0",
        "--q1",
        "1",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn darboux_round_trip_through_the_cli() {
    let output = run(&["darboux", "--point", "q=3,p=2,s=1", "--tilde"]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert_eq!(text.lines().next().unwrap(), "q,p,s,Q,P,W,Qt,Pt,Wt");
    let cells: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(&cells[3..6], &[1.0, 2.0, 2.0]);
    assert_eq!(&cells[6..9], &[1.0, 2.0, 3.0]);

    let output = run(&["darboux", "--inverse", "--point", "Q=1,P=2,W=2"]);
    assert!(output.status.success());
    let text = stdout(&output);
    let cells: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((cells[3] - 3.0).abs() < 1e-12);
    assert!((cells[4] - 2.0).abs() < 1e-12);
    assert!((cells[5] - 1.0).abs() < 1e-12);
}

#[test]
fn seeded_outputs_are_reproducible() {
    let spec_path = spec("free_particle.json");
    let args = [
        "bracket",
        "--spec",
        spec_path.to_str().unwrap(),
        "--f",
        "q - p*s",
        "--g",
        "p",
        "--count",
        "8",
        "--seed",
        "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn negative_tolerance_exits_2() {
    let output = run(&[
        "bracket",
        "--spec",
        spec("free_particle.json").to_str().unwrap(),
        "--f",
        "q",
        "--g",
        "p",
        "--tol",
        "-1.0",
    ]);
    assert_eq!(output.status.code(), Some(2));
}
