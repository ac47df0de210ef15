use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn specs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn run(cmd: &str, spec: &std::path::Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewric"))
        .arg(cmd)
        .arg("--spec")
        .arg(spec)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn inline(json: &str) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), json).unwrap();
    f
}

#[test]
fn halfplane_reports_rho_two() {
    let out = run("verify-surface", &specs().join("halfplane.json"), &["--reproducible"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], "skewric/1");
    assert_eq!(r["result"]["rho12"], "2");
    assert_eq!(r["result"]["decomposition"]["status"], "passed");
    assert_eq!(r["result"]["recurrence"]["status"], "passed");
}

#[test]
fn wong_passes_every_check() {
    let out = run("verify-surface", &specs().join("wong_y1y2.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["passed"], true);
}

#[test]
fn perturbed_wong_fails_with_symmetric_residual() {
    let out = run("verify-surface", &specs().join("wong_perturbed.json"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert!(r["result"]["ricci_skew"]["max_residual"].as_f64().unwrap() > 0.1);
    assert!(r["failures"][0].as_str().unwrap().contains("symmetric part"));
}

#[test]
fn malformed_input_exits_two() {
    let bad_expr = inline(r#"{"connection": "wong:y1**"}"#);
    assert_eq!(run("verify-surface", bad_expr.path(), &[]).status.code(), Some(2));
    let unknown = inline(r#"{"connection": "torus"}"#);
    assert_eq!(run("verify-surface", unknown.path(), &[]).status.code(), Some(2));
    let bad_field = inline(r#"{"connection": "cnc", "tolerance": 1}"#);
    assert_eq!(run("verify-surface", bad_field.path(), &[]).status.code(), Some(2));
    let wrong_cmd = specs().join("halfplane.json");
    assert_eq!(run("geodesic", &wrong_cmd, &[]).status.code(), Some(2));
    let negative = specs().join("halfplane.json");
    assert_eq!(run("verify-surface", &negative, &["--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn reproducible_reports_are_byte_identical() {
    let spec = specs().join("certify_flat.json");
    let a = run("extend-certify", &spec, &["--reproducible", "--seed", "7"]);
    let b = run("extend-certify", &spec, &["--reproducible", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(report(&a).get("generated_at").is_none());
    let stamped = run("extend-certify", &spec, &["--seed", "7"]);
    assert!(report(&stamped)["generated_at"].is_u64());
}

#[test]
fn seed_override_changes_samples() {
    let spec = specs().join("certify_flat.json");
    let a = report(&run("extend-certify", &spec, &["--reproducible", "--seed", "1"]));
    let b = report(&run("extend-certify", &spec, &["--reproducible", "--seed", "2"]));
    assert_eq!(a["seed"], 1);
    assert_ne!(a["result"]["certificate"]["records"], b["result"]["certificate"]["records"]);
}

#[test]
fn lie_normal_form_example() {
    let out = run("lie-classify", &specs().join("lie_normal_form.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["subalgebra"]["bracket_residual"], 0.0);
}

#[test]
fn lie_rank_and_ricci() {
    let r = report(&run("lie-classify", &specs().join("lie_rank_two.json"), &[]));
    assert_eq!(r["result"]["left_invariant"]["rank"], 2);
    assert_eq!(r["result"]["left_invariant"]["ricci_e1e2"], 3.0);

    let rank_one = inline(
        r#"{"leftinv": {"algebra": [1, 0], "psi": [[0, 0, 0, 0], [1, 0, 0, -1]], "f": [0, 0]}}"#,
    );
    let r = report(&run("lie-classify", rank_one.path(), &[]));
    assert_eq!(r["result"]["left_invariant"]["rank"], 1);

    // q(e1) != 0 on [e1,e2] = e1 is not a homomorphism.
    let broken = inline(
        r#"{"leftinv": {"algebra": [1, 0], "psi": [[1, 0, 0, -1], [0, 0, 0, 0]], "f": [0, 0]}}"#,
    );
    let out = run("lie-classify", broken.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["result"]["left_invariant"]["homomorphism"], false);
}

#[test]
fn lie_dependent_pair_is_input_error() {
    let f = inline(r#"{"subalgebra": {"a0": [0, 0, 1, 0], "b0": [0, 0, 1, 0]}}"#);
    assert_eq!(run("lie-classify", f.path(), &[]).status.code(), Some(2));
}

#[test]
fn geodesic_writes_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        "geodesic",
        &specs().join("geodesic_wong.json"),
        &["--out", dir.path().to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    for run in r["result"]["trajectories"].as_array().unwrap() {
        assert!(run["max_drift"].as_f64().unwrap() <= 1e-6);
    }
    let csv = std::fs::read_to_string(dir.path().join("trajectory_0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,y1,y2,v1,v2,re_omega,im_omega,arg_drift");
    assert_eq!(lines.count(), 1001);
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn geodesic_leaving_chart_is_flagged() {
    let f = inline(
        r#"{"connection": "wong:y1*y2", "chart": {"box": [[-0.5, 0.5], [-0.5, 0.5]]},
            "initial": [{"y": [0, 0], "v": [1, 0]}]}"#,
    );
    let out = run("geodesic", f.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["result"]["trajectories"][0]["halted"], "chart_exit");
}

#[test]
fn flat_geodesic_has_no_drift() {
    let f = inline(
        r#"{"connection": {"chart": {"box": [[-2, 2], [-2, 2]]}},
            "omega": {"re": ["1", "0"], "im": ["0", "1"]},
            "initial": [{"y": [0, 0], "v": [1, 1]}]}"#,
    );
    let out = run("geodesic", f.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["trajectories"][0]["max_drift"], 0.0);
}

#[test]
fn dynamics_check_wong() {
    let out = run("dynamics-check", &specs().join("dynamics_wong.json"), &["--reproducible"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["frame"]["q"], "(-1)*y1");
    assert!(r["result"]["negated_torsion_control_max"].as_f64().unwrap() > 1e-2);
}

#[test]
fn dynamics_check_needs_frame() {
    let f = inline(r#"{"connection": "halfplane"}"#);
    assert_eq!(run("dynamics-check", f.path(), &[]).status.code(), Some(2));
}

#[test]
fn certify_wong_is_type_iii() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        "extend-certify",
        &specs().join("certify_wong.json"),
        &["--out", dir.path().to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["certificate"]["summary"]["type_iii_points"], 50);
    let csv = std::fs::read_to_string(dir.path().join("points.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn certify_flat_is_type_o() {
    let r = report(&run("extend-certify", &specs().join("certify_flat.json"), &[]));
    assert_eq!(r["passed"], true);
    assert_eq!(r["result"]["certificate"]["summary"]["type_o_points"], 20);
}

#[test]
fn certify_rejects_torsion() {
    let f = inline(r#"{"connection": "halfplane"}"#);
    let out = run("extend-certify", f.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(report(&out)["failures"][0].as_str().unwrap().contains("torsion"));
}
