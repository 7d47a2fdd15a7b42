//! End-to-end contract tests for the `lienard-ts` binary: exit codes,
//! output schemas, and the sweep/oracle subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lienard-ts"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    cmd.output().expect("binary should spawn")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code (killed by signal?)")
}

fn write_scn(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn missing_scenario_exits_3() {
    let out = run(&["check", "/nonexistent/nowhere.scn"]);
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_toml_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scn(dir.path(), "broken.scn", "name = \"x\"\nperiod = [not toml");
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn invalid_scenario_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
name = "bad-alphas"
period = 2.0
cells = "real-line"
alphas = [1.0, -1.0]

[phi]
kind = "relativistic"
c = 1.0

[h]
kind = "constant"
value = 0.1

[g]
kind = "sin"

[p]
kind = "zero"
"#;
    let path = write_scn(dir.path(), "bad.scn", body);
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("alphas"));
}

fn wide_strip_scenario(dir: &Path) -> PathBuf {
    // c·T = 2π > π: the window-spacing requirement fails for adjacent roots
    // of sin, so the hypothesis check must reject this configuration.
    let body = r#"
name = "too-fast"
period = 6.283185307179586
cells = "real-line"
alphas = [-1.5707963267948966, 1.5707963267948966, 4.71238898038469]

[phi]
kind = "relativistic"
c = 1.0

[h]
kind = "constant"
value = 0.1

[g]
kind = "sin"

[p]
kind = "cos"
amplitude = 0.1

[solver]
mesh_dt_divisor = 64
"#;
    write_scn(dir, "wide.scn", body)
}

#[test]
fn failing_hypothesis_check_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = wide_strip_scenario(dir.path());
    let out_dir = dir.path().join("out");
    let out = run(&["check", path.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("check_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(false));
    assert_eq!(report["spacing"]["pass"], serde_json::Value::Bool(false));
}

#[test]
fn solve_without_force_respects_failing_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = wide_strip_scenario(dir.path());
    let out = run(&["solve", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn forced_solve_with_rootless_window_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // g ≡ 1 never vanishes: certification fails, and under --force the
    // solver reports a missing root with exit code 1.
    let body = r#"
name = "no-root"
period = 1.0
cells = "real-line"
alphas = [0.0, 1.0]

[phi]
kind = "relativistic"
c = 0.5

[h]
kind = "constant"
value = 0.1

[g]
kind = "constant"
value = 1.0

[p]
kind = "zero"

[solver]
mesh_dt_divisor = 32
"#;
    let path = write_scn(dir.path(), "noroot.scn", body);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "solve",
        path.to_str().unwrap(),
        "--force",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let failure: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("failure_0.json")).unwrap())
            .unwrap();
    assert!(failure["reason"].as_str().unwrap().contains("no sign change"));
}

#[test]
fn successful_solve_exits_0_with_csv_schema_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "solve",
        scenario("discrete_regression.scn").to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(out_dir.join("window_0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x,x_delta");
    let mut rows = 0;
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 3);
        assert!(fields[2].abs() < 2.0, "|x_delta| must stay below the bound");
        rows += 1;
    }
    assert!(rows >= 6);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["scenario_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["files"].as_array().unwrap().iter().any(|f| f == "window_0.csv"));

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("window_0.json")).unwrap()).unwrap();
    assert!(meta["residual_eq"].as_f64().unwrap() < 1e-6);
}

#[test]
fn check_passes_on_bundled_hybrid_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "check",
        scenario("hybrid_arctan.scn").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"), "stdout: {stdout}");
}

#[test]
fn sweep_over_c_crosses_certification_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    // pendulum period is 0.9π, so certification requires c ≤ 1/0.9 ≈ 1.11
    let out = run(&[
        "sweep",
        scenario("pendulum_relativistic.scn").to_str().unwrap(),
        "--parameter",
        "c",
        "--from",
        "0.8",
        "--to",
        "1.4",
        "--points",
        "3",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert!(rows[0].starts_with("value,certified"));
    let certified: Vec<&str> =
        rows[1..].iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(certified, vec!["1", "1", "0"], "csv:\n{csv}");
}

#[test]
fn oracle_subcommand_on_discrete_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "oracle",
        scenario("discrete_regression.scn").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("oracle_window_0.csv")).unwrap();
    assert!(csv.starts_with("t,x,x_delta"));
}

#[test]
fn oracle_rejects_dense_time_scale() {
    let out = run(&["oracle", scenario("pendulum_relativistic.scn").to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}
