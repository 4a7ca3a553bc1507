use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str =
    "experiment_id,epsilon,rounds,initial_concurrence,final_concurrence,predicted_concurrence,abs_error,separable,min_branch_concurrence";

fn enatp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enatp")).args(args).env_remove("ENATP_TOL").output().unwrap()
}

fn run_config(dir: &TempDir, name: &str, config: &str) -> (Output, String) {
    let cfg = dir.path().join(format!("{name}.cfg"));
    let out = dir.path().join(format!("{name}.csv"));
    fs::write(&cfg, config).unwrap();
    let output = enatp(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let csv = fs::read_to_string(&out).unwrap_or_default();
    (output, csv)
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn field(row: &[String], name: &str) -> String {
    let idx = HEADER.split(',').position(|h| h == name).unwrap();
    row[idx].clone()
}

#[test]
fn bell_state_decays_to_0_64() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_config(
        &dir,
        "bell",
        "id = bell\nstate = bell-phi-plus\nschedule = special(0.6,0,0,1) @ system x 2\nmode = unknown\n",
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv.lines().next(), Some(HEADER));
    let rows = rows(&csv);
    assert_eq!(rows.len(), 3);
    let last = &rows[2];
    assert_eq!(field(last, "rounds"), "2");
    let final_c: f64 = field(last, "final_concurrence").parse().unwrap();
    assert!((final_c - 0.64).abs() < 1e-12);
    let err: f64 = field(last, "abs_error").parse().unwrap();
    assert!(err < 1e-9);
    assert_eq!(field(last, "min_branch_concurrence"), "");
}

#[test]
fn example1_row_is_separable() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_config(&dir, "ex1", "state = example1\nschedule = special(0.1,1,0,0) @ both\n");
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&csv);
    assert_eq!(field(&rows[1], "separable"), "true");
    assert_eq!(field(&rows[0], "separable"), "false");
    assert_eq!(field(&rows[1], "predicted_concurrence"), "");
}

#[test]
fn known_mode_reports_branches() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_config(&dir, "known", "state = example1(0.002)\nschedule = special(0.1,1,0,0) @ both\nmode = known\n");
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&csv);
    let min_branch: f64 = field(&rows[1], "min_branch_concurrence").parse().unwrap();
    assert!(min_branch > 0.0);
    assert_eq!(field(&rows[1], "separable"), "false");
}

#[test]
fn malformed_config_exits_1_with_line_number() {
    let dir = TempDir::new().unwrap();
    let (out, _) = run_config(&dir, "bad", "state = bell-phi-plus\n\nschedule = special(0.6,0,0,1) @ sideways x 2\n");
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn missing_config_file_exits_1() {
    let dir = TempDir::new().unwrap();
    let out = enatp(&["run", "--config", dir.path().join("nope.cfg").to_str().unwrap(), "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invariant_violation_exits_2() {
    // A tolerance no floating-point run can meet.
    let dir = TempDir::new().unwrap();
    let (out, csv) = run_config(
        &dir,
        "strict",
        "state = schmidt(1.3)\nschedule = special(0.37,0,0,1) @ system x 6\ntol.invariant = 1e-300\n",
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(rows(&csv).len(), 7);
}

fn sweep(dir: &Path, name: &str, extra: &[&str]) -> (Output, String) {
    let out = dir.join(name);
    let mut args = vec!["sweep", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let output = enatp(&args);
    (output, fs::read_to_string(&out).unwrap_or_default())
}

#[test]
fn sweep_grid_has_121_rows() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = sweep(
        dir.path(),
        "grid.csv",
        &["--eps-min", "0", "--eps-max", "1", "--eps-steps", "11", "--rounds-max", "10", "--state", "bell-phi-plus"],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&csv);
    assert_eq!(rows.len(), 121);
    let mut max_err: f64 = 0.0;
    for r in &rows {
        max_err = max_err.max(field(r, "abs_error").parse().unwrap());
        let c: f64 = field(r, "final_concurrence").parse().unwrap();
        assert!((0.0..=1.0).contains(&c));
        if field(r, "rounds") == "0" {
            assert_eq!(field(r, "final_concurrence"), field(r, "initial_concurrence"));
        } else if field(r, "epsilon").parse::<f64>().unwrap() == 1.0 {
            assert_eq!(c, 0.0);
        }
    }
    assert!(max_err < 1e-9);
}

#[test]
fn sweep_rejects_bad_range() {
    let dir = TempDir::new().unwrap();
    let (out, _) = sweep(dir.path(), "bad.csv", &["--eps-min", "0.5", "--eps-max", "0.2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = "state = random-mixed\nseed = 42\nschedule = special(0.3,0.6,0,0.8) @ both x 3 ; example2 @ system\nmode = known\n";
    let (_, a) = run_config(&dir, "a", cfg);
    let (_, b) = run_config(&dir, "b", cfg);
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let (_, c) = run_config(&dir, "c", &cfg.replace("seed = 42", "seed = 43"));
    assert_ne!(a, c);

    let args = ["--eps-steps", "7", "--rounds-max", "5", "--state", "schmidt(0.8)", "--target", "both"];
    let (_, s1) = sweep(dir.path(), "s1.csv", &args);
    let (_, s2) = sweep(dir.path(), "s2.csv", &args);
    assert_eq!(s1, s2);
}

#[test]
fn environment_tolerance_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("t.cfg");
    let out = dir.path().join("t.csv");
    // Concurrence after one weak round is 0.8, min PT eigenvalue −0.4.
    fs::write(&cfg, "state = bell-phi-plus\nschedule = special(0.6,0,0,1) @ system\n").unwrap();
    let separable = |tol: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_enatp"));
        cmd.args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).env_remove("ENATP_TOL");
        if let Some(t) = tol {
            cmd.env("ENATP_TOL", t);
        }
        assert!(cmd.status().unwrap().success());
        field(&rows(&fs::read_to_string(&out).unwrap())[1], "separable")
    };
    assert_eq!(separable(None), "false");
    assert_eq!(separable(Some("0.9")), "true");

    let status = Command::new(env!("CARGO_BIN_EXE_enatp"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("ENATP_TOL", "banana")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn verify_suite_passes() {
    let out = enatp(&["verify", "--suite", "all", "--seed", "7", "--trials", "200"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    let out = enatp(&["verify", "--suite", "theorem2", "--seed", "1", "--trials", "20"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS theorem2.projective_gap"), "{stdout}");
    assert_eq!(enatp(&["verify", "--suite", "theorem9"]).status.code(), Some(1));
}

#[test]
fn examples_command() {
    for which in ["1", "2", "3", "appendix"] {
        let out = enatp(&["examples", "--which", which]);
        assert_eq!(out.status.code(), Some(0));
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("separable            true"), "{which}: {stdout}");
    }
    let out = enatp(&["examples", "--which", "appendix", "--theta", "0.4"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("closed-form residual"));
    assert_eq!(enatp(&["examples", "--which", "5"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(enatp(&["sweep"]).status.code(), Some(1));
    assert_eq!(enatp(&[]).status.code(), Some(1));
    assert_eq!(enatp(&["--help"]).status.code(), Some(0));
}
