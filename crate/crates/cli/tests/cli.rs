use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn minkowski(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minkowski")).current_dir(dir).args(args).output().expect("spawn minkowski")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const POWER: [&str; 8] = ["--family", "power", "--lambda", "1", "--q", "3", "--N", "3"];

fn with<'a>(head: &[&'a str], base: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(base).chain(tail).copied().collect()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn thresholds_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = minkowski(dir.path(), &with(&["thresholds"], &POWER, &[]));
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let th = &v["thresholds"];
    assert!((th["alpha"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((th["xi0"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-7);
    assert_eq!(th["beta"], "inf");
    for key in ["config", "thresholds", "assumption_report", "timings", "version"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn sine_q2_fails_f4_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = minkowski(dir.path(), &["thresholds", "--family", "sine", "--q", "2", "--N", "3"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["assumption_report"]["f4"]["verdict"], "fail");
}

#[test]
fn missing_q_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = minkowski(dir.path(), &["thresholds", "--family", "power", "--lambda", "1", "--N", "3"]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--q") && err.contains("--help"), "{err}");
}

#[test]
fn help_and_version_exit_zero_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&minkowski(dir.path(), &["--help"])), 0);
    assert_eq!(code(&minkowski(dir.path(), &["--version"])), 0);
    assert_eq!(code(&minkowski(dir.path(), &["solve", "--no-such-flag"])), 1);
    assert_eq!(code(&minkowski(dir.path(), &["solve", "--family", "power", "--lambda", "1", "--q", "3", "--N", "1"])), 1);
}

#[test]
fn shoot_writes_one_row_per_stride_up_to_the_event() {
    let dir = tempfile::tempdir().unwrap();
    let out = minkowski(dir.path(), &with(&["shoot"], &POWER, &["--xi", "1.2", "--profile", "p.csv"]));
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["outcome"]["outcome"]["class"], "Turning");
    let r_turn = v["outcome"]["outcome"]["r_turn"].as_f64().unwrap();
    let (header, rows) = read_csv(&dir.path().join("p.csv"));
    assert_eq!(header, ["r", "u", "uprime", "q", "D", "energy_residual"]);
    assert_eq!(rows.len(), (r_turn / 0.01).ceil() as usize + 1);
    assert!(rows.iter().all(|r| r[2].abs() < 1.0));
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[0][1], 1.2);
}

#[test]
fn shoot_outside_the_admissible_interval_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    for xi in ["0.5", "-1", "60"] {
        let out = minkowski(dir.path(), &with(&["shoot"], &POWER, &["--xi", xi]));
        assert_eq!(code(&out), 1, "xi = {xi}");
    }
}

#[test]
fn scan_is_identical_across_thread_counts() {
    let runs: Vec<_> = ["1", "8"]
        .iter()
        .map(|threads| {
            let dir = tempfile::tempdir().unwrap();
            let out = minkowski(
                dir.path(),
                &with(&["scan"], &POWER, &["--xi-max", "3", "--threads", threads, "--scan-csv", "scan.csv", "--checks", "50"]),
            );
            assert_eq!(code(&out), 0);
            let csv = fs::read(dir.path().join("scan.csv")).unwrap();
            (out.stdout, csv)
        })
        .collect();
    assert_eq!(runs[0].0, runs[1].0);
    assert_eq!(runs[0].1, runs[1].1);

    let text = String::from_utf8(runs[0].1.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi,class,event_r,max_residual"));
    assert_eq!(lines.count(), 101);

    let v: Value = serde_json::from_slice(&runs[0].0).unwrap();
    let changes = v["scan"]["class_changes"].as_array().unwrap();
    assert_eq!(changes.len(), 1);
    assert_eq!(changes[0]["left_class"], "Turning");
    assert_eq!(changes[0]["right_class"], "Crossing");
    assert!(v["scan"]["stability"]["disagreements"].as_array().unwrap().is_empty());
}

#[test]
fn solve_power_produces_a_verified_decreasing_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = minkowski(
        dir.path(),
        &with(&["solve"], &POWER, &["--profile", "gs.csv", "--summary", "summary.json", "--variational-csv", "min.csv"]),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["verification"]["all_passed"], true);
    let xi = v["solution"]["ground_state"]["xi_star"].as_f64().unwrap();
    assert!((xi - 2.768892093911).abs() < 1e-8, "{xi}");

    let (_, rows) = read_csv(&dir.path().join("gs.csv"));
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
    assert!(rows.iter().all(|r| r[1] > 0.0 && r[2].abs() < 1.0));
    assert_eq!(fs::read(dir.path().join("summary.json")).unwrap(), out.stdout);
    let (_, minimizer) = read_csv(&dir.path().join("min.csv"));
    assert_eq!(minimizer.len(), 2001);
}

#[test]
fn solve_exit_code_follows_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = minkowski(dir.path(), &["solve", "--family", "power", "--lambda", "10", "--q", "3", "--N", "3"]);
    let v = json(&out);
    let passed = v["verification"]["all_passed"].as_bool().unwrap();
    assert_eq!(code(&out), if passed { 0 } else { 4 });
    assert_eq!(v["exit_code"].as_i64().unwrap(), code(&out) as i64);
}

#[test]
fn solve_sine_in_the_plane() {
    let dir = tempfile::tempdir().unwrap();
    let out = minkowski(dir.path(), &["solve", "--family", "sine", "--q", "1", "--N", "2"]);
    assert_eq!(code(&out), 0);
    let xi = json(&out)["solution"]["ground_state"]["xi_star"].as_f64().unwrap();
    assert!(xi > 0.0 && xi < std::f64::consts::TAU);
}

#[test]
fn bracket_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = minkowski(dir.path(), &with(&["solve"], &POWER, &["--variational", "false", "--r-max", "0.5"]));
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["failure"]["stage"], "bracket");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "[problem]\nfamily = \"power\"\nlambda = 1.0\nq = 3.0\nN = 3\n\n[shooting]\nxi = 1.2\nr_max = 50.0\n",
    )
    .unwrap();
    let out = minkowski(dir.path(), &["shoot", "--config", "run.toml", "--r-max", "70"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["config"]["shooting"]["r_max"], 70.0);
    assert_eq!(v["config"]["shooting"]["xi"], 1.2);

    fs::write(dir.path().join("bad.toml"), "[shooting]\nrmax = 1.0\n").unwrap();
    assert_eq!(code(&minkowski(dir.path(), &["shoot", "--config", "bad.toml"])), 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = with(&["solve"], &POWER, &[]);
    let a = minkowski(dir.path(), &args);
    let b = minkowski(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);
}
