use std::fs;
use std::process::{Command, Output};

use tempfile::TempDir;

fn subsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subsplit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_problem(dir: &TempDir, name: &str, json: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, json).unwrap();
    path.display().to_string()
}

/// `metric_value` of the first row with this metric name.
fn metric(csv: &str, name: &str) -> f64 {
    csv.lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[4] == name)
        .unwrap_or_else(|| panic!("no {name} row"))[6]
        .parse()
        .unwrap()
}

const LINES: &str = r#"{
  "algorithm": "ryu", "d": 2,
  "subspaces": [{"d": 2, "basis": [[1, 0]]}, {"d": 2, "basis": [[1, 1]]}, {"d": 2, "basis": [[1, 0]]}],
  "lambda": 0.5, "start": [[1, 2], [-3, 0.5]]
}"#;

#[test]
fn exp1_csv_is_deterministic_across_runs_and_threads() {
    let args = ["exp1", "--n", "8", "--lambda-grid", "0.1:0.4:0.9", "--seed", "11"];
    let a = subsplit(&args);
    let b = subsplit(&args);
    let mut serial_args = args.to_vec();
    serial_args.push("--serial");
    let c = subsplit(&serial_args);
    assert!(a.status.success(), "{}", stderr(&a));
    let out = stdout(&a);
    assert!(out.starts_with("experiment,algorithm,lambda,instance_seed,metric_name,iteration,metric_value\n"));
    assert_eq!(out.lines().count(), 1 + 2 * 3 * 4);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn exp1_writes_json_to_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("out.json");
    let o = subsplit(&[
        "exp1", "--n", "3", "--lambda", "0.5", "--algorithm", "mt", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: serde_like::Rows = serde_like::parse(&fs::read_to_string(&path).unwrap());
    assert_eq!(v.len(), 4);
    assert!(v.iter().all(|r| r.contains("\"algorithm\": \"mt\"")));
}

/// Minimal splitter for the pretty-printed JSON array, to avoid a serde
/// dependency in this crate just for tests.
mod serde_like {
    pub type Rows = Vec<String>;
    pub fn parse(s: &str) -> Rows {
        s.split("},").map(str::to_string).collect()
    }
}

#[test]
fn exp2_counts_runs() {
    let o = subsplit(&["exp2", "--n", "3", "--points", "4", "--lambda", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let runs: Vec<&str> = out.lines().filter(|l| l.contains(",runs,")).collect();
    assert_eq!(runs.len(), 2);
    for r in runs {
        assert!(r.ends_with(",1.2000000000000000e1"), "{r}");
    }
}

#[test]
fn exp3_one_row_per_iteration() {
    let o = subsplit(&["exp3", "--n", "2", "--points", "2", "--max-iters", "20", "--algorithm", "ryu"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 21);
    assert!(out.lines().nth(1).unwrap().starts_with("exp3,ryu,9.8999999999999999e-1,0,shadow_median_distance,1,"));
}

#[test]
fn run_lines_converges_to_origin() {
    let dir = TempDir::new().unwrap();
    let path = write_problem(&dir, "lines.json", LINES);
    let o = subsplit(&["run", "--problem", &path, "--trace"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(metric(&out, "converged"), 1.0);
    assert!(metric(&out, "solution_0").abs() < 1e-6);
    assert!(metric(&out, "solution_1").abs() < 1e-6);
    assert!(out.contains(",governing_distance,0,"));
    assert!(stderr(&o).contains("converged"));
}

#[test]
fn run_start_in_fix_takes_no_steps() {
    let dir = TempDir::new().unwrap();
    let json = r#"{"algorithm": "ryu", "d": 2,
        "subspaces": [{"d": 2, "basis": [[1, 0]]}, {"d": 2, "basis": [[2, 0]]}, {"d": 2, "basis": [[1, 0]]}],
        "lambda": 0.5, "start": [[3, 0], [0, 0]]}"#;
    let path = write_problem(&dir, "fix.json", json);
    let o = subsplit(&["run", "--problem", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(metric(&out, "iterations"), 0.0);
    assert!((metric(&out, "solution_0") - 3.0).abs() < 1e-12);
}

#[test]
fn run_affine_shift() {
    // Lines through v = (1, -2) parallel to the x-axis, the diagonal and the
    // x-axis meet only at v, so the solution is v for any start.
    let dir = TempDir::new().unwrap();
    let json = r#"{"algorithm": "mt", "d": 2,
        "subspaces": [{"d": 2, "basis": [[1, 0]]}, {"d": 2, "basis": [[1, 1]]}, {"d": 2, "basis": [[1, 0]]}],
        "anchors": [[1, -2], [1, -2], [1, -2]],
        "lambda": 0.7, "start": [[4, 1], [0, 0]]}"#;
    let path = write_problem(&dir, "affine.json", json);
    let o = subsplit(&["run", "--problem", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((metric(&out, "solution_0") - 1.0).abs() < 1e-6);
    assert!((metric(&out, "solution_1") + 2.0).abs() < 1e-6);
}

#[test]
fn malformed_json_is_usage_error_with_path() {
    let dir = TempDir::new().unwrap();
    let path = write_problem(&dir, "bad.json", &LINES.replace("0.5", "\"x\""));
    let o = subsplit(&["run", "--problem", &path]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.json"), "{err}");
    assert!(err.contains("lambda"), "{err}");
}

#[test]
fn missing_file_is_usage_error() {
    let o = subsplit(&["run", "--problem", "/nonexistent/problem.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/problem.json"));
}

#[test]
fn inconsistent_affine_exits_4() {
    let dir = TempDir::new().unwrap();
    let json = r#"{"algorithm": "ryu", "d": 2,
        "subspaces": [{"d": 2, "basis": [[1, 0]]}, {"d": 2, "basis": [[1, 0]]}, {"d": 2, "basis": [[1, 0]]}],
        "anchors": [[0, 0], [0, 1], [0, 0]],
        "lambda": 0.5, "start": [[0, 0], [0, 0]]}"#;
    let path = write_problem(&dir, "parallel.json", json);
    let o = subsplit(&["run", "--problem", &path]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("inconsistent"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(subsplit(&["exp1", "--sub-dims", "4,5,5"]).status.code(), Some(2));
    assert_eq!(subsplit(&["exp1", "--lambda", "1.5"]).status.code(), Some(2));
    assert_eq!(subsplit(&["exp2", "--tol", "0"]).status.code(), Some(2));
    assert_eq!(subsplit(&["exp1", "--bogus"]).status.code(), Some(2));
    assert_eq!(subsplit(&["exp1", "--dim", "6", "--sub-dims", "5,5,5,5", "--algorithm", "ryu"]).status.code(), Some(2));
    assert_eq!(subsplit(&[]).status.code(), Some(2));
}

#[test]
fn mt_accepts_more_sets() {
    let o = subsplit(&["exp1", "--n", "2", "--lambda", "0.5", "--sub-dims", "5,5,5,5", "--algorithm", "mt"]);
    assert!(o.status.success(), "{}", stderr(&o));
}
