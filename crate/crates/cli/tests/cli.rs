use std::process::{Command, Output};

fn orbital(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbital")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tree_passes_with_zero_deviation() {
    let o = orbital(&["verify-tree", "--valence", "3", "--depth", "5"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("verdict=pass"));
    assert!(out.contains("max deviation: 0"));
}

#[test]
fn shallow_tree_warns() {
    let o = orbital(&["verify-tree", "--depth", "1"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no interior pairs"));
    assert!(stdout(&o).contains("verdict=inconclusive"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&orbital(&["verify-tree", "--valence"])), 2);
    assert_eq!(code(&orbital(&["verify-tree", "--colour", "red"])), 2);
    assert_eq!(code(&orbital(&["verify-urysohn", "--step", "11"])), 2);
    assert_eq!(code(&orbital(&["verify-urysohn", "--distances", "3..1"])), 2);
    assert_eq!(code(&orbital(&["check-amalgam", "--format", "dot"])), 2);
}

#[test]
fn urysohn_bounds_and_csv() {
    let o = orbital(&["verify-urysohn", "--step", "2", "--samples", "50", "--seed", "3", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("y,z,d,rho,witness_len"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn tiny_budget_reports_deficits() {
    let o = orbital(&["verify-urysohn", "--step", "2", "--cap-rounds", "1"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("FAIL approximation too small"));
    assert!(out.contains("FAIL deficit over"));
}

#[test]
fn reports_are_reproducible() {
    let args = ["verify-urysohn", "--step", "3", "--samples", "20", "--seed", "11"];
    assert_eq!(orbital(&args).stdout, orbital(&args).stdout);
    assert!(stdout(&orbital(&args)).contains("seed=11"));
}

#[test]
fn dyadic_suite_passes() {
    let o = orbital(&["check-independence", "--family", "dyadic", "--level", "2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn planted_fault_is_reported() {
    let o = orbital(&["check-independence", "--family", "broken"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL monotonicity: B="));
}

#[test]
fn ended_tree_amalgam_passes() {
    let o = orbital(&["check-amalgam", "--family", "ended-tree", "--cap-wing", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn groups_and_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_str().unwrap();
    let o = orbital(&["groups", "--out", path, "--format", "dot"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("graph cosets {"));
    let report = std::fs::read_to_string(dir.path().join("groups.txt")).unwrap();
    assert!(report.contains("verdict=pass"));
    assert!(dir.path().join("groups.dot").exists());
}
