//! End-to-end checks of the command-line interface and its exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn otree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("otree-cli-test-{}-{name}", std::process::id()));
    p
}

const SCENARIO: &str = r#"{
  "seed": 11,
  "sites": 3,
  "policy": "scripted",
  "script": [
    { "site": 1, "op": { "kind": "add", "parent": "data" } },
    { "sync": true },
    { "site": 1, "op": { "kind": "ren", "target": "1;1", "label": "x" } },
    { "site": 2, "op": { "kind": "ins", "id": "1;1", "pos": 0, "ch": "h" } },
    { "site": 3, "op": { "kind": "del", "target": "1;1" } }
  ]
}"#;

#[test]
fn sweep_commands_exit_zero_on_clean_runs() {
    let out = otree(&["check-tp1", "--max-ids", "2"]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0 violations"), "{text}");

    let out = otree(&["check-tp2", "--max-ids", "2"]);
    assert!(out.status.success());

    let out = otree(&["check-legacy", "--max-nodes", "3", "--alphabet", "2"]);
    assert!(out.status.success());
}

#[test]
fn falsifier_reports_exhaustion_and_exits_zero() {
    let out = otree(&["falsify-del1", "--depth", "2"]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("satisfying=0"), "{text}");
    assert!(text.contains("exhausted=true"), "{text}");
}

#[test]
fn simulate_then_replay_round_trips_byte_exactly() {
    let scenario_path = temp_path("scenario.json");
    let report_path = temp_path("report.json");
    std::fs::write(&scenario_path, SCENARIO).unwrap();

    let out = otree(&[
        "simulate",
        scenario_path.to_str().unwrap(),
        "--format",
        "json",
        "--output",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");

    let first = std::fs::read(&report_path).unwrap();
    let out = otree(&[
        "simulate",
        scenario_path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        String::from_utf8(first.clone()).unwrap().trim(),
        "same scenario must produce identical reports"
    );

    let out = otree(&["replay", report_path.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("identical"), "{text}");

    std::fs::remove_file(&scenario_path).ok();
    std::fs::remove_file(&report_path).ok();
}

#[test]
fn simulate_checks_projections_when_asked() {
    let scenario_path = temp_path("proj-scenario.json");
    std::fs::write(&scenario_path, SCENARIO).unwrap();
    let out = otree(&[
        "simulate",
        scenario_path.to_str().unwrap(),
        "--check-projections",
    ]);
    assert!(out.status.success(), "{out:?}");
    std::fs::remove_file(&scenario_path).ok();
}

#[test]
fn small_fuzz_run_exits_zero() {
    let out = otree(&["fuzz", "--runs", "20", "--seed", "9"]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("converged=20"), "{text}");
}

#[test]
fn usage_and_io_errors_exit_two() {
    let out = otree(&["definitely-not-a-command"]);
    assert_eq!(out.status.code(), Some(2));

    let out = otree(&["simulate", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(2));

    let bad = temp_path("bad.json");
    std::fs::write(&bad, "not json").unwrap();
    let out = otree(&["simulate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(&bad).ok();
}

#[test]
fn non_generable_scenario_is_a_scenario_error() {
    let path = temp_path("ungenerable.json");
    std::fs::write(
        &path,
        r#"{ "seed": 0, "sites": 1, "policy": "scripted",
             "script": [ { "site": 1, "op": { "kind": "del", "target": "9;9" } } ] }"#,
    )
    .unwrap();
    let out = otree(&["simulate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    std::fs::remove_file(&path).ok();
}
