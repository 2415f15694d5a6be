mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn janus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_janus-lite"))
        .args(args)
        .env_remove("JANUS_BUDGET_SECS")
        .output()
        .unwrap()
}

fn path(p: &Path) -> String {
    p.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn exit_codes() {
    assert_eq!(
        janus(&["analyze", &path(&corpus_path("mint"))])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        janus(&["analyze", &path(&corpus_path("fixed_mint"))])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        janus(&["analyze", "/no/such/file.msol"]).status.code(),
        Some(2)
    );
    assert_eq!(janus(&["analyze"]).status.code(), Some(2));
}

#[test]
fn parse_errors_are_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.msol");
    std::fs::write(&f, "contract C {\n  uint a\n  function f() public { }\n}\n").unwrap();
    let o = janus(&["analyze", &path(&f)]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    let prefix = format!("{}:", path(&f));
    assert!(msg.starts_with(&prefix), "{msg}");
    let rest = &msg[prefix.len()..];
    let mut parts = rest.splitn(3, ':');
    let line: usize = parts.next().unwrap().parse().unwrap();
    let _col: usize = parts.next().unwrap().parse().unwrap();
    assert!(line == 2 || line == 3, "{msg}");
    assert!(
        parts.next().unwrap().trim_start().starts_with("error:"),
        "{msg}"
    );
}

#[test]
fn json_output_is_a_report() {
    let o = janus(&["analyze", "--json", &path(&corpus_path("pause"))]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["contract"], "PausableToken");
    assert_eq!(v["risks"][0]["category"], "DisableTransferring");

    let o = janus(&[
        "analyze",
        "--json",
        &path(&corpus_path("mint")),
        &path(&corpus_path("fixed_mint")),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn financial_var_overrides_are_checked() {
    let mint = path(&corpus_path("mint"));
    let o = janus(&["analyze", "--financial-vars", "nope", &mint]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));
    let o = janus(&["analyze", "--financial-vars", "owner", &mint]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn zero_depth_budget_is_rejected() {
    let o = janus(&[
        "analyze",
        "--depth-budget",
        "0",
        &path(&corpus_path("mint")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn time_budget_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_janus-lite"))
        .args(["analyze", &path(&corpus_path("pause"))])
        .env("JANUS_BUDGET_SECS", "0")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("partial result"), "{}", stderr(&o));
    assert!(stdout(&o).contains("[partial]"));
}

#[test]
fn convergence_log_and_fact_dump() {
    let dir = tempfile::tempdir().unwrap();
    let o = janus(&[
        "analyze",
        "--log-convergence",
        "--dump-facts",
        &path(dir.path()),
        &path(&corpus_path("mint")),
    ]);
    assert!(stderr(&o).contains("round 1:"), "{}", stderr(&o));
    assert!(stderr(&o).contains("converged after"));
    let dump: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mint.facts.json")).unwrap())
            .unwrap();
    assert_eq!(dump["contract"], "MintableToken");
    assert!(dump["graph"]["nodes"]
        .as_array()
        .is_some_and(|n| !n.is_empty()));
}

#[test]
fn corpus_summary() {
    let o = janus(&["corpus", &path(&tests_dir().join("corpus"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).contains("14 contract(s): 7 risky, 7 clean, 0 error(s)"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn oracle_command() {
    let o = janus(&["oracle", "--depth", "2", &path(&corpus_path("mint"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 violation(s)"));
    let o = janus(&["oracle", "--depth", "9", &path(&corpus_path("mint"))]);
    assert_eq!(o.status.code(), Some(2));
}
