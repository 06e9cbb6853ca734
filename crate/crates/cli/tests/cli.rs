use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tempock"))
}

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/models")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("TEMPOCK_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const VIOLATED: &str = "\
process p [a : none] is
  states s
  from s a; to s
component main is
  port a : none in [5,5]
  par p [a] end
property late is main/start leadsto (main/1/event a) within [0; 3]
property fine is absent (main/1/event a) after main/start within [0; 4]
main
";

#[test]
fn check_periodic_all_hold() {
    let m = model("periodic.fcr");
    let o = run(&["check", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for r in ["req1", "req2", "req3", "req4"] {
        assert!(
            out.lines().any(|l| l.starts_with(r) && l.contains("HOLDS")),
            "{out}"
        );
    }
}

#[test]
fn prop_filter_gives_single_row() {
    let m = model("periodic.fcr");
    let o = run(&[
        "check",
        "--prop",
        "req3",
        "--format",
        "json",
        m.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["name"], "req3");
    assert_eq!(rows[0]["verdict"], "holds");
}

#[test]
fn unknown_prop_is_usage_error() {
    let m = model("periodic.fcr");
    assert_eq!(
        run(&["check", "--prop", "nope", m.to_str().unwrap()])
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn violation_exits_one_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "v.fcr", VIOLATED);
    let o = run(&["check", &f]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("late") && out.contains("VIOLATED"), "{out}");
    assert!(out.contains("t=]3,5]"), "{out}");
}

#[test]
fn text_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "v.fcr", VIOLATED);
    let text = stdout(&run(&["check", &f]));
    let json: Value =
        serde_json::from_slice(&run(&["check", "--format", "json", &f]).stdout).unwrap();
    for row in json["results"].as_array().unwrap() {
        let name = row["name"].as_str().unwrap();
        let verdict = row["verdict"].as_str().unwrap().to_uppercase();
        assert!(text
            .lines()
            .any(|l| l.starts_with(name) && l.contains(&verdict)));
    }
}

#[test]
fn single_thread_runs_are_reproducible() {
    let m = model("periodic.fcr");
    let a = run(&[
        "check",
        "--no-times",
        "--format",
        "json",
        m.to_str().unwrap(),
    ]);
    let b = run(&[
        "check",
        "--no-times",
        "--format",
        "json",
        m.to_str().unwrap(),
    ]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn class_limit_exits_two() {
    let m = model("periodic.fcr");
    let o = run(&["check", "--max-classes", "2", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("UNKNOWN"));
    assert_eq!(
        run(&["explore", "--max-classes", "2", m.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["bogus"]).status.code(), Some(64));
    assert_eq!(run(&["check"]).status.code(), Some(64));
    let m = model("periodic.fcr");
    let m = m.to_str().unwrap();
    assert_eq!(
        run(&["check", "--max-classes", "0", m]).status.code(),
        Some(64)
    );
    assert_eq!(
        run(&["check", "--format", "xml", m]).status.code(),
        Some(64)
    );
    assert_eq!(
        run(&["oracle", "--granularity", "0/2"]).status.code(),
        Some(64)
    );
    assert_eq!(
        run(&["check", "/nonexistent/model.fcr"]).status.code(),
        Some(64)
    );
}

#[test]
fn parse_errors_exit_65() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir, "bad.fcr", "process p is states\n");
    assert_eq!(run(&["check", &bad]).status.code(), Some(65));
    let empty = write(&dir, "empty.fcr", "");
    assert_eq!(run(&["explore", &empty]).status.code(), Some(65));
    assert_eq!(run(&["fmt", &bad]).status.code(), Some(65));
}

#[test]
fn explore_prints_counts() {
    let m = model("periodic.fcr");
    let o = run(&["explore", "--no-times", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.contains("classes   4\n")
            && out.contains("edges     4\n")
            && out.contains("dead      0\n"),
        "{out}"
    );
    let j: Value =
        serde_json::from_slice(&run(&["explore", "--format", "json", m.to_str().unwrap()]).stdout)
            .unwrap();
    assert_eq!(j["schema"], 1);
    assert_eq!(j["classes"], 4);
}

#[test]
fn sched_example_table() {
    let t = model("three_tasks.tab");
    let o = run(&["sched", "--no-times", t.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let first = out.lines().next().unwrap();
    assert!(
        first.starts_with("deterministic") && first.contains(" SCHEDULABLE"),
        "{out}"
    );
    assert!(
        out.lines()
            .any(|l| l.starts_with("interval") && l.contains("NOT SCHEDULABLE")),
        "{out}"
    );
    assert!(out.contains("dl_Task2"), "{out}");
}

#[test]
fn sched_single_task_and_invalid_table() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(&dir, "one.tab", "A 10 0 10 1 2 4\n");
    let o = run(&["sched", "--format", "json", &one]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for row in v["results"].as_array().unwrap() {
        assert_eq!(row["verdict"], "schedulable");
    }
    let bad = write(&dir, "bad.tab", "A 10 0 5 1 2 6\n");
    let o = run(&["sched", &bad]);
    assert_eq!(o.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&o.stderr).contains("A"));
}

#[test]
fn oracle_random_seed_matches() {
    let o = bin()
        .args(["oracle"])
        .env("TEMPOCK_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("MATCH"));
    let o = bin()
        .args(["oracle"])
        .env("TEMPOCK_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn oracle_coarse_granularity_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        &dir,
        "open.fcr",
        "process p is\n  states a, b\n  from a wait ]0,1[; to b\n  from b wait [0,0]; to b\ncomponent main is\n  par p end\nmain\n",
    );
    let o = run(&["oracle", "--granularity", "1", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("try 1/2"));
    assert_eq!(
        run(&["oracle", "--granularity", "1/2", &f]).status.code(),
        Some(0)
    );
}

#[test]
fn fmt_output_reparses_to_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("periodic.fcr");
    let o = run(&["fmt", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let f = write(&dir, "fmt.fcr", &stdout(&o));
    let again = run(&["fmt", &f]);
    assert_eq!(o.stdout, again.stdout);
    let a = run(&["check", "--no-times", m.to_str().unwrap()]);
    let b = run(&["check", "--no-times", &f]);
    assert_eq!(a.stdout, b.stdout);
}
