//! Golden tests for the command-line interface: fixed inputs, asserted
//! stdout and exit codes. Timing-dependent benchmark columns are excluded
//! from the assertions.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/../../{name}", env!("CARGO_MANIFEST_DIR"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialectic")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn check_echoes_canonical_form() {
    let out = run(&["check", &fixture("specs/chain.dspec")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("name \"chain\";"));
    assert!(text.contains("g(a) & n(a) => priv- n(a) & pub+ a(a);"));
    // canonical output is a fixpoint of check
    let echo = tmp("chain_canonical.dspec");
    std::fs::write(&echo, &text).unwrap();
    let again = run(&["check", echo.to_str().unwrap()]);
    assert_eq!(code(&again), 0);
    assert_eq!(stdout(&again), text);
}

#[test]
fn check_rejects_malformed_input_with_position() {
    let bad = tmp("bad.dspec");
    std::fs::write(&bad, "agent1 { p( => pub+ q; }\ninitial { private1: ; public: ; private2: ; }\n").unwrap();
    let out = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("1:13"), "diagnostic was: {}", stderr(&out));
}

#[test]
fn check_reports_missing_initial_on_empty_file() {
    let empty = tmp("empty.dspec");
    std::fs::write(&empty, "").unwrap();
    let out = run(&["check", empty.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("missing initial"), "diagnostic was: {}", stderr(&out));
}

#[test]
fn build_fsm_prints_summary_counts() {
    for (spec, expected) in [
        ("specs/chain.dspec", "states=6 transitions=5 terminals=1"),
        ("specs/fork.dspec", "states=9 transitions=9 terminals=1"),
        ("specs/claim_cycle.dspec", "states=3 transitions=3 terminals=0"),
        ("specs/two_goals.dspec", "states=8 transitions=7 terminals=2"),
        ("specs/no_rules.dspec", "states=3 transitions=2 terminals=1"),
    ] {
        let out = run(&["build-fsm", &fixture(spec)]);
        assert_eq!(code(&out), 0, "{spec}: {}", stderr(&out));
        assert_eq!(stdout(&out).trim(), expected, "{spec}");
    }
}

#[test]
fn build_fsm_outputs_are_byte_stable() {
    let json_a = tmp("chain_a.json");
    let json_b = tmp("chain_b.json");
    let dot = tmp("chain.dot");
    for path in [&json_a, &json_b] {
        let out = run(&[
            "build-fsm",
            &fixture("specs/chain.dspec"),
            "--json",
            path.to_str().unwrap(),
            "--dot",
            dot.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(std::fs::read(&json_a).unwrap(), std::fs::read(&json_b).unwrap());
    let json = std::fs::read_to_string(&json_a).unwrap();
    assert!(json.contains("\"dialectic-fsm/v1\""));
    let dot_text = std::fs::read_to_string(&dot).unwrap();
    assert!(dot_text.starts_with("digraph dialogue {"));
    assert_eq!(dot_text.matches("doublecircle").count(), 1);
}

#[test]
fn build_fsm_state_cap_exits_with_resource_code() {
    let out = run(&["build-fsm", &fixture("specs/chain.dspec"), "--max-states", "2"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("state-space cap exceeded"));
}

#[test]
fn analyze_two_goals_finds_the_win() {
    let out = run(&["analyze", &fixture("specs/two_goals.dspec")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "root=1");
}

#[test]
fn analyze_weighted_chain_is_an_exact_rational() {
    let out = run(&[
        "analyze",
        &fixture("specs/chain.dspec"),
        "--utility",
        "weighted",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "root=1/4");
}

#[test]
fn analyze_fork_is_lost() {
    let out = run(&["analyze", &fixture("specs/fork.dspec")]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "root=0");
}

#[test]
fn analyze_exhaustive_on_cycle_is_an_analysis_error() {
    let out = run(&["analyze", &fixture("specs/claim_cycle.dspec")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("non-terminating under exhaustive end function"));
}

#[test]
fn analyze_norepeat_handles_the_cycle() {
    let out = run(&[
        "analyze",
        &fixture("specs/claim_cycle.dspec"),
        "--end",
        "norepeat",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "root=0");
}

#[test]
fn analyze_depth_end_and_tree_out() {
    let tree = tmp("cycle_tree.json");
    let out = run(&[
        "analyze",
        &fixture("specs/claim_cycle.dspec"),
        "--end",
        "depth:4",
        "--tree-out",
        tree.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&tree).unwrap()).unwrap();
    assert_eq!(json["depth"], 1);
    assert_eq!(json["children"][0]["depth"], 2);
}

#[test]
fn analyze_node_cap_exits_with_resource_code() {
    let out = run(&["analyze", &fixture("specs/fork.dspec"), "--max-nodes", "2"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("tree node cap exceeded"));
}

#[test]
fn enumerate_lists_reflected_traces() {
    let out = run(&["enumerate", &fixture("specs/chain.dspec"), "--max-steps", "12"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let finite: Vec<&str> = text.lines().filter(|l| l.starts_with("finite ")).collect();
    assert_eq!(finite.len(), 1);
    assert!(finite[0].contains("({priv- n(a), pub+ a(a)}, {})"));

    let out = run(&["enumerate", &fixture("specs/fork.dspec"), "--max-steps", "12"]);
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("finite ")).count(), 2);

    let out = run(&["enumerate", &fixture("specs/no_rules.dspec")]);
    assert_eq!(stdout(&out).trim(), "finite ({}, {}) ({}, {})");
}

#[test]
fn grounded_prints_sorted_members() {
    let out = run(&["grounded", &fixture("graphs/chain.graph")]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "a c");

    let out = run(&["grounded", &fixture("graphs/fork.graph")]);
    assert_eq!(stdout(&out).trim(), "b c");

    let out = run(&["grounded", &fixture("graphs/empty.graph")]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "");
}

#[test]
fn grounded_rejects_malformed_graph() {
    let bad = tmp("bad.graph");
    std::fs::write(&bad, "arg a\nattack a a\n").unwrap();
    let out = run(&["grounded", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn bench_small_batch_emits_csv() {
    let csv = tmp("bench.csv");
    let out = run(&[
        "bench", "--runs", "5", "--args", "6", "--max-attacks", "4", "--seed", "1",
        "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "avg_attacks,avg_fsm_nodes,avg_fsm_transitions,avg_tree_nodes,avg_runtime_s,median_runtime_s,timeouts,seed"
    );
    let row = lines.next().unwrap();
    assert!(row.ends_with(",0,1"), "row was {row}");
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), text);
}

#[test]
fn bench_size_columns_are_deterministic() {
    let columns = |text: &str| -> Vec<String> {
        let row = text.lines().nth(1).unwrap();
        // keep the non-timing columns: attacks, sizes, timeouts, seed
        let f: Vec<&str> = row.split(',').collect();
        vec![f[0].into(), f[1].into(), f[2].into(), f[3].into(), f[6].into(), f[7].into()]
    };
    let args = ["bench", "--runs", "3", "--args", "6", "--max-attacks", "3", "--seed", "77"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(columns(&stdout(&a)), columns(&stdout(&b)));
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 1);
    let out = run(&["analyze", &fixture("specs/chain.dspec"), "--end", "sometimes"]);
    assert_eq!(code(&out), 1);
    let out = run(&["check", &fixture("specs/does_not_exist.dspec")]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("build-fsm"));
}
