//! End-to-end checks of the command-line contract: exit codes, text/JSON
//! agreement, and file output.

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name);
    path.to_str().expect("utf-8 path").to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coindgame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn check_spe_holds_with_exit_zero() {
    let out = run(&["check", "spe", &corpus("s10a.cg"), "--name", "s10a"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("spe(s10a): true"));
}

#[test]
fn check_converges_fails_with_exit_one() {
    let out = run(&["check", "converges", &corpus("escalation.cg"), "--name", "sAinf"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("converges(sAinf): false"));
}

#[test]
fn check_nash_on_divergent_profile_is_a_semantic_error() {
    let out = run(&["check", "nash", &corpus("escalation.cg"), "--name", "sAinf"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("undefined"));
}

#[test]
fn check_nash_verdicts_and_witness() {
    // f1_bi stops at the root; continuing would pay A more only if B then
    // stopped, which it does not, so this is actually Nash.
    let out = run(&["check", "nash", &corpus("finite.cg"), "--name", "f1_bi"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    // The lopsided profile is Nash too: deviating cannot help A because
    // the spin subtree never ends.
    let out = run(&["check", "nash", &corpus("finite.cg"), "--name", "lopsided"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    // greedy_miss fails with a one-flip witness for A.
    let out = run(&["check", "nash", &corpus("finite.cg"), "--name", "greedy_miss"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("nash(greedy_miss): false"));
    assert!(text.contains("agent A improves 0 -> 1"));
    assert!(text.contains("a -> r"));

    let json_out = run(&[
        "check",
        "nash",
        &corpus("finite.cg"),
        "--name",
        "greedy_miss",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&json_out)).expect("valid json");
    assert_eq!(doc["holds"], false);
    assert_eq!(doc["witness"]["agent"], "A");
    assert_eq!(doc["witness"]["payoff_after"], "1");
}

#[test]
fn check_strong_distinguishes_the_lopsided_profile() {
    let out = run(&["check", "strong", &corpus("finite.cg"), "--name", "lopsided"]);
    assert_eq!(code(&out), 1);
    let out = run(&["check", "converges", &corpus("finite.cg"), "--name", "lopsided"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn eval_payoff_defined_and_undefined() {
    let out = run(&["eval", "payoff", &corpus("s10a.cg"), "--name", "s10a"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("A: 1, B: 0"));

    let out = run(&["eval", "payoff", &corpus("escalation.cg"), "--name", "sAinf"]);
    assert_eq!(code(&out), 0, "partiality is a result, not an error");
    assert!(stdout(&out).contains("undefined"));
    assert!(stdout(&out).contains("sAinf -> sBinf"));
}

#[test]
fn bisim_compares_presentations() {
    let out = run(&[
        "bisim",
        &corpus("zero_one.cg"),
        "--left",
        "g01",
        "--right",
        "g01_unrolled",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("true"));

    let out = run(&["bisim", &corpus("s10a.cg"), "--left", "s10a", "--right", "s01a"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sum_writes_a_reparsable_profile() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_path = dir.path().join("sum.cg");
    let out = run(&[
        "sum",
        &corpus("escalation.cg"),
        "--strategies",
        "stAinf,stBinf",
        "--out",
        out_path.to_str().expect("utf-8"),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let written = std::fs::read_to_string(&out_path).expect("file written");
    assert!(written.contains("profile sum"));
    // The written profile converges nowhere: feed it back in.
    let check = run(&[
        "check",
        "converges",
        out_path.to_str().expect("utf-8"),
        "--name",
        "sum",
    ]);
    assert_eq!(code(&check), 1);
}

#[test]
fn sum_with_missing_agent_is_a_semantic_error() {
    let out = run(&["sum", &corpus("escalation.cg"), "--strategies", "stAinf"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("one strategy per declared agent"));
}

#[test]
fn escalate_verdicts() {
    let out = run(&["escalate", &corpus("escalation.cg"), "--strategies", "stAinf,stBinf"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("escalates: true"));

    let out = run(&["escalate", &corpus("escalation.cg"), "--strategies", "stAinf,stBstop"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("escalates: false"));
    assert!(text.contains("A: 1, B: 0"));
}

#[test]
fn zero_one_conjecture_is_consistent() {
    let out = run(&["--seed", "7", "zero-one", "conjecture", "--max-prefix", "3", "--max-cycle", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("consistent-at-bound"));
    assert!(text.contains("profiles checked"));
}

#[test]
fn zero_one_truncate_lists_equilibria() {
    let out = run(&["zero-one", "truncate", "--family", "F", "--blocks", "1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("backward-induction equilibria: 2"));
    assert!(text.contains("game F1"));

    let out = run(&["zero-one", "truncate", "--family", "k", "--blocks", "1"]);
    assert_eq!(code(&out), 0, "family letters are case-insensitive");
    assert!(stdout(&out).contains("backward-induction equilibria: 1"));
}

#[test]
fn unfold_marks_cut_points() {
    let out = run(&["unfold", &corpus("zero_one.cg"), "--name", "g01", "--depth", "2"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("<cut>"));
    assert!(text.contains("leaf{A: 0, B: 1}"));
}

#[test]
fn json_mode_agrees_with_text_verdicts() {
    let text_out = run(&["check", "spe", &corpus("s10a.cg"), "--name", "s10a"]);
    let json_out = run(&[
        "check",
        "spe",
        &corpus("s10a.cg"),
        "--name",
        "s10a",
        "--format",
        "json",
    ]);
    assert_eq!(code(&text_out), code(&json_out));
    let doc: serde_json::Value =
        serde_json::from_str(&stdout(&json_out)).expect("valid json");
    assert_eq!(doc["schema"], "coindgame/1");
    assert_eq!(doc["holds"], true);
    assert_eq!(doc["name"], "s10a");

    let json_out = run(&[
        "zero-one",
        "conjecture",
        "--max-prefix",
        "2",
        "--max-cycle",
        "2",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value =
        serde_json::from_str(&stdout(&json_out)).expect("valid json");
    assert_eq!(doc["verdict"], "consistent-at-bound");
    assert_eq!(doc["profiles_checked"], 16);

    let json_out = run(&[
        "eval",
        "payoff",
        &corpus("escalation.cg"),
        "--name",
        "sAinf",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value =
        serde_json::from_str(&stdout(&json_out)).expect("valid json");
    assert_eq!(doc["defined"], false);
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let out = run(&["check", "spe", "/nonexistent/file.cg", "--name", "x"]);
    assert_eq!(code(&out), 2);

    let out = run(&["check", "spe", &corpus("s10a.cg"), "--name", "nosuch"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no declaration named"));

    // Wrong kind for the command.
    let out = run(&["check", "spe", &corpus("s10a.cg"), "--name", "g01"]);
    assert_eq!(code(&out), 2);

    // Clap usage error.
    let out = run(&["check", "bogus-property", &corpus("s10a.cg"), "--name", "s10a"]);
    assert_eq!(code(&out), 2);

    // Malformed file.
    let dir = tempfile::tempdir().expect("tempdir");
    let bad = dir.path().join("bad.cg");
    std::fs::write(&bad, "agents A\ngame g = x: A(d -> ").expect("written");
    let out = run(&["check", "spe", bad.to_str().expect("utf-8"), "--name", "g"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("syntax error"));
}

#[test]
fn ambiguous_names_are_rejected() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("dup.cg");
    std::fs::write(
        &path,
        "agents A\ngame twin = x: leaf{A:0}\nprofile twin = y: leaf{A:1}",
    )
    .expect("written");
    let out = run(&["eval", "payoff", path.to_str().expect("utf-8"), "--name", "twin"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("more than once"));
}
