//! End-to-end runs of the binary against the fixture files; output is pinned
//! byte for byte where the format promises determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monoid-logic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn eval_prints_truth_values() {
    let out = run(&["eval", "--formula", &fixture("exists.lq"), "--word", "0/0/1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "true\n");
    let out = run(&["eval", "--formula", &fixture("exists.lq"), "--word", "0/0"]);
    assert_eq!(stdout(&out), "false\n");
    let out = run(&["eval", "--formula", &fixture("exists.lq"), "--word", "-"]);
    assert_eq!(stdout(&out), "false\n");
}

#[test]
fn check_equiv_reports_both_outcomes() {
    let out = run(&[
        "check-equiv",
        "--a",
        &fixture("exists.lq"),
        "--b",
        &fixture("exists_plain.lq"),
        "--width",
        "1",
        "--maxlen",
        "5",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "EQUIVALENT (n<=5)\n");
    let out = run(&[
        "check-equiv",
        "--a",
        &fixture("exists_plain.lq"),
        "--b",
        &fixture("forall_plain.lq"),
        "--width",
        "1",
        "--maxlen",
        "5",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "NOT EQUIVALENT (counterexample: -)\n");
}

#[test]
fn lang_lists_words_in_shortlex_order() {
    let out = run(&[
        "lang",
        "--formula",
        &fixture("parity_mq.lq"),
        "--width",
        "1",
        "--maxlen",
        "3",
    ]);
    assert_eq!(
        stdout(&out),
        "-\n0\n0/0\n1/1\n0/0/0\n0/1/1\n1/0/1\n1/1/0\n"
    );
}

#[test]
fn synmon_prints_table_accept_set_and_letters() {
    let out = run(&["synmon", "--dfa", &fixture("parity.dfa")]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "monoid syn_parity\nelements: - 1\nidentity: -\n- 1\n1 -\naccept: -\n0 -> -\n1 -> 1\n"
    );
}

#[test]
fn syntyped_prints_base_and_typed_monoid() {
    let out = run(&["syntyped", "--dfa", &fixture("contains1.dfa")]);
    let text = stdout(&out);
    assert!(text.contains("monoid syn_contains1"));
    assert!(text.contains("typed syn_typed_contains1"));
    assert!(text.contains("units: - 1"));
}

#[test]
fn rewrite_unarize_keeps_the_language() {
    let out = run(&[
        "rewrite",
        "--formula",
        &fixture("pairs_dim2.lq"),
        "--pass",
        "unarize",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("pass unarize"));
    // The rewritten formula is the last line; pipe it back through eval.
    let rewritten = text.lines().last().unwrap();
    let dir = std::env::temp_dir().join("monoid-logic-cli-test-unarize.lq");
    std::fs::write(&dir, rewritten).unwrap();
    let out = run(&[
        "check-equiv",
        "--a",
        &fixture("pairs_dim2.lq"),
        "--b",
        dir.to_str().unwrap(),
        "--width",
        "1",
        "--maxlen",
        "5",
    ]);
    assert_eq!(stdout(&out), "EQUIVALENT (n<=5)\n");
}

#[test]
fn rewrite_enumerator_uses_forprog() {
    let out = run(&[
        "rewrite",
        "--formula",
        &fixture("colmajor_fo.lq"),
        "--pass",
        "enumerator",
        "--forprog",
        &fixture("colmajor.fp"),
        "--maxlen",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("block-onehot"));
}

#[test]
fn blockprod_reports_carrier() {
    let out = run(&[
        "blockprod",
        "--left",
        &fixture("u1t.tm"),
        "--right",
        &fixture("u1t.tm"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("carrier:"));
    assert!(text.contains("generators: 4"));
}

#[test]
fn recognizes_finite_and_symbolic() {
    let out = run(&[
        "recognizes",
        "--typed",
        &fixture("u1t.tm"),
        "--dfa",
        &fixture("contains1.dfa"),
    ]);
    assert_eq!(stdout(&out), "true\n");
    let out = run(&[
        "recognizes",
        "--typed",
        &fixture("zplus.tm"),
        "--dfa",
        &fixture("maj9.dfa"),
        "--maxlen",
        "9",
    ]);
    assert_eq!(stdout(&out), "true (n<=9)\n");
}

#[test]
fn forprog_run_and_check() {
    let out = run(&["forprog-run", "--forprog", &fixture("colmajor.fp"), "--n", "2"]);
    assert_eq!(stdout(&out), "(1 1)\n(2 1)\n(1 2)\n(2 2)\n");
    let out = run(&["forprog-check", "--forprog", &fixture("colmajor.fp"), "--n", "3"]);
    assert_eq!(stdout(&out), "true\n");
}

#[test]
fn validate_identifies_file_kinds() {
    for (file, needle) in [
        ("parity.dfa", "ok: dfa"),
        ("exists.lq", "ok: formula"),
        ("u1t.tm", "ok: typed"),
        ("colmajor.fp", "ok: for-program"),
    ] {
        let out = run(&["validate", &fixture(file)]);
        assert!(out.status.success());
        assert!(stdout(&out).contains(needle), "{file}");
    }
}

#[test]
fn domain_errors_exit_one_usage_errors_exit_two() {
    let out = run(&["eval", "--formula", "/does/not/exist.lq", "--word", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["eval", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["rewrite", "--formula", &fixture("exists.lq"), "--pass", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn threads_env_does_not_change_output() {
    let sequential = run(&[
        "lang",
        "--formula",
        &fixture("parity_mq.lq"),
        "--width",
        "1",
        "--maxlen",
        "6",
    ]);
    let threaded = Command::new(env!("CARGO_BIN_EXE_monoid-logic"))
        .env("MONOIDLOGIC_THREADS", "4")
        .args([
            "lang",
            "--formula",
            &fixture("parity_mq.lq"),
            "--width",
            "1",
            "--maxlen",
            "6",
        ])
        .output()
        .unwrap();
    assert_eq!(stdout(&sequential), stdout(&threaded));
}
