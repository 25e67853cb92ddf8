//! End-to-end checks of the command-line surface: subcommands, file
//! formats, exit codes, and whole-pipeline determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dynblock")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env_remove("DYNBLOCK_SEED")
        .output()
        .expect("binary runs")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dynblock-cli-{}-{name}", std::process::id()));
    fs::remove_dir_all(&dir).ok();
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn simulate_study(dir: &Path, seed: &str) {
    let out = run_in(
        dir,
        &[
            "simulate", "--nodes", "30", "--times", "4", "--groups", "3", "--pi", "0.9",
            "--theta0", "0.9", "--eps0", "0.1", "--seed", seed, "--out", "net.csv", "--truth",
            "truth.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_writes_deterministic_files() {
    let dir = tmp_dir("sim-det");
    simulate_study(&dir, "7");
    let net1 = fs::read(dir.join("net.csv")).unwrap();
    let truth1 = fs::read(dir.join("truth.csv")).unwrap();
    simulate_study(&dir, "7");
    assert_eq!(net1, fs::read(dir.join("net.csv")).unwrap());
    assert_eq!(truth1, fs::read(dir.join("truth.csv")).unwrap());
    assert!(String::from_utf8(net1).unwrap().starts_with("t,i,j\n"));
}

#[test]
fn simulate_single_group_rules() {
    let dir = tmp_dir("sim-single");
    let ok = run_in(
        &dir,
        &[
            "simulate", "--nodes", "6", "--times", "2", "--groups", "1", "--pi", "1.0",
            "--theta0", "0.4", "--eps0", "0.0", "--seed", "1", "--out", "n.csv", "--truth",
            "t.csv",
        ],
    );
    assert!(ok.status.success());
    let bad = run_in(
        &dir,
        &[
            "simulate", "--nodes", "6", "--times", "2", "--groups", "1", "--pi", "0.5",
            "--theta0", "0.4", "--eps0", "0.0", "--seed", "1", "--out", "n2.csv", "--truth",
            "t2.csv",
        ],
    );
    assert_eq!(bad.status.code(), Some(1));
    assert!(!dir.join("n2.csv").exists(), "no partial outputs on error");
}

#[test]
fn fit_score_summarize_round_trip() {
    let dir = tmp_dir("fit");
    simulate_study(&dir, "7");
    let out = run_in(
        &dir,
        &[
            "fit", "--input", "net.csv", "--init", "all", "--seed", "1", "--alloc-out",
            "alloc.csv", "--summary-out", "summary.json", "--log-out", "runs.json",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Score against truth: clean study-size instance, expect full recovery.
    let score = run_in(&dir, &["score", "--pred", "alloc.csv", "--truth", "truth.csv"]);
    assert!(score.status.success());
    let line = String::from_utf8(score.stdout).unwrap();
    assert_eq!(line.trim(), "1.000000");

    // Self-score is exactly one.
    let self_score = run_in(&dir, &["score", "--pred", "alloc.csv", "--truth", "alloc.csv"]);
    assert_eq!(String::from_utf8(self_score.stdout).unwrap().trim(), "1.000000");

    // Summary JSON parses and matches the run log's best objective.
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    let log: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("runs.json")).unwrap()).unwrap();
    assert_eq!(log["runs"].as_array().unwrap().len(), 4);
    let best = log["best"]["icl_total"].as_f64().unwrap();
    let total = summary["icl"]["total"].as_f64().unwrap();
    assert!((best - total).abs() < 1e-6, "{best} vs {total}");

    // Summarize recomputes the same objective from the written files.
    let summ = run_in(
        &dir,
        &[
            "summarize", "--input", "net.csv", "--partition", "alloc.csv", "--summary-out",
            "s2.json", "--kt-out", "kt.csv",
        ],
    );
    assert!(summ.status.success());
    let s2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("s2.json")).unwrap()).unwrap();
    assert!((s2["icl"]["total"].as_f64().unwrap() - total).abs() < 1e-8);
    let kt = fs::read_to_string(dir.join("kt.csv")).unwrap();
    assert!(kt.starts_with("t,k\n"));
    assert_eq!(kt.lines().count(), 5);
}

#[test]
fn end_to_end_determinism() {
    let a = tmp_dir("det-a");
    let b = tmp_dir("det-b");
    for dir in [&a, &b] {
        simulate_study(dir, "42");
        let out = run_in(
            dir,
            &[
                "fit", "--input", "net.csv", "--init", "all", "--seed", "3", "--alloc-out",
                "alloc.csv", "--summary-out", "summary.json",
            ],
        );
        assert!(out.status.success());
    }
    for file in ["net.csv", "truth.csv", "alloc.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "file {file} differs between identical runs"
        );
    }
}

#[test]
fn fit_runs_once_per_strategy_restart() {
    let dir = tmp_dir("restarts");
    simulate_study(&dir, "5");
    let out = run_in(
        &dir,
        &[
            "fit", "--input", "net.csv", "--init", "colbind", "--restarts", "3", "--seed", "2",
            "--alloc-out", "a.csv", "--summary-out", "s.json", "--log-out", "l.json",
        ],
    );
    assert!(out.status.success());
    let log: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("l.json")).unwrap()).unwrap();
    let runs = log["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    assert!(runs.iter().all(|r| r["strategy"] == "colbind"));
    let restarts: Vec<i64> = runs.iter().map(|r| r["restart"].as_i64().unwrap()).collect();
    assert_eq!(restarts, vec![0, 1, 2]);
}

#[test]
fn refit_from_written_allocations_never_loses() {
    let dir = tmp_dir("refit");
    simulate_study(&dir, "11");
    let out = run_in(
        &dir,
        &[
            "fit", "--input", "net.csv", "--init", "all", "--seed", "4", "--alloc-out",
            "alloc.csv", "--summary-out", "summary.json",
        ],
    );
    assert!(out.status.success());
    let stored: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    let stored_total = stored["icl"]["total"].as_f64().unwrap();

    let refit = run_in(
        &dir,
        &[
            "fit", "--input", "net.csv", "--init-partition", "alloc.csv", "--seed", "9",
            "--alloc-out", "alloc2.csv", "--summary-out", "summary2.json",
        ],
    );
    assert!(refit.status.success(), "{}", String::from_utf8_lossy(&refit.stderr));
    let again: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary2.json")).unwrap()).unwrap();
    let refit_total = again["icl"]["total"].as_f64().unwrap();
    assert!(
        refit_total >= stored_total - 1e-8,
        "refit lost objective: {refit_total} < {stored_total}"
    );
}

#[test]
fn score_worked_example() {
    let dir = tmp_dir("score");
    fs::write(dir.join("a.csv"), "t,node,group\n0,0,0\n0,1,0\n0,2,1\n0,3,1\n").unwrap();
    fs::write(dir.join("b.csv"), "t,node,group\n0,0,0\n0,1,0\n0,2,1\n0,3,2\n").unwrap();
    let out = run_in(&dir, &["score", "--pred", "a.csv", "--truth", "b.csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0.816497");

    fs::write(dir.join("c.csv"), "t,node,group\n0,0,0\n0,1,1\n0,2,0\n0,3,1\n").unwrap();
    let ind = run_in(&dir, &["score", "--pred", "a.csv", "--truth", "c.csv"]);
    assert_eq!(String::from_utf8(ind.stdout).unwrap().trim(), "0.000000");
}

#[test]
fn data_errors_exit_with_code_two() {
    let dir = tmp_dir("errors");
    fs::write(dir.join("bad.csv"), "t,i,j\n0,1,1\n").unwrap();
    let out = run_in(
        &dir,
        &[
            "fit", "--input", "bad.csv", "--alloc-out", "a.csv", "--summary-out", "s.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("self-edge"), "{err}");

    let missing = run_in(&dir, &["score", "--pred", "nope.csv", "--truth", "nope.csv"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn unknown_strategy_exits_with_code_one() {
    let dir = tmp_dir("strategy");
    simulate_study(&dir, "1");
    let out = run_in(
        &dir,
        &[
            "fit", "--input", "net.csv", "--init", "spectral", "--alloc-out", "a.csv",
            "--summary-out", "s.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn one_based_ingestion() {
    let dir = tmp_dir("one-based");
    fs::write(dir.join("net.csv"), "t,i,j\n1,1,2\n1,2,3\n2,1,3\n").unwrap();
    fs::write(
        dir.join("part.csv"),
        "t,node,group\n0,0,0\n0,1,0\n0,2,1\n1,0,0\n1,1,1\n1,2,1\n",
    )
    .unwrap();
    let out = run_in(
        &dir,
        &[
            "summarize", "--input", "net.csv", "--one-based", "--partition", "part.csv",
            "--summary-out", "s.json", "--kt-out", "kt.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let kt = fs::read_to_string(dir.join("kt.csv")).unwrap();
    assert_eq!(kt, "t,k\n0,2\n1,2\n");
}

#[test]
fn env_seed_fallback_and_flag_precedence() {
    let dir = tmp_dir("env-seed");
    let with_env = |seed_env: &str, out: &str, truth: &str, extra: &[&str]| {
        let mut args = vec![
            "simulate", "--nodes", "10", "--times", "2", "--groups", "2", "--pi", "0.9",
            "--theta0", "0.8", "--eps0", "0.1", "--out", out, "--truth", truth,
        ];
        args.extend_from_slice(extra);
        Command::new(bin())
            .args(&args)
            .current_dir(&dir)
            .env("DYNBLOCK_SEED", seed_env)
            .output()
            .unwrap()
    };
    assert!(with_env("9", "e1.csv", "t1.csv", &[]).status.success());
    assert!(with_env("9", "e2.csv", "t2.csv", &[]).status.success());
    assert_eq!(
        fs::read(dir.join("e1.csv")).unwrap(),
        fs::read(dir.join("e2.csv")).unwrap()
    );
    // Flag wins over the environment.
    assert!(with_env("9", "e3.csv", "t3.csv", &["--seed", "123"]).status.success());
    let flag_run = fs::read(dir.join("e3.csv")).unwrap();
    let out = run_in(
        &dir,
        &[
            "simulate", "--nodes", "10", "--times", "2", "--groups", "2", "--pi", "0.9",
            "--theta0", "0.8", "--eps0", "0.1", "--seed", "123", "--out", "e4.csv", "--truth",
            "t4.csv",
        ],
    );
    assert!(out.status.success());
    assert_eq!(flag_run, fs::read(dir.join("e4.csv")).unwrap());
}
