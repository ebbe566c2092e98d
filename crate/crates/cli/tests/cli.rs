use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const LOG: &str = "\
reviewer,product,value,date
c1,t1,5,2012-03-03
c2,t1,5,2012-03-03
c3,t1,5,2012-03-04
c1,t2,5,2012-03-03
c2,t2,5,2012-03-04
c3,t2,5,2012-03-03
c1,t3,5,2012-03-03
c2,t3,5,2012-03-03
c3,t3,5,2012-03-04
h1,t1,2,2012-01-10
h2,t2,3,2012-06-01
h1,t4,4,2012-02-11
h2,t4,4,2012-09-20
";

fn bcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcs"))
        .args(args)
        .env_remove("BCS_DELTA")
        .env_remove("BCS_MAX_TW")
        .env_remove("BCS_THREADS")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Ingests the sample log into `dir` and returns the snapshot path.
fn ingested(dir: &Path) -> PathBuf {
    let log = dir.join("log.csv");
    std::fs::write(&log, LOG).unwrap();
    let graph = dir.join("graph.jsonl");
    let out = bcs(&[
        "ingest",
        "--input",
        s(&log),
        "--min-reviewer",
        "1",
        "--min-product",
        "1",
        "--out",
        s(&graph),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    graph
}

#[test]
fn help_shows_defaults() {
    let out = bcs(&["detect", "--help"]);
    let text = stdout(&out);
    assert_eq!(code(&out), 0);
    for needle in [
        "[default: 0.4]",
        "[default: 0.25,0.25,0.25,0.25]",
        "[default: 30]",
        "[default: 2]",
        "[default: 3]",
    ] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn detect_echoes_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ingested(dir.path());
    let out = bcs(&["detect", "--graph", s(&graph)]);
    assert_eq!(code(&out), 0);
    let result: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let config = &result["config"];
    assert_eq!(config["delta"], 0.4);
    assert_eq!(config["min_r"], 2);
    assert_eq!(config["min_p"], 3);
    assert_eq!(result["collusive"].as_array().unwrap().len(), 1);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ingested(dir.path());
    let a = bcs(&["detect", "--graph", s(&graph), "--threads", "1"]);
    let b = bcs(&["detect", "--graph", s(&graph), "--threads", "4"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn query_over_a_saved_result() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ingested(dir.path());
    let result = dir.path().join("result.json");
    let out = bcs(&[
        "detect",
        "--graph",
        s(&graph),
        "--out",
        s(&result),
        "--report",
        "table",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("dangerous"));
    let out = bcs(&[
        "query",
        "--graph",
        s(&graph),
        "--result",
        s(&result),
        "-e",
        "getbicliques.reviewers() filter{ on('t2'); };",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "c1\nc2\nc3\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ingested(dir.path());
    let g = s(&graph);
    assert_eq!(
        code(&bcs(&["query", "--graph", g, "-e", "getbicliques("])),
        2
    );
    assert_eq!(
        code(&bcs(&[
            "query",
            "--graph",
            g,
            "-e",
            "getbicliques(0.5,0.5,0.5,0.5);"
        ])),
        3
    );
    assert_eq!(
        code(&bcs(&["detect", "--graph", g, "--weights", "1,1,1,1"])),
        3
    );
    assert_eq!(code(&bcs(&["detect", "--graph", g, "--delta", "2"])), 3);
    assert_eq!(
        code(&bcs(&["detect", "--graph", s(&dir.path().join("missing"))])),
        1
    );
    assert_eq!(code(&bcs(&["frobnicate"])), 2);
    let strict = bcs(&[
        "query",
        "--graph",
        g,
        "--strict",
        "-e",
        "getbicliques() filter{ on('zz'); };",
    ]);
    assert_eq!(code(&strict), 3);
}

#[test]
fn environment_sets_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ingested(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_bcs"))
        .args(["detect", "--graph", s(&graph)])
        .env("BCS_DELTA", "0.9")
        .output()
        .unwrap();
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["config"]["delta"], 0.9);
}

#[test]
fn synth_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth.csv");
    let truth = dir.path().join("truth.json");
    let out = bcs(&[
        "synth",
        "generate",
        "--honest",
        "60",
        "--products",
        "20",
        "--out",
        s(&data),
        "--truth",
        s(&truth),
    ]);
    assert_eq!(code(&out), 0);
    let out = bcs(&[
        "synth",
        "eval",
        "--data",
        s(&data),
        "--truth",
        s(&truth),
        "--deltas",
        "0.4,0.8",
    ]);
    assert_eq!(code(&out), 0);
    let csv = stdout(&out);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3, "{csv}");
    assert!(lines[1].starts_with("0.4,"));
}
