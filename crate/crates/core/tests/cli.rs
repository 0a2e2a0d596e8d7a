use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gfnco::checkpoint::Checkpoint;
use gfnco::harness::{read_dataset, read_log, EvalReport, LOG_HEADER};

fn gfnco(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfnco")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gfnco(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Nonzero exit with exactly one line on stderr.
fn fails(dir: &Path, args: &[&str]) -> String {
    let out = gfnco(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "multi-line diagnostic: {err:?}");
    err
}

const TINY: &[&str] = &["--hidden", "8", "--layers", "2", "--no-wall-time"];

#[test]
fn gen_writes_requested_count_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["gen", "--family", "ba", "--n", "200..300", "--m", "4", "--count", "100", "--seed", "7", "--out", "a.jsonl"];
    let msg = ok(d, &args);
    assert!(msg.contains("100") && msg.contains("seed 7"), "{msg}");
    let mut again = args;
    again[again.len() - 1] = "b.jsonl";
    ok(d, &again);
    let a = fs::read(d.join("a.jsonl")).unwrap();
    assert_eq!(a, fs::read(d.join("b.jsonl")).unwrap());
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 100);
    let graphs = read_dataset(d.join("a.jsonl")).unwrap();
    assert!(graphs.iter().all(|g| (200..=300).contains(&g.num_vertices())));

    ok(d, &["gen", "--family", "rb", "--groups", "3..4", "--group-size", "2..3", "--rounds", "5", "--count", "3", "--out", "rb.jsonl"]);
    assert_eq!(read_dataset(d.join("rb.jsonl")).unwrap().len(), 3);
}

#[test]
fn gen_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let err = fails(dir.path(), &["gen", "--family", "er", "--n", "10", "--p", "1.2", "--count", "3", "--out", "x"]);
    assert!(err.contains("1.2"), "{err}");
    fails(dir.path(), &["gen", "--family", "er", "--n", "10", "--count", "3", "--out", "x"]);
    fails(dir.path(), &["gen", "--family", "tree", "--n", "10", "--count", "3", "--out", "x"]);
    fails(dir.path(), &["gen", "--family", "ba", "--n", "ten", "--m", "2", "--count", "3", "--out", "x"]);
    assert!(!dir.path().join("x").exists());
}

#[test]
fn train_writes_checkpoint_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--family", "er", "--n", "6..9", "--p", "0.4", "--count", "6", "--seed", "1", "--out", "d.jsonl"]);
    let mut args = vec!["train", "--data", "d.jsonl", "--task", "mis", "--updates", "10", "--out", "ck.json", "--log", "log.csv"];
    args.extend(TINY);
    let msg = ok(d, &args);
    assert!(msg.contains("final mean objective"), "{msg}");
    let text = fs::read_to_string(d.join("log.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), LOG_HEADER);
    assert_eq!(read_log(d.join("log.csv")).unwrap().len(), 10);

    let ck = Checkpoint::load(d.join("ck.json")).unwrap();
    let model = ck.model().unwrap();
    let resaved = Checkpoint::from_model(&model, ck.task, ck.beta, ck.optimizer.as_ref());
    assert_eq!(resaved, ck);
    assert_eq!(ck.config.hidden_dim, 8);
}

#[test]
fn flow_and_trajectory_variants_give_comparable_logs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--family", "er", "--n", "6..9", "--p", "0.4", "--count", "6", "--seed", "2", "--out", "d.jsonl"]);
    for (loss, mode, name) in [("fl", "--transition", "fl"), ("db", "--trajectory", "db")] {
        let log = format!("{name}.csv");
        let ck = format!("{name}.json");
        let mut args = vec!["train", "--data", "d.jsonl", "--task", "mis", "--seed", "3", "--updates", "6", "--loss", loss, mode];
        args.extend(["--out", &ck, "--log", &log]);
        args.extend(TINY);
        ok(d, &args);
    }
    let fl = read_log(d.join("fl.csv")).unwrap();
    let db = read_log(d.join("db.csv")).unwrap();
    assert_eq!(fl.len(), db.len());
    assert_eq!(fs::read_to_string(d.join("fl.csv")).unwrap().lines().next(), fs::read_to_string(d.join("db.csv")).unwrap().lines().next());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--family", "er", "--n", "5..7", "--p", "0.5", "--count", "4", "--out", "d.jsonl"]);
    fs::write(d.join("run.cfg"), "# tiny run\ntask = mds\nbeta = 3\nupdates = 4\nhidden = 8\nlayers = 2\nwall-time = false\n").unwrap();
    ok(d, &["train", "--config", "run.cfg", "--data", "d.jsonl", "--beta", "5", "--anneal-frac", "0", "--out", "ck.json", "--log", "log.csv"]);
    let log = read_log(d.join("log.csv")).unwrap();
    assert_eq!(log.len(), 4);
    assert!(log.iter().all(|r| r.beta == 5.0 && r.wall_ms == 0));
    let ck = Checkpoint::load(d.join("ck.json")).unwrap();
    assert_eq!(ck.task, Some(gfnco::Task::Mds));

    fs::write(d.join("bad.cfg"), "beta: 3\n").unwrap();
    fails(d, &["train", "--config", "bad.cfg", "--data", "d.jsonl", "--task", "mis", "--out", "x.json"]);
}

#[test]
fn train_errors_are_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let err = fails(d, &["train", "--data", "missing.jsonl", "--task", "mis", "--out", "ck.json"]);
    assert!(err.contains("missing.jsonl"), "{err}");
    fs::write(d.join("edgeless.jsonl"), "{\"id\":\"e\",\"n\":3,\"edges\":[]}\n").unwrap();
    fails(d, &["train", "--data", "edgeless.jsonl", "--task", "mds", "--out", "ck.json"]);
    fs::write(d.join("empty.jsonl"), "").unwrap();
    fails(d, &["train", "--data", "empty.jsonl", "--task", "mis", "--out", "ck.json"]);
    fails(d, &["train", "--data", "edgeless.jsonl", "--task", "tsp", "--out", "ck.json"]);
    fails(d, &["train", "--data", "edgeless.jsonl", "--task", "mis", "--transition", "--trajectory", "--out", "ck.json"]);
    fails(d, &["frobnicate"]);
}

#[test]
fn eval_reports_drop_against_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--family", "er", "--n", "12..20", "--p", "0.3", "--count", "5", "--seed", "4", "--out", "test.jsonl"]);
    let mut args = vec!["train", "--data", "test.jsonl", "--task", "mis", "--updates", "4", "--out", "ck.json"];
    args.extend(TINY);
    ok(d, &args);
    let summary = ok(d, &["eval", "--data", "test.jsonl", "--checkpoint", "ck.json", "--k", "4", "--greedy", "--oracle", "--out", "ev.csv"]);
    assert!(summary.contains("drop"), "{summary}");
    let text = fs::read_to_string(d.join("ev.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "graph_id,method,objective,wall_ms");
    let rows = EvalReport::rows_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().filter(|r| r.method == "oracle").all(|r| r.objective.is_some()));

    let err = fails(d, &["eval", "--data", "test.jsonl", "--checkpoint", "ck.json", "--task", "mc"]);
    assert!(err.contains("mis"), "{err}");
    fs::write(d.join("empty.jsonl"), "").unwrap();
    fails(d, &["eval", "--data", "empty.jsonl", "--checkpoint", "ck.json"]);
}

#[test]
fn oracle_emits_json_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("g.jsonl"), "{\"id\":\"star\",\"n\":4,\"edges\":[[0,1],[0,2],[0,3]]}\n{\"id\":7,\"n\":3,\"edges\":[[0,1],[1,2]]}\n").unwrap();
    let out = ok(d, &["oracle", "--data", "g.jsonl", "--task", "mis"]);
    let rows: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows[0]["optimum"], 3.0);
    assert_eq!(rows[0]["optimizer_count"], 1);
    assert_eq!(rows[0]["greedy"], 3.0);
    assert_eq!(rows[1]["graph_id"], "7");
    assert_eq!(rows[1]["optimum"], 2.0);
}

#[test]
fn distcheck_fresh_model_on_p3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("p3.jsonl"), "{\"id\":\"p3\",\"n\":3,\"edges\":[[0,1],[1,2]]}\n").unwrap();
    let mut args = vec!["train", "--data", "p3.jsonl", "--task", "mis", "--updates", "0", "--out", "ck.json"];
    args.extend(TINY);
    ok(d, &args);
    let out = ok(d, &["distcheck", "--checkpoint", "ck.json", "--data", "p3.jsonl", "--beta", "0"]);
    assert!(out.contains("tv=0.166667"), "{out}");

    fs::write(d.join("big.jsonl"), "{\"id\":\"big\",\"n\":11,\"edges\":[]}\n").unwrap();
    let err = fails(d, &["distcheck", "--checkpoint", "ck.json", "--data", "big.jsonl", "--beta", "1"]);
    assert!(err.contains("11"), "{err}");
}
