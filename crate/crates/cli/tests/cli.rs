use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn ptr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn revise_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stock");
    let o = ptr(&[
        "revise",
        "--theory",
        &data("stock.theory"),
        "--weights",
        &data("stock.weights"),
        "--exemplars",
        &data("stock.exemplars"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let theory = std::fs::read_to_string(dir.path().join("stock.theory")).unwrap();
    ptr_core::theory::parse_theory(&theory).unwrap();
    let log = std::fs::read_to_string(dir.path().join("stock.log.jsonl")).unwrap();
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("entry").is_some());
    }
    let weights = std::fs::read_to_string(dir.path().join("stock.weights")).unwrap();
    assert!(weights.lines().all(|l| l.starts_with("edge ")));
}

#[test]
fn revise_exits_2_when_not_all_correct() {
    let dir = tempfile::tempdir().unwrap();
    let z = dir.path().join("z");
    // all weights 1: nothing can move, so the run stops unresolved
    std::fs::write(&z, "a | r=0\n").unwrap();
    let t = dir.path().join("t");
    std::fs::write(&t, "r <- a.\n").unwrap();
    let o = ptr(&[
        "revise",
        "--theory",
        t.to_str().unwrap(),
        "--crisp",
        "--exemplars",
        z.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "--max-cycles",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flow_prints_every_edge() {
    let o = ptr(&[
        "flow",
        "--theory",
        &data("stock.theory"),
        "--weights",
        &data("stock.weights"),
        "--exemplar",
        "unsafe-packaging new-market | buy-stock=1",
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 1 + 14);
    let sf = s.lines().find(|l| l.starts_with("C4/superior-flavor")).unwrap();
    let p_new: f64 = sf.split('\t').nth(4).unwrap().parse().unwrap();
    assert!((p_new - 0.1455).abs() < 5e-4);
}

#[test]
fn oracles_print_probabilities() {
    let w = data("stock.weights");
    let t = data("stock.theory");
    let o = ptr(&["oracle", "unused", "--theory", &t, "--weights", &w, "--example", "new-market", "--edge", "C4/superior-flavor"]);
    assert_eq!(stdout(&o).trim(), "0.200000000000");
    let o = ptr(&["oracle", "cond", "--theory", &t, "--weights", &w, "--exemplar", "new-market | buy-stock=1", "--edge", "C4/new-market"]);
    assert!(o.status.success());
    let p: f64 = stdout(&o).trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn synth_emits_csv() {
    let o = ptr(&["synth", "--errors", "3", "--train", "10,20", "--test", "10", "--partitions", "1", "--trials", "2", "--seed", "3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], ptr_core::harness::CSV_HEADER);
    assert_eq!(lines.len(), 1 + 4);
    assert_eq!(s, stdout(&ptr(&["synth", "--errors", "3", "--train", "10,20", "--test", "10", "--partitions", "1", "--trials", "2", "--seed", "3"])));
}

#[test]
fn classify_weights_relevance_star() {
    let t = data("stock.theory");
    let z = data("stock.exemplars");
    let o = ptr(&["classify", "--theory", &t, "--exemplars", &z]);
    assert!(stdout(&o).ends_with("4/6 misclassified\n"));
    let o = ptr(&["weights", "--theory", &t]);
    assert_eq!(stdout(&o).lines().count(), 14);
    let o = ptr(&["relevance", "--theory", &t, "--weights", &data("stock.weights"), "--exemplars", &z, "--edge", "C4/superior-flavor"]);
    assert!(stdout(&o).contains("needed: []"));
    let o = ptr(&["star", "--theory", &t, "--examples", &z, "--percent", "50"]);
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with('1')).count(), 3);
}

#[test]
fn errors_exit_nonzero() {
    let o = ptr(&["classify", "--theory", "/nonexistent", "--exemplars", "/nonexistent"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let o = ptr(&["flow", "--theory", &data("stock.theory"), "--exemplar", "a | r="]);
    assert_eq!(o.status.code(), Some(1));
}
