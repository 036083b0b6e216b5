use std::process::{Command, Output};

fn rigsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigsim"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn sample_prints_canonical_graphs() {
    let out = rigsim(&[
        "sample", "--model", "er", "--n", "7", "--p", "0.3", "--seed", "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# model=er n=7 p=0.3 seed=4"));
    assert_eq!(rigsim::Graph::from_text(&text).unwrap().n(), 7);
    let again = rigsim(&[
        "sample", "--model", "er", "--n", "7", "--p", "0.3", "--seed", "4",
    ]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn tv_exact_prints_a_record() {
    let out = rigsim(&["tv-exact", "--n", "4", "--m", "1000", "--p", "0.0025"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["tv"].as_f64().unwrap() - 6.237797931384649e-05).abs() < 1e-12);
    assert!(v["warnings"].is_array());
}

#[test]
fn exit_codes() {
    assert_eq!(rigsim(&["lemma8"]).status.code(), Some(0));
    assert_eq!(rigsim(&["squeeze"]).status.code(), Some(2));
    assert_eq!(
        rigsim(&["lemma8", "--m-grid", "10000,1000"]).status.code(),
        Some(1)
    );
    assert_eq!(rigsim(&["nonsense"]).status.code(), Some(2));
    assert_eq!(
        rigsim(&["squeeze", "--n", "2000", "--alpha", "4", "--reps", "10000000"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "m_grid = [10000, 100000]\nseed = 3\n").unwrap();
    let out_path = dir.path().join("out.json");
    let out = rigsim(&[
        "lemma8",
        "--m-grid",
        "100000,10000",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(v["config"]["m_grid"], serde_json::json!([10000, 100000]));
    assert_eq!(v["config"]["seed"], 3);
}
