use rigsim::harness::{
    emit_report, render_report, run_experiment, ExperimentConfig, ExperimentKind, Format,
};

fn squeeze_cfg() -> ExperimentConfig {
    ExperimentConfig {
        n: Some(40),
        m: Some(40_000),
        reps: Some(200),
        seed: 5,
        ..ExperimentConfig::new(ExperimentKind::Squeeze)
    }
}

#[test]
fn same_config_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for format in [Format::Csv, Format::Json] {
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        emit_report(&run_experiment(&squeeze_cfg()).unwrap(), format, &a).unwrap();
        emit_report(&run_experiment(&squeeze_cfg()).unwrap(), format, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}

#[test]
fn csv_embeds_config_and_seed() {
    let text = render_report(&run_experiment(&squeeze_cfg()).unwrap(), Format::Csv).unwrap();
    assert!(text.lines().any(|l| l == "# seed: 5"));
    assert!(text
        .lines()
        .any(|l| l.starts_with("# config: {\"kind\":\"squeeze\"")));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    for col in [
        "p",
        "p_minus",
        "p_plus",
        "prob_lo",
        "prob_lo_ci_lo",
        "prob_lo_ci_hi",
        "prob_mid",
        "prob_hi",
    ] {
        assert!(header.iter().any(|h| h == col), "{col}");
    }
    assert_eq!(rdr.records().count(), 7);
}

#[test]
fn json_is_the_full_report() {
    let report = run_experiment(&squeeze_cfg()).unwrap();
    let text = render_report(&report, Format::Json).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["rows"].as_array().unwrap().len(), report.rows.len());
    assert_eq!(
        v["verdicts"].as_array().unwrap().len(),
        report.verdicts.len()
    );
}

#[test]
fn unwritable_path_is_an_error() {
    let report = run_experiment(&ExperimentConfig::new(ExperimentKind::Lemma8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_report(&report, Format::Csv, &dir.path().join("missing/out.csv")).is_err());
}

#[test]
fn regime_warnings_reach_the_report() {
    let report = run_experiment(&ExperimentConfig::new(ExperimentKind::TvConvergence)).unwrap();
    assert!(report
        .warnings
        .iter()
        .any(|w| w.contains("Θ(1/(n·sqrt m))")));
}
