//! Exact binomial tails against the Chernoff bounds, worst slack per mean.

use rigsim::harness::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() -> rigsim::Result<()> {
    let r = run_experiment(&ExperimentConfig::new(ExperimentKind::ChernoffAudit))?;
    let mut worst: Vec<(f64, f64)> = Vec::new();
    for row in &r.rows {
        let mean = row[0].as_f64().unwrap();
        let ratio = row[4].as_f64().unwrap() / row[5].as_f64().unwrap();
        match worst.last_mut() {
            Some(w) if w.0 == mean => w.1 = w.1.max(ratio),
            _ => worst.push((mean, ratio)),
        }
    }
    for (mean, ratio) in worst {
        println!("mean {mean:>9.3}: max exact/bound = {ratio:.4}");
    }
    for v in &r.verdicts {
        println!(
            "{} {}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.rule,
            v.detail
        );
    }
    Ok(())
}
