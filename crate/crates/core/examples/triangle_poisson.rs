//! Triangle counts at m = n³, p = c/n²: Po((c³+c⁶)/6) for the intersection graph
//! and Po(c⁶/6) for G(n, p̂).

use rigsim::harness::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() -> rigsim::Result<()> {
    for c in [0.8, 1.0, 1.2] {
        let cfg = ExperimentConfig {
            n: Some(150),
            c: Some(c),
            reps: Some(4000),
            seed: 2,
            ..ExperimentConfig::new(ExperimentKind::TrianglePoisson)
        };
        let r = run_experiment(&cfg)?;
        for row in &r.rows {
            println!(
                "c={c} {:>3}: target {:.4} exact {:.4} sample {:.4} gof p {:.3}",
                row[0].as_str().unwrap(),
                row[1].as_f64().unwrap(),
                row[2].as_f64().unwrap(),
                row[4].as_f64().unwrap(),
                row[7].as_f64().unwrap()
            );
        }
    }
    Ok(())
}
