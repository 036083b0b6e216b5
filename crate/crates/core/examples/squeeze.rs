//! Connectivity of G(n, p_-) ≤ RIG ≤ G(n, p_+) across the threshold window.

use rigsim::harness::{render_report, run_experiment, ExperimentConfig, ExperimentKind, Format};
use rigsim::thresholds::Mode;

fn main() -> rigsim::Result<()> {
    let cfg = ExperimentConfig {
        n: Some(300),
        alpha: Some(4.5),
        reps: Some(500),
        mode: Some(Mode::Thm4),
        seed: 1,
        ..ExperimentConfig::new(ExperimentKind::Squeeze)
    };
    let report = run_experiment(&cfg)?;
    print!("{}", render_report(&report, Format::Csv)?);
    Ok(())
}
