//! Derived edge probabilities and sandwich bounds for every mode.

use rigsim::thresholds::{amplifier_with_branch, p_bounds, star_constant_c, Mode, ModelParams};

fn main() -> rigsim::Result<()> {
    let n = 1000;
    for (alpha, p) in [(4.5, 3e-8), (3.5, 1e-6), (3.0, 1e-6)] {
        let params = ModelParams::with_alpha(n, alpha, p)?;
        for mode in [Mode::Lemma9, Mode::Thm4, Mode::Thm313] {
            let t = p_bounds(&params, mode)?;
            println!(
                "alpha={alpha} p={p:e} {mode:>7}: p_hat={:.4e} p-={:.4e} p+={:.4e} [{}]",
                t.p_hat, t.p_minus, t.p_plus, t.regime
            );
            for w in &t.warnings {
                println!("    {w}");
            }
        }
    }

    println!();
    for q in [1e-4, 1e-3, 1e-2, 0.05, 0.2] {
        let (a, branch) = amplifier_with_branch(n, q)?;
        println!(
            "a_n({q:e}) = {a:.4} via {branch}; C = {:.4}",
            star_constant_c(n, q)?
        );
    }
    Ok(())
}
