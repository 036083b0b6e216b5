//! The tail threshold a(λ, t, ε, n) and the exact Poisson tail it leaves.
//!
//! The target is P(Po(λ) ≥ a) = o(n^-t); the printed ratio is the exact tail
//! over n^-t.

use rigsim::oracle::dtv_binomial_poisson;
use rigsim::stats::{poisson_pmf, tail_threshold_a};

fn poisson_tail(lambda: f64, a: f64) -> f64 {
    let start = a.ceil().max(0.0) as u64;
    let mut sum = 0.0;
    let mut k = start;
    loop {
        let term = poisson_pmf(lambda, k);
        sum += term;
        if (k as f64 > lambda && term < sum * 1e-17) || k > start + 100_000 {
            return sum;
        }
        k += 1;
    }
}

fn main() -> rigsim::Result<()> {
    let (t, eps) = (2.0, 0.1);
    for n in [1_000u64, 1_000_000] {
        let ln_n = (n as f64).ln();
        for lambda in [0.1, 0.5 * ln_n, ln_n, 2.0 * ln_n, 100.0 * ln_n] {
            let (a, case) = tail_threshold_a(lambda, t, eps, n)?;
            let ratio = poisson_tail(lambda, a) / (n as f64).powf(-t);
            println!(
                "n={n:>8} lambda={lambda:>9.3} case={case:?} a={a:>10.3} tail/n^-t={ratio:.3e}"
            );
        }
    }
    for (n_hat, p_hat) in [(100u64, 0.01), (1000, 0.01), (10_000, 0.001)] {
        let (tv, bound) = dtv_binomial_poisson(n_hat, p_hat)?;
        println!("d_TV(Bin({n_hat}, {p_hat}), Po) = {tv:.4e} <= {bound:.4e}");
    }
    Ok(())
}
