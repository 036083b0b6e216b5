//! Exact total variation between G(n, m, p) and G(n, p̂) on tiny vertex sets.

use rigsim::oracle::{decode_pmf, er_exact_pmf, rig_exact_pmf, stratified_exact_pmf, tv_exact};
use rigsim::thresholds::{edge_prob_hat, ModelParams};

fn main() -> rigsim::Result<()> {
    let n = 4;
    println!(
        "{:>8} {:>12} {:>12} {:>14} {:>14}",
        "m", "p", "p_hat", "tv", "|mobius-strat|"
    );
    for m in [10u64, 100, 1_000, 10_000, 100_000] {
        let p = 0.1 / (n as f64 * (m as f64).cbrt());
        let p_hat = edge_prob_hat(&ModelParams::new(n as u64, m, p)?);
        let rig = rig_exact_pmf(n, m, p)?;
        let tv = tv_exact(&rig, &er_exact_pmf(n, p_hat)?)?;
        // the stratified oracle enumerates size compositions of m
        let check = match stratified_exact_pmf(n, m, p, None) {
            Ok(strat) => format!("{:.2e}", tv_exact(&rig, &strat)?),
            Err(_) => "-".into(),
        };
        println!("{m:>8} {p:>12.4e} {p_hat:>12.4e} {tv:>14.6e} {check:>14}");
    }

    // the most likely graphs at one point
    let rig = rig_exact_pmf(n, 100, 0.05)?;
    let mut top = decode_pmf(n, &rig)?;
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (g, w) in top.iter().take(4) {
        println!("{w:.6}  {:?}", g.edges());
    }
    Ok(())
}
