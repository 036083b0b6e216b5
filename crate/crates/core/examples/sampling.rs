//! Draw one G(n, m, p) with both samplers and one matching G(n, p̂).
//!
//! cargo run --release --example sampling -- 200 1000000 0.0002

use rigsim::samplers::{sample_er, sample_rig_naive, sample_rig_stratified, RngStream};
use rigsim::thresholds::{edge_prob_hat, ModelParams};
use rigsim::Project;

fn main() -> rigsim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(200, |s| s.parse().unwrap());
    let m: u64 = args.get(1).map_or(1_000_000, |s| s.parse().unwrap());
    let p: f64 = args.get(2).map_or(2e-4, |s| s.parse().unwrap());

    let params = ModelParams::new(n as u64, m, p)?;
    let p_hat = edge_prob_hat(&params);
    let mut rng = RngStream::new(42, 0).rng();

    let strat = sample_rig_stratified(n, m, p, &mut rng, None)?;
    println!(
        "stratified: feature-size counts {:?}",
        &strat.counts()[..strat.counts().len().min(6)]
    );
    for w in strat.warnings() {
        println!("  warning: {w}");
    }
    let g = strat.project();
    println!("stratified RIG: {} edges", g.edge_count());

    if (m as f64) * (n as f64) * p <= 1e8 {
        let naive = sample_rig_naive(n, m, p, &mut rng)?.project();
        println!("naive RIG:      {} edges", naive.edge_count());
    }

    let er = sample_er(n, p_hat, &mut rng)?;
    println!(
        "G(n, p_hat):    {} edges (p_hat = {p_hat:.6e})",
        er.edge_count()
    );
    println!("expected:       {:.1}", p_hat * (n * (n - 1) / 2) as f64);
    Ok(())
}
