//! The coupling where G3 ⊆ G(H3) but G3 has edge density r' ≈ n q³ / 3.

use rigsim::couplings::{counterexample_coupling, counterexample_r_prime};
use rigsim::samplers::RngStream;
use rigsim::Project;

fn main() -> rigsim::Result<()> {
    let q = 0.1;
    let mut rng = RngStream::new(3, 0).rng();
    for n in [20usize, 50, 100, 200, 400] {
        let s = counterexample_coupling(n, q, &mut rng)?;
        let r_prime = counterexample_r_prime(n as u64, q);
        println!(
            "n={n:>4}: |H3|={:>6} |G(H3)|={:>6} |G3|={:>5}  r'/q={:.4}  n q^2/3={:.4}",
            s.h3.edge_count(),
            s.h3.project().edge_count(),
            s.g3.edge_count(),
            r_prime / q,
            n as f64 * q * q / 3.0
        );
    }
    Ok(())
}
