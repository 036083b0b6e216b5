//! Exact TV between the hit-count vector (X₂, X₃) and independent binomials
//! as m grows with m p² fixed.

use rigsim::oracle::{count_vector_pmfs, tv_exact};

fn main() -> rigsim::Result<()> {
    let n = 4;
    for mp2 in [0.5, 1.0, 2.0] {
        print!("m p^2 = {mp2}:");
        for m in [1_000u64, 10_000, 100_000, 1_000_000] {
            let p = (mp2 / m as f64).sqrt();
            let pmfs = count_vector_pmfs(n, m, p, 3)?;
            print!("  {:.3e}", tv_exact(&pmfs.rig, &pmfs.independent)?);
        }
        println!();
    }
    Ok(())
}
