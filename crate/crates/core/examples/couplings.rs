//! Maximal couplings, composition, and the coupon-collector chain.

use rigsim::couplings::{
    compose_couplings, coupon_exact_pmf, maximal_coupling, poissonized_coupon_pmf,
    poissonized_coupon_pmf_by_conditioning, CouponModel,
};
use rigsim::oracle::{tv_exact, FinitePmf};

fn pmf(weights: &[f64]) -> FinitePmf<u64> {
    FinitePmf::from_pairs(weights.iter().enumerate().map(|(i, &w)| (i as u64, w))).unwrap()
}

fn main() -> rigsim::Result<()> {
    let x = pmf(&[0.5, 0.3, 0.2, 0.0]);
    let y = pmf(&[0.3, 0.3, 0.3, 0.1]);
    let z = pmf(&[0.1, 0.3, 0.3, 0.3]);

    let xy = maximal_coupling(&x, &y)?;
    let yz = maximal_coupling(&y, &z)?;
    let xz = compose_couplings(&xy, &yz)?;
    println!(
        "d_TV(X,Y) = {:.3}, P(X != Y) = {:.3}",
        tv_exact(&x, &y)?,
        1.0 - xy.diagonal_mass()
    );
    println!(
        "X <= Y w.p. {:.3}; Y <= Z w.p. {:.3}",
        xy.success_mass(),
        yz.success_mass()
    );
    println!(
        "composed X <= Z w.p. {:.3} (at least {:.3})",
        xz.success_mass(),
        xy.success_mass() + yz.success_mass() - 1.0
    );

    let model = CouponModel::new(vec![6, 4], vec![0.02, 0.01])?;
    let fixed = coupon_exact_pmf(&model, 50)?;
    let poisson = poissonized_coupon_pmf(&model, 50.0)?;
    let conditioned = poissonized_coupon_pmf_by_conditioning(&model, 50.0)?;
    println!(
        "\nX(50) vs X(Po(50)): tv = {:.4e}",
        tv_exact(&fixed, &poisson)?
    );
    println!(
        "poissonized closed form vs conditioning: tv = {:.2e}",
        tv_exact(&poisson, &conditioned)?
    );
    Ok(())
}
