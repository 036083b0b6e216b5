//! Tail bounds, confidence intervals and goodness-of-fit tests.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::combin::ln_binomial;
use crate::error::{Error, Result};

/// Caveat attached to every Poisson tail bound.
pub const POISSON_CAVEAT: &str =
    "Poisson variant holds up to an additive o(n^-i) term with no explicit constant";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailDist {
    Binomial,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `P(X <= E X - t)`
    Lower,
    /// `P(X >= E X + t)`
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailBound {
    pub bound: f64,
    pub caveat: Option<&'static str>,
}

/// Chernoff bounds: `exp(-t²/(2μ))` below the mean, `exp(-3t²/(2(3μ + t)))` above.
pub fn chernoff_tail_bound(dist: TailDist, mean: f64, t: f64, side: Side) -> Result<TailBound> {
    if !(t >= 0.0) {
        return Err(Error::out_of_range("t", t, ">= 0"));
    }
    if !(mean > 0.0) {
        return Err(Error::out_of_range("mean", mean, "> 0"));
    }
    let exponent = match side {
        Side::Lower => -t * t / (2.0 * mean),
        Side::Upper => -3.0 * t * t / (2.0 * (3.0 * mean + t)),
    };
    Ok(TailBound {
        bound: exponent.exp(),
        caveat: (dist == TailDist::Poisson).then_some(POISSON_CAVEAT),
    })
}

/// Which branch of [`tail_threshold_a`] was used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailCase {
    /// `λ < 0.5 ln n`
    Small,
    /// `0.5 ln n <= λ <= 2 ln n`, with `ω(n) = ln ln n`
    Logarithmic,
    /// `λ > 2 ln n`
    Large,
}

/// Threshold `a` with `P(X >= a)` small for `X` binomial with mean `λ`:
/// `(t+ε) ln n / (ln ln n − ln λ)`, `ln ln n · λ` or `(1+ε) λ` by regime.
pub fn tail_threshold_a(lambda: f64, t: f64, epsilon: f64, n: u64) -> Result<(f64, TailCase)> {
    if !(lambda > 0.0) {
        return Err(Error::out_of_range("lambda", lambda, "> 0"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::out_of_range("epsilon", epsilon, "> 0"));
    }
    if n < 3 {
        return Err(Error::out_of_range("n", n, ">= 3"));
    }
    let ln_n = (n as f64).ln();
    let lnln = ln_n.ln();
    Ok(if lambda < 0.5 * ln_n {
        ((t + epsilon) * ln_n / (lnln - lambda.ln()), TailCase::Small)
    } else if lambda > 2.0 * ln_n {
        ((1.0 + epsilon) * lambda, TailCase::Large)
    } else {
        (lnln * lambda, TailCase::Logarithmic)
    })
}

fn ln_binom_pmf(n: u64, p: f64, k: u64) -> f64 {
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// `Bin(n, p)` pmf, evaluated in log space.
pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        0.0
    } else {
        ln_binom_pmf(n, p, k).exp()
    }
}

/// `Po(λ)` pmf, evaluated in log space.
pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

/// Sum of terms `f(k)` for `k` in `range`, largest first, stopping once they
/// drop below `1e-300` past the mode.
fn tail_sum(mut f: impl FnMut(u64) -> f64, range: std::ops::RangeInclusive<u64>, mode: u64) -> f64 {
    let (lo, hi) = (*range.start(), *range.end());
    if lo > hi {
        return 0.0;
    }
    let start = mode.clamp(lo, hi);
    let mut total = 0.0;
    for k in start..=hi {
        let v = f(k);
        total += v;
        if k > mode && v < 1e-300 {
            break;
        }
    }
    for k in (lo..start).rev() {
        let v = f(k);
        total += v;
        if k < mode && v < 1e-300 {
            break;
        }
    }
    total.min(1.0)
}

/// Exact `P(X >= a)` for `X ~ Bin(n, p)`.
pub fn binomial_upper_tail(n: u64, p: f64, a: u64) -> f64 {
    if a == 0 {
        return 1.0;
    }
    let mode = ((n as f64 + 1.0) * p).floor() as u64;
    tail_sum(|k| binomial_pmf(n, p, k), a..=n, mode)
}

/// Exact `P(X <= a)` for `X ~ Bin(n, p)`.
pub fn binomial_lower_tail(n: u64, p: f64, a: u64) -> f64 {
    if a >= n {
        return 1.0;
    }
    let mode = ((n as f64 + 1.0) * p).floor() as u64;
    tail_sum(|k| binomial_pmf(n, p, k), 0..=a, mode)
}

/// Wilson score interval at confidence `level`.
pub fn wilson_ci(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InsufficientData(
            "wilson_ci needs at least one trial".into(),
        ));
    }
    if successes > trials {
        return Err(Error::InvalidParameter(format!(
            "{successes} successes in {trials} trials"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::out_of_range("level", level, "(0, 1)"));
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let nf = trials as f64;
    let phat = successes as f64 / nf;
    let z2 = z * z;
    let centre = (phat + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z / (1.0 + z2 / nf) * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    Ok((lo.min(phat), hi.max(phat)))
}

/// Chi-square goodness-of-fit p-value of `observed` against `probs`.
///
/// Any mass missing from `probs` is added to the last cell. Adjacent cells are
/// merged left to right until each has expected count at least 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<f64> {
    if observed.len() != probs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} observed cells vs {} probabilities",
            observed.len(),
            probs.len()
        )));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData("empty histogram".into()));
    }
    let nf = total as f64;
    let mut probs = probs.to_vec();
    let missing = 1.0 - probs.iter().sum::<f64>();
    if let Some(last) = probs.last_mut() {
        *last += missing.max(0.0);
    }

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs_acc, mut exp_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(&probs) {
        obs_acc += o as f64;
        exp_acc += p * nf;
        if exp_acc >= 5.0 {
            cells.push((obs_acc, exp_acc));
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    if obs_acc > 0.0 || exp_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs_acc;
                last.1 += exp_acc;
            }
            None => cells.push((obs_acc, exp_acc)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} cell(s) with expected count >= 5",
            cells.len()
        )));
    }
    let stat: f64 = cells
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e) * (o - e) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    if !stat.is_finite() {
        return Ok(0.0);
    }
    let df = (cells.len() - 1) as f64;
    Ok(ChiSquared::new(df).expect("df >= 1").sf(stat))
}

/// Chi-square test of a count histogram (`hist[k]` = occurrences of `k`) against `Po(λ)`.
pub fn poisson_gof(hist: &[u64], lambda: f64) -> Result<f64> {
    let total: u64 = hist.iter().sum();
    if total < 100 {
        return Err(Error::InsufficientData(format!(
            "{total} observations (need >= 100)"
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::out_of_range("lambda", lambda, ">= 0"));
    }
    let reach = (lambda + 10.0 * lambda.sqrt() + 10.0).ceil() as usize;
    let len = hist.len().max(reach);
    let mut observed = hist.to_vec();
    observed.resize(len, 0);
    let probs: Vec<f64> = (0..len as u64).map(|k| poisson_pmf(lambda, k)).collect();
    // the last cell carries the whole upper tail
    chi_square_gof(&observed, &probs)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceViolation {
    pub threshold: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub a_lo: f64,
    pub b_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    pub n_a: usize,
    pub n_b: usize,
    pub thresholds: usize,
    /// Per-interval confidence after the Bonferroni correction.
    pub interval_level: f64,
    pub violations: Vec<DominanceViolation>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `P(stat(A) >= t) <= P(stat(B) >= t)` at every `t` in the pooled support.
///
/// A threshold is a violation when the Wilson lower bound for `A` exceeds the
/// Wilson upper bound for `B`; the `2·T` intervals share an overall level.
pub fn dominance_check<T>(
    a: &[T],
    b: &[T],
    statistic: impl Fn(&T) -> f64,
    level: f64,
) -> Result<DominanceReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData(
            "dominance_check needs non-empty samples".into(),
        ));
    }
    let mut sa: Vec<f64> = a.iter().map(&statistic).collect();
    let mut sb: Vec<f64> = b.iter().map(&statistic).collect();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let mut pooled: Vec<f64> = sa.iter().chain(&sb).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();

    let intervals = 2 * pooled.len();
    let interval_level = 1.0 - (1.0 - level) / intervals as f64;
    let at_least =
        |sorted: &[f64], t: f64| (sorted.len() - sorted.partition_point(|&x| x < t)) as u64;

    let mut violations = Vec::new();
    for &t in &pooled {
        let ka = at_least(&sa, t);
        let kb = at_least(&sb, t);
        let (a_lo, _) = wilson_ci(ka, sa.len() as u64, interval_level)?;
        let (_, b_hi) = wilson_ci(kb, sb.len() as u64, interval_level)?;
        if a_lo > b_hi {
            violations.push(DominanceViolation {
                threshold: t,
                p_a: ka as f64 / sa.len() as f64,
                p_b: kb as f64 / sb.len() as f64,
                a_lo,
                b_hi,
            });
        }
    }
    Ok(DominanceReport {
        n_a: sa.len(),
        n_b: sb.len(),
        thresholds: pooled.len(),
        interval_level,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::RngStream;
    use rand_distr::{Binomial, Distribution, Poisson};

    #[test]
    fn chernoff_examples() {
        let b = |m, t, s| {
            chernoff_tail_bound(TailDist::Binomial, m, t, s)
                .unwrap()
                .bound
        };
        assert_eq!(b(5.0, 0.0, Side::Lower), 1.0);
        assert_eq!(b(5.0, 0.0, Side::Upper), 1.0);
        assert!((b(100.0, 10.0, Side::Lower) - 0.606_530_659_712_633_4).abs() < 1e-12);
        assert!((b(100.0, 10.0, Side::Upper) - 0.616_392_731_327_227).abs() < 1e-12);
        assert!(chernoff_tail_bound(TailDist::Binomial, 1.0, -1.0, Side::Upper).is_err());
        let p = chernoff_tail_bound(TailDist::Poisson, 1.0, 1.0, Side::Upper).unwrap();
        assert!(p.caveat.is_some());
    }

    #[test]
    fn tail_threshold_branches() {
        let (a, case) = tail_threshold_a(0.01, 3.0, 0.1, 10_000).unwrap();
        assert_eq!(case, TailCase::Small);
        assert!((a - 4.183_146_690_285).abs() < 1e-9, "{a}");
        let ln_n = (10_000f64).ln();
        let (a, case) = tail_threshold_a(10.0 * ln_n, 3.0, 0.1, 10_000).unwrap();
        assert_eq!(case, TailCase::Large);
        assert!((a - 1.1 * 10.0 * ln_n).abs() < 1e-9);
        let (_, case) = tail_threshold_a(10.0, 3.0, 0.1, 10_000).unwrap();
        assert_eq!(case, TailCase::Logarithmic);
        assert!(tail_threshold_a(0.0, 3.0, 0.1, 100).is_err());
    }

    #[test]
    fn large_lambda_threshold_meets_tail_target() {
        // Chernoff gives P(X >= (1+ε)λ) <= exp(-ε²λ/3), below n^-t once λ >> ln n
        let n = 10_000u64;
        let lambda = 1000.0 * (n as f64).ln();
        let trials = 100_000_000u64;
        for &t in &[1.0, 2.0, 3.0] {
            let (a, case) = tail_threshold_a(lambda, t, 0.1, n).unwrap();
            assert_eq!(case, TailCase::Large);
            let tail = binomial_upper_tail(trials, lambda / trials as f64, a.ceil() as u64);
            assert!(tail < (n as f64).powf(-t), "t={t}: {tail}");
        }
    }

    #[test]
    fn exact_tails_are_normalised() {
        let lo = binomial_lower_tail(50, 0.3, 14);
        let hi = binomial_upper_tail(50, 0.3, 15);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert_eq!(binomial_upper_tail(10, 0.5, 0), 1.0);
        assert!((binomial_upper_tail(10, 0.5, 10) - 0.5f64.powi(10)).abs() < 1e-18);
    }

    #[test]
    fn wilson_examples() {
        assert_eq!(wilson_ci(0, 100, 0.95).unwrap().0, 0.0);
        assert_eq!(wilson_ci(100, 100, 0.95).unwrap().1, 1.0);
        let (lo, hi) = wilson_ci(50, 100, 0.95).unwrap();
        assert!(
            (lo - 0.403_831).abs() < 1e-5 && (hi - 0.596_169).abs() < 1e-5,
            "{lo} {hi}"
        );
        assert!(wilson_ci(0, 0, 0.95).is_err());
    }

    #[test]
    fn chi_square_flags_gross_misfit() {
        let pv = chi_square_gof(&[100, 0], &[0.5, 0.5]).unwrap();
        assert!(pv < 1e-10);
        let pv = chi_square_gof(&[50, 50], &[0.5, 0.5]).unwrap();
        assert!((pv - 1.0).abs() < 1e-12);
    }

    fn poisson_hist(lambda: f64, draws: usize, seed: u64) -> Vec<u64> {
        let mut rng = RngStream::new(seed, 0).rng();
        let po = Poisson::new(lambda).unwrap();
        let mut hist = vec![0u64; 64];
        for _ in 0..draws {
            hist[po.sample(&mut rng) as usize] += 1;
        }
        hist
    }

    #[test]
    fn poisson_gof_calibration() {
        let mut pvals: Vec<f64> = (0..21)
            .map(|s| poisson_gof(&poisson_hist(0.5, 100_000, s), 0.5).unwrap())
            .collect();
        pvals.sort_by(f64::total_cmp);
        assert!(pvals[10] > 0.05, "{pvals:?}");
        assert!(poisson_gof(&poisson_hist(1.0, 100_000, 99), 0.5).unwrap() < 1e-6);
        let mut zero = vec![0u64; 1];
        zero[0] = 1000;
        assert!(poisson_gof(&zero, 5.0).unwrap() < 1e-100);
        assert!(poisson_gof(&[10], 1.0).is_err());
    }

    fn binomial_samples(n: u64, p: f64, reps: usize, seed: u64) -> Vec<u64> {
        let mut rng = RngStream::new(seed, 0).rng();
        let b = Binomial::new(n, p).unwrap();
        (0..reps).map(|_| b.sample(&mut rng)).collect()
    }

    #[test]
    fn dominance_examples() {
        let a = binomial_samples(10, 0.2, 10_000, 1);
        let b = binomial_samples(10, 0.5, 10_000, 2);
        let id = |x: &u64| *x as f64;
        assert!(dominance_check(&a, &a, id, 0.95).unwrap().passed());
        assert!(dominance_check(&a, &b, id, 0.95).unwrap().passed());
        let rev = dominance_check(&b, &a, id, 0.95).unwrap();
        assert!(!rev.passed());
        assert!(dominance_check::<u64>(&[], &b, id, 0.95).is_err());
    }
}
