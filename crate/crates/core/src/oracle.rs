//! Exact finite distributions and total-variation distances.
//!
//! Graph distributions are keyed by [`Graph::encode`] codes and always cover
//! the whole space of `2^C(n,2)` graphs, zero-mass states included, so two
//! pmfs on the same `n` can be compared state by state.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::combin::{binomial, compensated_sum};
use crate::couplings::{coupon_exact_pmf, CouponModel};
use crate::error::{Error, Result};
use crate::graph::{pair_count, pair_index, Graph};
use crate::samplers::sequential_plan;
use crate::stats::{binomial_pmf, poisson_pmf};
use crate::thresholds::{feature_size_prob, size_distribution};

/// Largest `n` handled by the graph-space oracles.
pub const ORACLE_MAX_VERTICES: usize = 5;
/// Largest product state space for count-vector and coupon pmfs.
pub const SUPPORT_LIMIT: u128 = 1_000_000;
/// Work budget for [`stratified_exact_pmf`].
pub const STRATIFIED_WORK_LIMIT: f64 = 1e10;

const MASS_TOLERANCE: f64 = 1e-10;

/// A probability mass function over an explicitly enumerated finite space.
#[derive(Clone, Debug, PartialEq)]
pub struct FinitePmf<S: Ord> {
    mass: BTreeMap<S, f64>,
}

impl<S: Ord + Clone> FinitePmf<S> {
    /// Validates non-negativity and normalisation. Round-off negatives above
    /// `-1e-12` are set to zero.
    pub fn new(mut mass: BTreeMap<S, f64>) -> Result<Self> {
        for v in mass.values_mut() {
            if !v.is_finite() || *v < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "invalid probability mass {v}"
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total = compensated_sum(mass.values().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!("masses sum to {total}")));
        }
        Ok(FinitePmf { mass })
    }

    pub fn from_pairs<I: IntoIterator<Item = (S, f64)>>(pairs: I) -> Result<Self> {
        let mut mass = BTreeMap::new();
        for (s, p) in pairs {
            *mass.entry(s).or_insert(0.0) += p;
        }
        FinitePmf::new(mass)
    }

    /// All mass on `at`, zero elsewhere in `space`.
    pub fn point_mass<I: IntoIterator<Item = S>>(space: I, at: S) -> Result<Self> {
        let mut mass: BTreeMap<S, f64> = space.into_iter().map(|s| (s, 0.0)).collect();
        mass.insert(at, 1.0);
        FinitePmf::new(mass)
    }

    pub fn mass(&self, s: &S) -> f64 {
        self.mass.get(s).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, f64)> {
        self.mass.iter().map(|(s, &p)| (s, p))
    }

    pub fn states(&self) -> impl Iterator<Item = &S> {
        self.mass.keys()
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.mass.values().copied())
    }

    pub fn same_space(&self, other: &Self) -> bool {
        self.mass.len() == other.mass.len()
            && self.mass.keys().zip(other.mass.keys()).all(|(a, b)| a == b)
    }

    pub fn probability(&self, mut pred: impl FnMut(&S) -> bool) -> f64 {
        compensated_sum(self.mass.iter().filter(|(s, _)| pred(s)).map(|(_, &p)| p))
    }

    /// Distribution of `f(X)`.
    pub fn pushforward<T: Ord + Clone>(&self, f: impl Fn(&S) -> T) -> FinitePmf<T> {
        let mut out: BTreeMap<T, f64> = BTreeMap::new();
        for (s, &p) in &self.mass {
            *out.entry(f(s)).or_insert(0.0) += p;
        }
        FinitePmf { mass: out }
    }
}

/// `½ Σ |a(x) − b(x)|`.
pub fn tv_exact<S: Ord + Clone>(a: &FinitePmf<S>, b: &FinitePmf<S>) -> Result<f64> {
    if !a.same_space(b) {
        return Err(Error::SpaceMismatch);
    }
    let l1 = compensated_sum(
        a.mass
            .values()
            .zip(b.mass.values())
            .map(|(x, y)| (x - y).abs()),
    );
    Ok((0.5 * l1).clamp(0.0, 1.0))
}

fn check_oracle_n(n: usize) -> Result<()> {
    if n > ORACLE_MAX_VERTICES {
        Err(Error::out_of_range("n", n, "<= 5 for exact graph oracles"))
    } else {
        Ok(())
    }
}

fn check_prob(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::out_of_range(what, p, "[0, 1]"))
    }
}

/// Edge-set code of the clique on the vertex bitmask `set`.
fn clique_code(n: usize, set: u32) -> u64 {
    let mut code = 0u64;
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if set >> u & 1 == 1 && set >> v & 1 == 1 {
                code |= 1 << pair_index(n, u, v);
            }
        }
    }
    code
}

/// Probability that one feature has exactly the vertex set `S`, `|S| = k`.
fn set_weight(n: usize, p: f64, k: usize) -> f64 {
    feature_size_prob(n as u64, p, k as u64)
        .map(|(pk, _)| pk)
        .unwrap_or(0.0)
}

/// Exact distribution of the projected graph of `G(n, m, p)`.
///
/// `P(G_RIG ⊆ G) = s(G)^m` where `s(G)` is the probability that one feature's
/// clique fits inside `G`; the pmf follows by Möbius inversion over the
/// subgraphs of each `G`.
pub fn rig_exact_pmf(n: usize, m: u64, p: f64) -> Result<FinitePmf<u64>> {
    rig_exact_pmf_truncated(n, m, p, None)
}

/// As [`rig_exact_pmf`], with features larger than `k_max` treated as empty.
pub fn rig_exact_pmf_truncated(
    n: usize,
    m: u64,
    p: f64,
    k_max: Option<usize>,
) -> Result<FinitePmf<u64>> {
    check_oracle_n(n)?;
    check_prob("p", p)?;
    let kmax = k_max.unwrap_or(n).min(n);
    let states = 1u64 << pair_count(n);
    let cliques: Vec<(u64, f64)> = (0u32..1 << n)
        .filter(|s| (2..=kmax).contains(&(s.count_ones() as usize)))
        .map(|s| (clique_code(n, s), set_weight(n, p, s.count_ones() as usize)))
        .filter(|&(_, w)| w > 0.0)
        .collect();

    // F(G) = P(projection ⊆ G), from the mass that does not fit
    let fits: Vec<f64> = (0..states)
        .map(|g| {
            if m == 0 {
                return 1.0;
            }
            let deficit =
                compensated_sum(cliques.iter().filter(|(c, _)| c & !g != 0).map(|&(_, w)| w))
                    .min(1.0);
            (m as f64 * (-deficit).ln_1p()).exp()
        })
        .collect();

    let mut mass = BTreeMap::new();
    for g in 0..states {
        let mut terms = Vec::with_capacity(1 << g.count_ones());
        let mut h = g;
        loop {
            let sign = if (g ^ h).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            terms.push(sign * fits[h as usize]);
            if h == 0 {
                break;
            }
            h = (h - 1) & g;
        }
        mass.insert(g, compensated_sum(terms));
    }
    FinitePmf::new(mass)
}

/// Exact distribution of `G(n, p̂)`.
pub fn er_exact_pmf(n: usize, p_hat: f64) -> Result<FinitePmf<u64>> {
    check_oracle_n(n)?;
    check_prob("p_hat", p_hat)?;
    let pairs = pair_count(n) as i32;
    let mass = (0..1u64 << pairs)
        .map(|g| {
            let e = g.count_ones() as i32;
            (g, p_hat.powi(e) * (1.0 - p_hat).powi(pairs - e))
        })
        .collect();
    FinitePmf::new(mass)
}

/// Feature-size probabilities with sizes above `k_max` folded into size 0.
pub(crate) fn truncated_sizes(n: usize, p: f64, k_max: Option<usize>) -> Vec<f64> {
    let mut pis = size_distribution(n as u64, p);
    if let Some(k) = k_max {
        if k < n {
            let dropped: f64 = pis[k + 1..].iter().sum();
            pis[k + 1..].iter_mut().for_each(|x| *x = 0.0);
            pis[0] += dropped;
        }
    }
    pis
}

/// Exact law of the feature-size counts `(c_0, …, c_n)` produced by the
/// sequential conditional binomials, over all compositions of `m`.
pub fn sequential_count_pmf(pis: &[f64], m: u64) -> Result<FinitePmf<Vec<u64>>> {
    let parts = pis.len() as u64;
    let size = binomial(m + parts - 1, parts - 1).unwrap_or(u64::MAX);
    if u128::from(size) > SUPPORT_LIMIT {
        return Err(Error::SupportTooLarge {
            size: u128::from(size),
            limit: SUPPORT_LIMIT,
        });
    }
    let plan = sequential_plan(pis);
    let mut out = BTreeMap::new();
    let mut counts = vec![0u64; pis.len()];
    walk_plan(&plan, 0, m, 1.0, &mut counts, &mut out);
    FinitePmf::new(out)
}

fn walk_plan(
    plan: &[(usize, f64)],
    step: usize,
    remaining: u64,
    weight: f64,
    counts: &mut Vec<u64>,
    out: &mut BTreeMap<Vec<u64>, f64>,
) {
    if step == plan.len() {
        counts[0] = remaining;
        out.insert(counts.clone(), weight);
        counts[0] = 0;
        return;
    }
    let (k, cond) = plan[step];
    for c in 0..=remaining {
        counts[k] = c;
        walk_plan(
            plan,
            step + 1,
            remaining - c,
            weight * binomial_pmf(remaining, cond, c),
            counts,
            out,
        );
    }
    counts[k] = 0;
}

/// Exact projected-graph distribution of the size-stratified sampler.
///
/// Feature-size counts follow the sequential conditional binomials; given the
/// counts, the graph is the union of independent uniform `k`-cliques, computed
/// by direct OR-convolution. Every term is non-negative, so this path shares
/// no cancellation with [`rig_exact_pmf`].
pub fn stratified_exact_pmf(
    n: usize,
    m: u64,
    p: f64,
    k_max: Option<usize>,
) -> Result<FinitePmf<u64>> {
    check_oracle_n(n)?;
    check_prob("p", p)?;
    let states = 1usize << pair_count(n);
    let work = (m as f64 + 1.0).powi(2) * (states as f64).powi(2) * n as f64;
    if work > STRATIFIED_WORK_LIMIT {
        return Err(Error::GuardExceeded {
            projected: work,
            budget: STRATIFIED_WORK_LIMIT,
        });
    }
    let mm = m as usize;
    let pis = truncated_sizes(n, p, k_max);

    // table[r][g]: probability of `r` features still unassigned and current union `g`
    let mut table = vec![vec![0.0; states]; mm + 1];
    table[mm][0] = 1.0;
    for (k, cond) in sequential_plan(&pis) {
        let powers = clique_powers(n, k, mm);
        let mut next = vec![vec![0.0; states]; mm + 1];
        for r in 0..=mm {
            for g in 0..states {
                let w0 = table[r][g];
                if w0 == 0.0 {
                    continue;
                }
                for c in 0..=r {
                    let w = w0 * binomial_pmf(r as u64, cond, c as u64);
                    if w == 0.0 {
                        continue;
                    }
                    for &(h, u) in &powers[c] {
                        next[r - c][g | h as usize] += w * u;
                    }
                }
            }
        }
        table = next;
    }
    let mass = (0..states as u64)
        .map(|g| (g, (0..=mm).map(|r| table[r][g as usize]).sum::<f64>()))
        .collect();
    FinitePmf::new(mass)
}

/// `powers[c]`: sparse law of the union of `c` independent uniform `k`-cliques.
fn clique_powers(n: usize, k: usize, max_c: usize) -> Vec<Vec<(u64, f64)>> {
    let states = 1usize << pair_count(n);
    let sets: Vec<u64> = (0u32..1 << n)
        .filter(|s| s.count_ones() as usize == k)
        .map(|s| clique_code(n, s))
        .collect();
    let each = 1.0 / sets.len() as f64;
    let mut powers = vec![vec![(0u64, 1.0)]];
    for _ in 0..max_c {
        let prev = powers.last().expect("non-empty");
        let mut dense = vec![0.0; states];
        for &(g, w) in prev {
            for &h in &sets {
                dense[(g | h) as usize] += w * each;
            }
        }
        powers.push(
            dense
                .into_iter()
                .enumerate()
                .filter(|&(_, w)| w > 0.0)
                .map(|(g, w)| (g as u64, w))
                .collect(),
        );
    }
    powers
}

/// Product of independent `Bin(n_i, p_i)` laws over the full grid `∏ {0..=n_i}`.
pub fn product_binomial_pmf(n_bar: &[u64], probs: &[f64]) -> Result<FinitePmf<Vec<u64>>> {
    if n_bar.len() != probs.len() {
        return Err(Error::InvalidParameter(
            "class counts and probabilities differ in length".into(),
        ));
    }
    for &p in probs {
        check_prob("p", p)?;
    }
    let grid = grid_states(n_bar)?;
    let marginals: Vec<Vec<f64>> = n_bar
        .iter()
        .zip(probs)
        .map(|(&n, &p)| (0..=n).map(|x| binomial_pmf(n, p, x)).collect())
        .collect();
    let mass = grid
        .into_iter()
        .map(|x| {
            let w = x
                .iter()
                .zip(&marginals)
                .map(|(&xi, m)| m[xi as usize])
                .product();
            (x, w)
        })
        .collect();
    FinitePmf::new(mass)
}

/// Every vector `x` with `0 <= x_i <= n_i`, in lexicographic order.
pub(crate) fn grid_states(n_bar: &[u64]) -> Result<Vec<Vec<u64>>> {
    let size = n_bar
        .iter()
        .try_fold(1u128, |acc, &n| acc.checked_mul(u128::from(n) + 1))
        .unwrap_or(u128::MAX);
    if size > SUPPORT_LIMIT {
        return Err(Error::SupportTooLarge {
            size,
            limit: SUPPORT_LIMIT,
        });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut x = vec![0u64; n_bar.len()];
    loop {
        out.push(x.clone());
        let mut i = x.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if x[i] < n_bar[i] {
                x[i] += 1;
                break;
            }
            x[i] = 0;
        }
    }
}

/// Exact laws of `(X_2, …, X_K)`: the numbers of distinct `k`-subsets hit by
/// the `m` features of `G(n, m, p)`, and the independent-binomial model.
#[derive(Clone, Debug)]
pub struct CountVectorPmfs {
    pub rig: FinitePmf<Vec<u64>>,
    pub independent: FinitePmf<Vec<u64>>,
}

pub fn count_vector_pmfs(n: usize, m: u64, p: f64, k_max: usize) -> Result<CountVectorPmfs> {
    check_prob("p", p)?;
    if k_max < 2 || k_max > n {
        return Err(Error::out_of_range("K", k_max, "2..=n"));
    }
    let n_bar: Vec<u64> = (2..=k_max as u64)
        .map(|k| binomial(n as u64, k).unwrap_or(u64::MAX))
        .collect();
    grid_states(&n_bar)?;
    let pis = size_distribution(n as u64, p);
    let p_bar: Vec<f64> = (2..=k_max).map(|k| set_weight(n, p, k)).collect();
    let blank = compensated_sum(
        pis.iter()
            .enumerate()
            .filter(|&(k, _)| k < 2 || k > k_max)
            .map(|(_, &x)| x),
    );
    let model = CouponModel::with_blank(n_bar.clone(), p_bar.clone(), blank)?;
    let rig = coupon_exact_pmf(&model, m)?;
    let probs: Vec<f64> = p_bar
        .iter()
        .map(|&pk| -(-(m as f64) * pk).exp_m1())
        .collect();
    let independent = product_binomial_pmf(&n_bar, &probs)?;
    Ok(CountVectorPmfs { rig, independent })
}

/// Plug-in total variation between two empirical distributions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalTv {
    pub tv: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Distinct states seen in either sample; the estimate is biased upwards
    /// by roughly `sqrt(support / N)`.
    pub support: usize,
}

pub fn tv_empirical<S: Ord + Clone>(a: &[S], b: &[S]) -> Result<EmpiricalTv> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData(
            "tv_empirical needs non-empty samples".into(),
        ));
    }
    let mut counts: BTreeMap<&S, (u64, u64)> = BTreeMap::new();
    for s in a {
        counts.entry(s).or_default().0 += 1;
    }
    for s in b {
        counts.entry(s).or_default().1 += 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let l1 = compensated_sum(
        counts
            .values()
            .map(|&(x, y)| (x as f64 / na - y as f64 / nb).abs()),
    );
    Ok(EmpiricalTv {
        tv: (0.5 * l1).clamp(0.0, 1.0),
        n_a: a.len(),
        n_b: b.len(),
        support: counts.len(),
    })
}

/// Exact `d_TV(Bin(n̂, p̂), Po(n̂ p̂))` together with the bound `p̂`.
pub fn dtv_binomial_poisson(n_hat: u64, p_hat: f64) -> Result<(f64, f64)> {
    check_prob("p_hat", p_hat)?;
    if p_hat == 0.0 || n_hat == 0 {
        return Ok((0.0, p_hat));
    }
    let lambda = n_hat as f64 * p_hat;
    if lambda > 700.0 {
        return Err(Error::out_of_range("n_hat * p_hat", lambda, "<= 700"));
    }
    let mut terms: Vec<f64> = (0..=n_hat)
        .map(|k| (binomial_pmf(n_hat, p_hat, k) - poisson_pmf(lambda, k)).abs())
        .collect();
    // Poisson mass beyond the binomial support
    let mut k = n_hat + 1;
    loop {
        let t = poisson_pmf(lambda, k);
        terms.push(t);
        if k as f64 > lambda && t < 1e-20 {
            break;
        }
        k += 1;
    }
    Ok(((0.5 * compensated_sum(terms)).clamp(0.0, 1.0), p_hat))
}

/// Graphs on `n` vertices as a pmf over explicit edge lists.
pub fn decode_pmf(n: usize, pmf: &FinitePmf<u64>) -> Result<Vec<(Graph, f64)>> {
    pmf.iter()
        .map(|(&c, p)| Ok((Graph::decode(n, c)?, p)))
        .collect()
}
