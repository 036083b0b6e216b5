//! Couplings: finite joint distributions with order-aware combinators, the
//! coupon-collector model, and constructive joint samplers whose containment
//! guarantees hold on every draw.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::combin::{binomial, compensated_sum, unrank_colex};
use crate::error::{Error, Result};
use crate::graph::{Graph, Hypergraph, Vertex};
use crate::oracle::{grid_states, product_binomial_pmf, FinitePmf};
use crate::stats::poisson_pmf;

/// Work budget for exact coupon-model propagation.
pub const COUPON_WORK_LIMIT: f64 = 2e10;
/// Poisson mass left out of the conditioning oracle.
pub const POISSON_TAIL: f64 = 1e-12;

const MARGINAL_TOLERANCE: f64 = 1e-9;

/// A partial order on a state space.
pub trait Precedes {
    fn precedes(&self, other: &Self) -> bool;
}

impl Precedes for u64 {
    fn precedes(&self, other: &Self) -> bool {
        self <= other
    }
}

impl Precedes for i64 {
    fn precedes(&self, other: &Self) -> bool {
        self <= other
    }
}

/// A graph code ordered by edge-set inclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GraphCode(pub u64);

impl Precedes for GraphCode {
    fn precedes(&self, other: &Self) -> bool {
        self.0 & !other.0 == 0
    }
}

/// Coordinatewise order.
impl<T: Precedes> Precedes for Vec<T> {
    fn precedes(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().zip(other).all(|(a, b)| a.precedes(b))
    }
}

/// A coupling of two distributions on the same finite space.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf<S: Ord> {
    mass: BTreeMap<(S, S), f64>,
}

impl<S: Ord + Clone + Precedes> JointPmf<S> {
    pub fn new(mut mass: BTreeMap<(S, S), f64>) -> Result<Self> {
        for v in mass.values_mut() {
            if !v.is_finite() || *v < -1e-12 {
                return Err(Error::InvalidParameter(format!("invalid joint mass {v}")));
            }
            *v = v.max(0.0);
        }
        let total = compensated_sum(mass.values().copied());
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "joint masses sum to {total}"
            )));
        }
        Ok(JointPmf { mass })
    }

    pub fn from_pairs<I: IntoIterator<Item = ((S, S), f64)>>(pairs: I) -> Result<Self> {
        let mut mass = BTreeMap::new();
        for (k, p) in pairs {
            *mass.entry(k).or_insert(0.0) += p;
        }
        JointPmf::new(mass)
    }

    /// `(a, b, mass, a ⪯ b)` for every pair in the support.
    pub fn entries(&self) -> impl Iterator<Item = (&S, &S, f64, bool)> {
        self.mass
            .iter()
            .map(|((a, b), &p)| (a, b, p, a.precedes(b)))
    }

    pub fn mass(&self, a: &S, b: &S) -> f64 {
        self.mass
            .get(&(a.clone(), b.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn marginal_a(&self) -> FinitePmf<S> {
        self.marginal(|(a, _)| a.clone())
    }

    pub fn marginal_b(&self) -> FinitePmf<S> {
        self.marginal(|(_, b)| b.clone())
    }

    fn marginal(&self, pick: impl Fn(&(S, S)) -> S) -> FinitePmf<S> {
        let mut out = BTreeMap::new();
        for (k, &p) in &self.mass {
            *out.entry(pick(k)).or_insert(0.0) += p;
        }
        FinitePmf::new(out).expect("marginal of a valid joint pmf")
    }

    /// `P(a ⪯ b)`.
    pub fn success_mass(&self) -> f64 {
        compensated_sum(self.entries().filter(|e| e.3).map(|e| e.2))
    }

    pub fn failure_mass(&self) -> f64 {
        compensated_sum(self.entries().filter(|e| !e.3).map(|e| e.2))
    }

    /// `P(a = b)`.
    pub fn diagonal_mass(&self) -> f64 {
        compensated_sum(
            self.mass
                .iter()
                .filter(|((a, b), _)| a == b)
                .map(|(_, &p)| p),
        )
    }
}

/// The maximal coupling: `min(a, b)` on the diagonal, the excesses spread
/// proportionally off it, so that `P(equal) = 1 − d_TV(a, b)`.
pub fn maximal_coupling<S: Ord + Clone + Precedes>(
    a: &FinitePmf<S>,
    b: &FinitePmf<S>,
) -> Result<JointPmf<S>> {
    if !a.same_space(b) {
        return Err(Error::SpaceMismatch);
    }
    let mut mass = BTreeMap::new();
    let mut excess_a = Vec::new();
    let mut excess_b = Vec::new();
    for ((s, pa), (_, pb)) in a.iter().zip(b.iter()) {
        let common = pa.min(pb);
        if common > 0.0 {
            mass.insert((s.clone(), s.clone()), common);
        }
        if pa > common {
            excess_a.push((s.clone(), pa - common));
        }
        if pb > common {
            excess_b.push((s.clone(), pb - common));
        }
    }
    let d = compensated_sum(excess_a.iter().map(|e| e.1));
    if d > 0.0 {
        for (sa, ea) in &excess_a {
            for (sb, eb) in &excess_b {
                *mass.entry((sa.clone(), sb.clone())).or_insert(0.0) += ea * eb / d;
            }
        }
    }
    JointPmf::new(mass)
}

/// Glues `(X, Y)` and `(Y, Z)` along `Y` and returns the `(X, Z)` marginal of
/// `μ(x, y, z) = μ₁(x, y) μ₂(y, z) / P(Y = y)`.
pub fn compose_couplings<S: Ord + Clone + Precedes>(
    xy: &JointPmf<S>,
    yz: &JointPmf<S>,
) -> Result<JointPmf<S>> {
    let y1 = xy.marginal_b();
    let y2 = yz.marginal_a();
    let mut worst = 0.0f64;
    for y in y1.states().chain(y2.states()) {
        worst = worst.max((y1.mass(y) - y2.mass(y)).abs());
    }
    if worst > MARGINAL_TOLERANCE {
        return Err(Error::MarginalMismatch(worst));
    }
    let mut by_y: BTreeMap<&S, Vec<(&S, f64)>> = BTreeMap::new();
    for ((y, z), &p) in &yz.mass {
        by_y.entry(y).or_default().push((z, p));
    }
    let mut mass = BTreeMap::new();
    for ((x, y), &p1) in &xy.mass {
        let py = y1.mass(y);
        if py <= 0.0 || p1 == 0.0 {
            continue;
        }
        for &(z, p2) in by_y.get(y).map(Vec::as_slice).unwrap_or(&[]) {
            *mass.entry((x.clone(), z.clone())).or_insert(0.0) += p1 * p2 / py;
        }
    }
    JointPmf::new(mass)
}

/// Product of independent couplings, as a coupling of vectors.
pub fn product_coupling<S: Ord + Clone + Precedes>(
    joints: &[JointPmf<S>],
) -> Result<JointPmf<Vec<S>>> {
    let mut acc: BTreeMap<(Vec<S>, Vec<S>), f64> = BTreeMap::new();
    acc.insert((Vec::new(), Vec::new()), 1.0);
    for j in joints {
        let mut next = BTreeMap::new();
        for ((xs, ys), &p) in &acc {
            for ((x, y), &q) in &j.mass {
                let mut xs = xs.clone();
                let mut ys = ys.clone();
                xs.push(x.clone());
                ys.push(y.clone());
                *next.entry((xs, ys)).or_insert(0.0) += p * q;
            }
        }
        acc = next;
    }
    JointPmf::new(acc)
}

/// Product coupling followed by `(x̄, ȳ) ↦ (Σ x_i, Σ y_i)`.
pub fn product_coupling_sum(joints: &[JointPmf<u64>]) -> Result<JointPmf<u64>> {
    let product = product_coupling(joints)?;
    JointPmf::from_pairs(
        product
            .entries()
            .map(|(a, b, p, _)| ((a.iter().sum(), b.iter().sum()), p)),
    )
}

/// Classed coupons: `n_k` coupons in class `k`, each drawn with probability
/// `P_k`; the remaining mass is a blank coupon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouponModel {
    n_bar: Vec<u64>,
    p_bar: Vec<f64>,
    blank: f64,
}

impl CouponModel {
    pub fn new(n_bar: Vec<u64>, p_bar: Vec<f64>) -> Result<Self> {
        let used = compensated_sum(n_bar.iter().zip(&p_bar).map(|(&n, &p)| n as f64 * p));
        CouponModel::with_blank(n_bar, p_bar, (1.0 - used).max(0.0))
    }

    /// As [`CouponModel::new`], with the blank mass supplied directly (avoids
    /// computing it as `1 − Σ n_k P_k` when that difference is tiny).
    pub fn with_blank(n_bar: Vec<u64>, p_bar: Vec<f64>, blank: f64) -> Result<Self> {
        if n_bar.len() != p_bar.len() {
            return Err(Error::InvalidParameter(
                "n_bar and P_bar differ in length".into(),
            ));
        }
        if p_bar.iter().any(|p| !(0.0..=1.0).contains(p)) || !(0.0..=1.0).contains(&blank) {
            return Err(Error::InvalidParameter(
                "coupon probabilities must lie in [0, 1]".into(),
            ));
        }
        let used = compensated_sum(n_bar.iter().zip(&p_bar).map(|(&n, &p)| n as f64 * p));
        if used > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "Σ n_k P_k = {used} exceeds 1"
            )));
        }
        if (used + blank - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "class mass {used} plus blank {blank} is not 1"
            )));
        }
        Ok(CouponModel {
            n_bar,
            p_bar,
            blank,
        })
    }

    pub fn classes(&self) -> usize {
        self.n_bar.len()
    }

    pub fn n_bar(&self) -> &[u64] {
        &self.n_bar
    }

    pub fn p_bar(&self) -> &[f64] {
        &self.p_bar
    }

    pub fn blank_mass(&self) -> f64 {
        self.blank
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(usize, u64)> {
        let mut u = rng.random::<f64>();
        for (i, (&n, &p)) in self.n_bar.iter().zip(&self.p_bar).enumerate() {
            let class = n as f64 * p;
            if u < class {
                return Some((i, rng.random_range(0..n)));
            }
            u -= class;
        }
        None
    }
}

struct CouponRun<'a> {
    model: &'a CouponModel,
    hit: Vec<HashSet<u64>>,
}

impl<'a> CouponRun<'a> {
    fn new(model: &'a CouponModel) -> Self {
        CouponRun {
            model,
            hit: vec![HashSet::new(); model.classes()],
        }
    }

    fn advance<R: Rng + ?Sized>(&mut self, draws: u64, rng: &mut R) {
        for _ in 0..draws {
            if let Some((class, coupon)) = self.model.draw(rng) {
                self.hit[class].insert(coupon);
            }
        }
    }

    fn counts(&self) -> Vec<u64> {
        self.hit.iter().map(|h| h.len() as u64).collect()
    }
}

/// `X(M)`: distinct coupons of each class seen in `M` draws with replacement.
pub fn coupon_sample<R: Rng + ?Sized>(model: &CouponModel, draws: u64, rng: &mut R) -> Vec<u64> {
    let mut run = CouponRun::new(model);
    run.advance(draws, rng);
    run.counts()
}

/// `Y`: independent `Bin(n_k, P'_k)` per class.
pub fn coupon_y_sample<R: Rng + ?Sized>(
    model: &CouponModel,
    p_prime: &[f64],
    rng: &mut R,
) -> Result<Vec<u64>> {
    if p_prime.len() != model.classes() {
        return Err(Error::InvalidParameter(
            "P' has the wrong number of classes".into(),
        ));
    }
    model
        .n_bar
        .iter()
        .zip(p_prime)
        .map(|(&n, &p)| {
            Binomial::new(n, p)
                .map(|b| b.sample(rng))
                .map_err(|_| Error::out_of_range("P'_k", p, "[0, 1]"))
        })
        .collect()
}

/// `(X(M), X(M'))` sharing the first `M` draws, so `X(M) ≤ X(M')` coordinatewise.
pub fn coupon_extend_coupling<R: Rng + ?Sized>(
    model: &CouponModel,
    m: u64,
    m_prime: u64,
    rng: &mut R,
) -> Result<(Vec<u64>, Vec<u64>)> {
    if m > m_prime {
        return Err(Error::InvalidParameter(format!(
            "M = {m} exceeds M' = {m_prime}"
        )));
    }
    let mut run = CouponRun::new(model);
    run.advance(m, rng);
    let first = run.counts();
    run.advance(m_prime - m, rng);
    Ok((first, run.counts()))
}

/// Dense per-draw transition on the grid of hit-count vectors.
struct CouponChain {
    states: Vec<Vec<u64>>,
    strides: Vec<usize>,
    model: CouponModel,
}

impl CouponChain {
    fn new(model: &CouponModel) -> Result<Self> {
        let states = grid_states(&model.n_bar)?;
        let mut strides = vec![1usize; model.classes()];
        for i in (0..model.classes().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (model.n_bar[i + 1] as usize + 1);
        }
        Ok(CouponChain {
            states,
            strides,
            model: model.clone(),
        })
    }

    fn step(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (s, x) in self.states.iter().enumerate() {
            let w = v[s];
            if w == 0.0 {
                continue;
            }
            let mut moved = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                if xi < self.model.n_bar[i] {
                    let hit = (self.model.n_bar[i] - xi) as f64 * self.model.p_bar[i];
                    moved += hit;
                    out[s + self.strides[i]] += w * hit;
                }
            }
            out[s] += w * (1.0 - moved);
        }
        out
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        let size = self.states.len();
        (0..size)
            .map(|s| {
                let mut e = vec![0.0; size];
                e[s] = 1.0;
                self.step(&e)
            })
            .collect()
    }

    /// Rounding drift in the total mass grows linearly in the number of
    /// draws; it is divided out here.
    fn into_pmf(self, v: Vec<f64>) -> Result<FinitePmf<Vec<u64>>> {
        let total = compensated_sum(v.iter().copied());
        FinitePmf::new(
            self.states
                .into_iter()
                .zip(v.into_iter().map(|x| x / total))
                .collect(),
        )
    }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn vec_mat(v: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for (o, &mij) in out.iter_mut().zip(&m[i]) {
            *o += vi * mij;
        }
    }
    out
}

/// Exact law of `X(M)` by propagating the hit-count chain through `M` draws
/// (by repeated squaring when that is cheaper).
pub fn coupon_exact_pmf(model: &CouponModel, draws: u64) -> Result<FinitePmf<Vec<u64>>> {
    let chain = CouponChain::new(model)?;
    let size = chain.states.len() as f64;
    let per_draw = size * (model.classes() as f64 + 1.0) * draws as f64;
    let squaring = 2.0 * size.powi(3) * (64 - draws.leading_zeros()) as f64;
    if per_draw.min(squaring) > COUPON_WORK_LIMIT {
        return Err(Error::GuardExceeded {
            projected: per_draw.min(squaring),
            budget: COUPON_WORK_LIMIT,
        });
    }
    let mut v = vec![0.0; chain.states.len()];
    v[0] = 1.0;
    if squaring < per_draw {
        let mut power = chain.matrix();
        let mut d = draws;
        while d > 0 {
            if d & 1 == 1 {
                v = vec_mat(&v, &power);
            }
            d >>= 1;
            if d > 0 {
                power = mat_mul(&power, &power);
            }
        }
    } else {
        for _ in 0..draws {
            v = chain.step(&v);
        }
    }
    chain.into_pmf(v)
}

/// Law of `X(M)` with `M ~ Po(λ)`: independent `Bin(n_k, 1 − e^{−λ P_k})`.
pub fn poissonized_coupon_pmf(model: &CouponModel, lambda: f64) -> Result<FinitePmf<Vec<u64>>> {
    if !(lambda >= 0.0) {
        return Err(Error::out_of_range("lambda", lambda, ">= 0"));
    }
    let probs: Vec<f64> = model
        .p_bar
        .iter()
        .map(|&p| -(-lambda * p).exp_m1())
        .collect();
    product_binomial_pmf(&model.n_bar, &probs)
}

/// The same law computed by conditioning on `M` and summing
/// `P(M = j) · P(X(j) = x)` until the Poisson tail is below `1e-12`.
pub fn poissonized_coupon_pmf_by_conditioning(
    model: &CouponModel,
    lambda: f64,
) -> Result<FinitePmf<Vec<u64>>> {
    if !(0.0..=500.0).contains(&lambda) {
        return Err(Error::out_of_range("lambda", lambda, "[0, 500]"));
    }
    let chain = CouponChain::new(model)?;
    let mut v = vec![0.0; chain.states.len()];
    v[0] = 1.0;
    let mut acc = vec![0.0; v.len()];
    let mut seen = 0.0;
    let mut j = 0u64;
    loop {
        let w = poisson_pmf(lambda, j);
        for (a, &x) in acc.iter_mut().zip(&v) {
            *a += w * x;
        }
        seen += w;
        if j as f64 >= lambda && 1.0 - seen < POISSON_TAIL {
            break;
        }
        v = chain.step(&v);
        j += 1;
    }
    chain.into_pmf(acc)
}

fn check_prob(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::out_of_range(what, p, "[0, 1]"))
    }
}

/// Nested `G(n, p_1) ⊆ G(n, p_2) ⊆ …` from one uniform per pair.
pub fn couple_er_monotone<R: Rng + ?Sized>(
    n: usize,
    p_list: &[f64],
    rng: &mut R,
) -> Result<Vec<Graph>> {
    for &p in p_list {
        check_prob("p", p)?;
    }
    if p_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(
            "p_list must be sorted ascending".into(),
        ));
    }
    let mut edges = vec![Vec::new(); p_list.len()];
    for u in 0..n as Vertex {
        for v in u + 1..n as Vertex {
            let x = rng.random::<f64>();
            for (i, &p) in p_list.iter().enumerate().rev() {
                if x >= p {
                    break;
                }
                edges[i].push((u, v));
            }
        }
    }
    Ok(edges
        .into_iter()
        .map(|e| Graph::from_pairs_unchecked(n, e))
        .collect())
}

/// `(union, big)`: the union of independent `G(n, p_i)` and `G(n, min(1, Σ p_i))`,
/// coupled through one uniform per pair so that `union ⊆ big`.
pub fn union_er_coupling<R: Rng + ?Sized>(
    n: usize,
    p_list: &[f64],
    rng: &mut R,
) -> Result<(Graph, Graph)> {
    for &p in p_list {
        check_prob("p", p)?;
    }
    let p_union = -compensated_sum(p_list.iter().map(|&p| (-p).ln_1p())).exp_m1();
    let p_big = compensated_sum(p_list.iter().copied()).min(1.0);
    let (mut small, mut big) = (Vec::new(), Vec::new());
    for u in 0..n as Vertex {
        for v in u + 1..n as Vertex {
            let x = rng.random::<f64>();
            if x < p_union {
                small.push((u, v));
            }
            if x < p_big {
                big.push((u, v));
            }
        }
    }
    Ok((
        Graph::from_pairs_unchecked(n, small),
        Graph::from_pairs_unchecked(n, big),
    ))
}

/// `r = 1 − (1 − q³)^{1/6}`: per-bijection firing probability.
pub fn counterexample_r(q: f64) -> f64 {
    -((-(q * q * q)).ln_1p() / 6.0).exp_m1()
}

/// `r' = 1 − (1 − r)^{2(n−2)}`: edge probability of `G₃`.
pub fn counterexample_r_prime(n: u64, q: f64) -> f64 {
    let r = counterexample_r(q);
    -((2 * (n - 2)) as f64 * (-r).ln_1p()).exp_m1()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleSample {
    pub h3: Hypergraph,
    pub g3: Graph,
    pub r_prime: f64,
}

/// Fires each (3-set, labelling by {1,2,3}) pair independently with
/// probability `r`. A 3-set is an edge of `H3` when any of its six labellings
/// fires; the two vertices labelled 1 and 2 of a fired labelling form an edge
/// of `G3`. Hence `G3 ⊆ G(H3)` and `G3 ~ G(n, r')`, while `H3 ~ H^(3)(n, q³)`.
///
/// The fired labellings are drawn as a `Bin(6·C(n,3), r)` count followed by a
/// uniform subset of that size.
pub fn counterexample_coupling<R: Rng + ?Sized>(
    n: usize,
    q: f64,
    rng: &mut R,
) -> Result<CounterexampleSample> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::out_of_range("q", q, "(0, 1)"));
    }
    if n < 3 {
        return Err(Error::out_of_range("n", n, ">= 3"));
    }
    let triples =
        binomial(n as u64, 3).ok_or_else(|| Error::InvalidParameter("C(n, 3) overflows".into()))?;
    let slots = 6 * triples;
    let r = counterexample_r(q);
    let fired = Binomial::new(slots, r).expect("r in (0, 1)").sample(rng);
    let mut picks: Vec<u64> = index::sample(rng, slots as usize, fired as usize)
        .into_iter()
        .map(|i| i as u64)
        .collect();
    picks.sort_unstable();

    let mut h_edges = Vec::new();
    let mut g_edges = Vec::new();
    let mut set = Vec::with_capacity(3);
    for slot in picks {
        unrank_colex(slot / 6, 3, &mut set);
        // labellings come in pairs sharing the vertex labelled 3
        let third = (slot % 6 / 2) as usize;
        let pair: Vec<Vertex> = (0..3).filter(|&i| i != third).map(|i| set[i]).collect();
        g_edges.push((pair[0], pair[1]));
        h_edges.push(set.clone());
    }
    h_edges.dedup();
    Ok(CounterexampleSample {
        h3: Hypergraph::from_sorted_unchecked(n, 3, h_edges),
        g3: Graph::from_pairs_unchecked(n, g_edges),
        r_prime: counterexample_r_prime(n as u64, q),
    })
}

/// Independent draws of the two sides of the star comparison on
/// `X1 = 0..n`, `X2 = n..2n`: `H*` keeps each cross pair with probability
/// `q³`; `T*` marks each vertex with probability `Cq` and keeps each
/// marked-marked cross pair with probability `q`.
pub fn star_split_sample<R: Rng + ?Sized>(
    n: usize,
    q: f64,
    c: f64,
    rng: &mut R,
) -> Result<(Graph, Graph)> {
    check_prob("q", q)?;
    let cq = c * q;
    if !(0.0..=1.0 + 1e-12).contains(&cq) {
        return Err(Error::out_of_range("C * q", cq, "[0, 1]"));
    }
    let cq = cq.min(1.0);
    let q3 = q * q * q;
    let mut h = Vec::new();
    for x in 0..n as Vertex {
        for y in 0..n as Vertex {
            if rng.random::<f64>() < q3 {
                h.push((x, n as Vertex + y));
            }
        }
    }
    let left: Vec<Vertex> = (0..n as Vertex)
        .filter(|_| rng.random::<f64>() < cq)
        .collect();
    let right: Vec<Vertex> = (0..n as Vertex)
        .filter(|_| rng.random::<f64>() < cq)
        .collect();
    let mut t = Vec::new();
    for &x in &left {
        for &y in &right {
            if rng.random::<f64>() < q {
                t.push((x, n as Vertex + y));
            }
        }
    }
    Ok((
        Graph::from_pairs_unchecked(2 * n, h),
        Graph::from_pairs_unchecked(2 * n, t),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::is_subgraph;
    use crate::oracle::tv_exact;
    use crate::samplers::RngStream;
    use crate::stats::{binomial_pmf, chi_square_gof};
    use crate::Project;

    fn joint(pairs: &[((u64, u64), f64)]) -> JointPmf<u64> {
        JointPmf::from_pairs(pairs.iter().copied()).unwrap()
    }

    fn pmf(v: &[f64]) -> FinitePmf<u64> {
        FinitePmf::from_pairs((0..v.len() as u64).zip(v.iter().copied())).unwrap()
    }

    #[test]
    fn maximal_coupling_examples() {
        let a = pmf(&[0.5, 0.3, 0.2]);
        let b = pmf(&[0.2, 0.3, 0.5]);
        let same = maximal_coupling(&a, &a).unwrap();
        assert!((same.diagonal_mass() - 1.0).abs() < 1e-15);
        let j = maximal_coupling(&a, &b).unwrap();
        assert!((j.diagonal_mass() - 0.7).abs() < 1e-15);
        assert!(tv_exact(&j.marginal_a(), &a).unwrap() < 1e-15);
        assert!(tv_exact(&j.marginal_b(), &b).unwrap() < 1e-15);
        let d0 = pmf(&[1.0, 0.0]);
        let d1 = pmf(&[0.0, 1.0]);
        assert_eq!(maximal_coupling(&d0, &d1).unwrap().diagonal_mass(), 0.0);
        assert!(maximal_coupling(&a, &d0).is_err());
    }

    #[test]
    fn maximal_coupling_hits_tv_on_random_pmfs() {
        let mut rng = RngStream::new(51, 0).rng();
        for _ in 0..500 {
            let mut draw = || {
                let w: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
                let t: f64 = w.iter().sum();
                pmf(&w.iter().map(|x| x / t).collect::<Vec<_>>())
            };
            let (a, b) = (draw(), draw());
            let j = maximal_coupling(&a, &b).unwrap();
            assert!((j.diagonal_mass() - (1.0 - tv_exact(&a, &b).unwrap())).abs() < 1e-12);
        }
    }

    #[test]
    fn graph_codes_use_inclusion() {
        assert!(GraphCode(0b0101).precedes(&GraphCode(0b0111)));
        assert!(!GraphCode(0b1000).precedes(&GraphCode(0b0111)));
        assert!(vec![1u64, 2].precedes(&vec![1, 3]));
        assert!(!vec![2u64, 2].precedes(&vec![1, 3]));
    }

    #[test]
    fn composition_with_identity() {
        let id = joint(&[((0, 0), 0.4), ((1, 1), 0.6)]);
        let yz = joint(&[((0, 0), 0.1), ((0, 1), 0.3), ((1, 0), 0.2), ((1, 1), 0.4)]);
        let out = compose_couplings(&id, &yz).unwrap();
        for (a, b, p, _) in yz.entries() {
            assert!((out.mass(a, b) - p).abs() < 1e-15);
        }
    }

    #[test]
    fn composition_failure_bound() {
        // X ⪯ Y fails with mass 0.1, Y ⪯ Z with mass 0.2
        let xy = joint(&[((0, 0), 0.5), ((1, 1), 0.4), ((1, 0), 0.1)]);
        assert!((xy.failure_mass() - 0.1).abs() < 1e-15);
        let yz = joint(&[((0, 1), 0.6), ((1, 1), 0.2), ((1, 0), 0.2)]);
        assert!((yz.failure_mass() - 0.2).abs() < 1e-15);
        let xz = compose_couplings(&xy, &yz).unwrap();
        assert!(xz.failure_mass() <= 0.3 + 1e-15, "{}", xz.failure_mass());
        assert!(tv_exact(&xz.marginal_a(), &xy.marginal_a()).unwrap() < 1e-15);
        assert!(tv_exact(&xz.marginal_b(), &yz.marginal_b()).unwrap() < 1e-15);

        let ordered = joint(&[((0, 0), 0.5), ((0, 1), 0.5)]);
        let ordered2 = joint(&[((0, 1), 0.5), ((1, 1), 0.5)]);
        assert_eq!(
            compose_couplings(&ordered, &ordered2)
                .unwrap()
                .failure_mass(),
            0.0
        );

        let bad = joint(&[((0, 0), 0.9), ((1, 1), 0.1)]);
        assert!(matches!(
            compose_couplings(&xy, &bad),
            Err(Error::MarginalMismatch(_))
        ));
    }

    #[test]
    fn product_success_multiplies() {
        let a = joint(&[((0, 0), 0.9), ((1, 0), 0.1)]);
        let b = joint(&[((0, 1), 0.8), ((1, 0), 0.2)]);
        assert_eq!(
            product_coupling(std::slice::from_ref(&a))
                .unwrap()
                .success_mass(),
            0.9
        );
        let p = product_coupling(&[a.clone(), b.clone()]).unwrap();
        assert!((p.success_mass() - 0.72).abs() < 1e-15);
        let ok = joint(&[((0, 0), 0.3), ((0, 1), 0.7)]);
        assert!(
            (product_coupling(&[ok.clone(), ok.clone()])
                .unwrap()
                .success_mass()
                - 1.0)
                .abs()
                < 1e-15
        );
        let s = product_coupling_sum(&[ok.clone(), ok]).unwrap();
        assert_eq!(s.failure_mass(), 0.0);
        assert!((s.mass(&0, &2) - 0.49).abs() < 1e-15);
    }

    fn model(n: &[u64], p: &[f64]) -> CouponModel {
        CouponModel::new(n.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn coupon_trivial_cases() {
        let mut rng = RngStream::new(52, 0).rng();
        let m = model(&[3, 2], &[0.1, 0.2]);
        assert_eq!(coupon_sample(&m, 0, &mut rng), vec![0, 0]);
        let forced = model(&[1], &[1.0]);
        assert_eq!(coupon_sample(&forced, 1, &mut rng), vec![1]);
        assert!(CouponModel::new(vec![3], vec![0.5]).is_err());
    }

    /// `P(X = x)` for one class by enumerating all `(n+1)^M` draw sequences.
    fn enumerate_one_class(n: u64, p: f64, draws: u32) -> Vec<f64> {
        let outcomes = n + 1;
        let mut out = vec![0.0; n as usize + 1];
        for seq in 0..outcomes.pow(draws) {
            let (mut s, mut w, mut hit) = (seq, 1.0, HashSet::new());
            for _ in 0..draws {
                let c = s % outcomes;
                s /= outcomes;
                if c == n {
                    w *= 1.0 - n as f64 * p;
                } else {
                    w *= p;
                    hit.insert(c);
                }
            }
            out[hit.len()] += w;
        }
        out
    }

    #[test]
    fn coupon_pmf_matches_enumeration() {
        let m = model(&[3], &[0.2]);
        let exact = enumerate_one_class(3, 0.2, 2);
        assert!((exact[2] - 3.0 * 0.2 * 2.0 * 0.2).abs() < 1e-15);
        let dp = coupon_exact_pmf(&m, 2).unwrap();
        for x in 0..=3u64 {
            assert!((dp.mass(&vec![x]) - exact[x as usize]).abs() < 1e-15);
        }
        let mut rng = RngStream::new(53, 0).rng();
        let reps = 100_000;
        let twos = (0..reps)
            .filter(|_| coupon_sample(&m, 2, &mut rng)[0] == 2)
            .count() as f64;
        let sd = (exact[2] * (1.0 - exact[2]) / reps as f64).sqrt();
        assert!((twos / reps as f64 - exact[2]).abs() < 3.0 * sd);
    }

    #[test]
    fn squaring_and_stepping_agree() {
        let m = model(&[2, 3], &[0.05, 0.02]);
        let chain = CouponChain::new(&m).unwrap();
        let mut v = vec![0.0; chain.states.len()];
        v[0] = 1.0;
        for _ in 0..37 {
            v = chain.step(&v);
        }
        let stepped = chain.into_pmf(v).unwrap();
        let squared = coupon_exact_pmf(&m, 37).unwrap();
        assert!(tv_exact(&stepped, &squared).unwrap() < 1e-14);
    }

    #[test]
    fn poissonization_identity() {
        let m = model(&[2], &[0.3]);
        let zero = poissonized_coupon_pmf(&m, 0.0).unwrap();
        assert_eq!(zero.mass(&vec![0]), 1.0);
        let prod = poissonized_coupon_pmf(&m, 1.0).unwrap();
        let q = 1.0 - (-0.3f64).exp();
        for x in 0..=2 {
            assert!((prod.mass(&vec![x]) - binomial_pmf(2, q, x)).abs() < 1e-15);
        }
        let cond = poissonized_coupon_pmf_by_conditioning(&m, 1.0).unwrap();
        assert!(tv_exact(&prod, &cond).unwrap() < 1e-10);
        let m3 = model(&[4, 3], &[0.1, 0.05]);
        for &lambda in &[0.5, 3.0, 12.0] {
            let a = poissonized_coupon_pmf(&m3, lambda).unwrap();
            let b = poissonized_coupon_pmf_by_conditioning(&m3, lambda).unwrap();
            assert!(tv_exact(&a, &b).unwrap() < 1e-10);
        }
    }

    #[test]
    fn extension_is_monotone() {
        let m = model(&[3], &[0.2]);
        let mut rng = RngStream::new(54, 0).rng();
        let (a, b) = coupon_extend_coupling(&m, 4, 4, &mut rng).unwrap();
        assert_eq!(a, b);
        assert!(coupon_extend_coupling(&m, 5, 2, &mut rng).is_err());
        let reps = 100_000u64;
        let (mut h2, mut h5) = (vec![0u64; 4], vec![0u64; 4]);
        for _ in 0..reps {
            let (x, y) = coupon_extend_coupling(&m, 2, 5, &mut rng).unwrap();
            assert!(x.precedes(&y));
            h2[x[0] as usize] += 1;
            h5[y[0] as usize] += 1;
        }
        let e2 = enumerate_one_class(3, 0.2, 2);
        let e5 = enumerate_one_class(3, 0.2, 5);
        assert!(chi_square_gof(&h2, &e2).unwrap() > 0.01);
        assert!(chi_square_gof(&h5, &e5).unwrap() > 0.01);
    }

    #[test]
    fn monotone_er_nesting() {
        let mut rng = RngStream::new(55, 0).rng();
        let gs = couple_er_monotone(6, &[0.0, 1.0], &mut rng).unwrap();
        assert_eq!(gs[0], Graph::empty(6));
        assert_eq!(gs[1], Graph::complete(6));
        let gs = couple_er_monotone(6, &[0.4, 0.4], &mut rng).unwrap();
        assert_eq!(gs[0], gs[1]);
        assert!(couple_er_monotone(6, &[0.5, 0.1], &mut rng).is_err());
        let mut hist = vec![0u64; 1226];
        for _ in 0..20_000 {
            let gs = couple_er_monotone(50, &[0.1, 0.3], &mut rng).unwrap();
            assert!(is_subgraph(&gs[0], &gs[1]).unwrap());
            hist[gs[0].edge_count()] += 1;
        }
        let probs: Vec<f64> = (0..=1225).map(|k| binomial_pmf(1225, 0.1, k)).collect();
        assert!(chi_square_gof(&hist, &probs).unwrap() > 0.01);
    }

    #[test]
    fn union_coupling_contains() {
        let mut rng = RngStream::new(56, 0).rng();
        let (a, b) = union_er_coupling(8, &[0.3], &mut rng).unwrap();
        assert_eq!(a, b);
        let (_, big) = union_er_coupling(8, &[0.5, 0.5], &mut rng).unwrap();
        assert_eq!(big, Graph::complete(8));
        let mut edges = 0usize;
        let reps = 20_000;
        for _ in 0..reps {
            let (u, b) = union_er_coupling(30, &[0.01, 0.02, 0.03], &mut rng).unwrap();
            assert!(is_subgraph(&u, &b).unwrap());
            edges += u.edge_count();
        }
        let p = 1.0 - 0.99 * 0.98 * 0.97;
        let trials = (435 * reps) as f64;
        let sd = (p * (1.0 - p) / trials).sqrt();
        assert!((edges as f64 / trials - p).abs() < 3.0 * sd);
    }

    #[test]
    fn counterexample_values() {
        let r = counterexample_r(0.1);
        assert!((r - 1.667_361_535_794_662e-4).abs() < 1e-17, "{r}");
        let rp = counterexample_r_prime(10, 0.1);
        assert!((rp - 2.664_444_938_312_768e-3).abs() < 1e-16, "{rp}");
        let mut rng = RngStream::new(57, 0).rng();
        for _ in 0..20_000 {
            let s = counterexample_coupling(10, 0.3, &mut rng).unwrap();
            assert!(is_subgraph(&s.g3, &s.h3.project()).unwrap());
        }
        assert!(counterexample_coupling(2, 0.1, &mut rng).is_err());
        assert!(counterexample_coupling(5, 1.0, &mut rng).is_err());
    }

    #[test]
    fn star_means() {
        let mut rng = RngStream::new(58, 0).rng();
        let (h, t) = star_split_sample(10, 0.0, 5.5, &mut rng).unwrap();
        assert_eq!(h.edge_count() + t.edge_count(), 0);
        assert!(star_split_sample(10, 0.5, 5.5, &mut rng).is_err());
        let reps = 100_000;
        let (mut eh, mut et) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
        for _ in 0..reps {
            let (h, t) = star_split_sample(30, 0.05, 5.5, &mut rng).unwrap();
            eh.push(h.edge_count() as f64);
            et.push(t.edge_count() as f64);
        }
        let check = |xs: &[f64], mean: f64| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            assert!(
                (m - mean).abs() < 3.0 * (var / xs.len() as f64).sqrt(),
                "{m} vs {mean}"
            );
        };
        check(&eh, 900.0 * 0.05f64.powi(3));
        check(&et, (5.5f64 * 0.05).powi(2) * 900.0 * 0.05);
    }
}
