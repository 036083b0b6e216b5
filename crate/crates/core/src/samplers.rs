//! Random generators for `G(n, p)`, `G(n, m, p)` and i.i.d. hypergraphs.
//!
//! `G(n, m, p)` comes in two formulations with identical projected-graph laws:
//! [`sample_rig_naive`] flips all `m·n` membership coins, while
//! [`sample_rig_stratified`] first draws how many features have each vertex-set
//! size (an exact multinomial, built from conditional binomials) and then gives
//! every feature of size `k` a uniform `k`-subset. Only the features of size at
//! least two are materialised, which keeps `m ~ 10^13` affordable.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::combin::{binomial, for_each_k_subset};
use crate::error::{Error, Result};
use crate::graph::{
    project_sets, FeatureAssignment, Graph, Hypergraph, PartiteHypergraph, Project, Vertex,
};
use crate::thresholds::size_distribution;

/// Work guard for the naive sampler.
pub const NAIVE_GUARD: u64 = 1_000_000_000;
/// Largest `C(n, k)` for which i.i.d. hypergraphs are sampled edge by edge.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;
/// Expected-count cutoff used by [`auto_k_max`].
pub const TRUNCATION_MASS: f64 = 1e-12;

/// A reproducible ChaCha8 stream: equal `(seed, stream_id)` give equal output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Stream for replicate `rep` of grid cell `cell`.
    pub fn for_replicate(seed: u64, cell: u32, rep: u32) -> Self {
        RngStream::new(seed, (u64::from(cell) << 32) | u64::from(rep))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn check_prob(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::out_of_range(what, p, "[0, 1]"))
    }
}

/// `G(n, p)`: every pair independently with probability `p`.
pub fn sample_er<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    check_prob("p", p)?;
    if p == 0.0 || n < 2 {
        return Ok(Graph::empty(n));
    }
    if p == 1.0 {
        return Ok(Graph::complete(n));
    }
    let mut edges = Vec::new();
    if p < 0.25 {
        // jump straight to the next present pair
        let geo = Geometric::new(p).expect("p in (0, 1)");
        let (mut u, mut v) = (0usize, 0usize);
        loop {
            let mut skip = geo.sample(rng) as usize + 1;
            // advance `skip` pairs in lexicographic order from (u, v)
            loop {
                let left_in_row = n - 1 - v.max(u);
                if skip <= left_in_row {
                    v = v.max(u) + skip;
                    break;
                }
                skip -= left_in_row;
                u += 1;
                v = u;
                if u >= n - 1 {
                    return Ok(Graph::from_pairs_unchecked(n, edges));
                }
            }
            edges.push((u as Vertex, v as Vertex));
        }
    }
    for u in 0..n as Vertex {
        for v in u + 1..n as Vertex {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(Graph::from_pairs_unchecked(n, edges))
}

/// `G(n, m, p)` by `m·n` independent membership coins.
pub fn sample_rig_naive<R: Rng + ?Sized>(
    n: usize,
    m: u64,
    p: f64,
    rng: &mut R,
) -> Result<FeatureAssignment> {
    check_prob("p", p)?;
    let work = m.saturating_mul(n as u64);
    if work > NAIVE_GUARD {
        return Err(Error::GuardExceeded {
            projected: work as f64,
            budget: NAIVE_GUARD as f64,
        });
    }
    let sets = (0..m)
        .map(|_| {
            (0..n as Vertex)
                .filter(|_| rng.random::<f64>() < p)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(FeatureAssignment::from_sorted_unchecked(n, sets))
}

/// Features of `G(n, m, p)` grouped by vertex-set size.
#[derive(Clone, Debug, PartialEq)]
pub struct StratifiedFeatures {
    n: usize,
    /// `counts[k]`: number of features with `|V(w)| = k`.
    counts: Vec<u64>,
    /// `sets[k]`: the sampled `k`-subsets, with multiplicity (empty for `k < 2`).
    sets: Vec<Vec<Vec<Vertex>>>,
    warnings: Vec<String>,
}

impl StratifiedFeatures {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sets_of_size(&self, k: usize) -> &[Vec<Vertex>] {
        self.sets.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

impl Project for StratifiedFeatures {
    fn project(&self) -> Graph {
        project_sets(self.n, self.sets.iter().flatten().map(Vec::as_slice))
    }
}

/// Order in which feature sizes are drawn, with the conditional success
/// probability of each binomial step. The size left over is 0.
///
/// Sizes are visited from `n` down to `1`; the conditioning mass `Σ_{j<=k} π_j`
/// is accumulated from the bottom so no step subtracts nearly equal numbers.
pub(crate) fn sequential_plan(pis: &[f64]) -> Vec<(usize, f64)> {
    let mut prefix = Vec::with_capacity(pis.len());
    let mut acc = 0.0;
    for &pi in pis {
        acc += pi;
        prefix.push(acc);
    }
    (1..pis.len())
        .rev()
        .map(|k| {
            let cond = if pis[k] == 0.0 {
                0.0
            } else {
                (pis[k] / prefix[k]).min(1.0)
            };
            (k, cond)
        })
        .collect()
}

/// Smallest `K >= 2` such that `m · Σ_{k>K} π_k < 1e-12`.
pub fn auto_k_max(n: usize, m: u64, p: f64) -> usize {
    let pis = size_distribution(n as u64, p);
    let mut tail = 0.0;
    for k in (2..=n).rev() {
        if m as f64 * (tail + pis[k]) >= TRUNCATION_MASS {
            return k;
        }
        tail += pis[k];
    }
    2.min(n)
}

/// `G(n, m, p)` in size-stratified form.
///
/// With `k_max = Some(K)` the sizes above `K` are not drawn; their mass is
/// folded into size 0 and a warning records the expected number of dropped
/// features.
pub fn sample_rig_stratified<R: Rng + ?Sized>(
    n: usize,
    m: u64,
    p: f64,
    rng: &mut R,
    k_max: Option<usize>,
) -> Result<StratifiedFeatures> {
    check_prob("p", p)?;
    let mut pis = size_distribution(n as u64, p);
    let mut warnings = Vec::new();
    if let Some(kmax) = k_max {
        if kmax < n {
            let dropped: f64 = pis[kmax + 1..].iter().sum();
            for pi in &mut pis[kmax + 1..] {
                *pi = 0.0;
            }
            pis[0] += dropped;
            let expected = m as f64 * dropped;
            let note = if expected < TRUNCATION_MASS {
                ""
            } else {
                " (not negligible)"
            };
            warnings.push(format!(
                "feature sizes above {kmax} truncated: expected {expected:.3e} dropped features{note}"
            ));
        }
    }

    let mut counts = vec![0u64; n + 1];
    let mut remaining = m;
    for (k, cond) in sequential_plan(&pis) {
        if remaining == 0 {
            break;
        }
        if cond > 0.0 {
            let c = Binomial::new(remaining, cond)
                .expect("conditional probability in [0, 1]")
                .sample(rng);
            counts[k] = c;
            remaining -= c;
        }
    }
    counts[0] = remaining;

    let mut sets = vec![Vec::new(); n + 1];
    for k in 2..=n {
        sets[k] = (0..counts[k]).map(|_| uniform_subset(rng, n, k)).collect();
    }
    Ok(StratifiedFeatures {
        n,
        counts,
        sets,
        warnings,
    })
}

fn uniform_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<Vertex> {
    let mut s: Vec<Vertex> = index::sample(rng, n, k)
        .into_iter()
        .map(|v| v as Vertex)
        .collect();
    s.sort_unstable();
    s
}

/// `H^(k)(n, q)`: each `k`-subset of `0..n` independently with probability `q`.
pub fn sample_iid_hypergraph<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    q: f64,
    rng: &mut R,
) -> Result<Hypergraph> {
    check_prob("q", q)?;
    if k < 2 || k > n {
        return Err(Error::out_of_range("k", k, "2..=n"));
    }
    let total = binomial(n as u64, k as u64)
        .ok_or_else(|| Error::InvalidParameter(format!("C({n}, {k}) overflows u64")))?;
    let mut edges = Vec::new();
    if total <= ENUMERATION_LIMIT {
        for_each_k_subset(n, k, |s| {
            if rng.random::<f64>() < q {
                edges.push(s.to_vec());
            }
        });
    } else {
        let count = Binomial::new(total, q).expect("q in [0, 1]").sample(rng);
        let mut seen = HashSet::with_capacity(count as usize);
        while (seen.len() as u64) < count {
            seen.insert(uniform_subset(rng, n, k));
        }
        edges = seen.into_iter().collect();
    }
    Ok(Hypergraph::from_sorted_unchecked(n, k, edges))
}

/// `H_{k×n}(r)`: each transversal `k`-tuple of `k` parts of size `n` with probability `r`.
pub fn sample_partite_hypergraph<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    r: f64,
    rng: &mut R,
) -> Result<PartiteHypergraph> {
    check_prob("r", r)?;
    if k < 2 {
        return Err(Error::out_of_range("k", k, ">= 2"));
    }
    let total = (n as u64)
        .checked_pow(k as u32)
        .ok_or_else(|| Error::InvalidParameter(format!("{n}^{k} overflows u64")))?;
    let decode = |mut idx: u64| -> Vec<Vertex> {
        let mut e = vec![0; k];
        for slot in e.iter_mut().rev() {
            *slot = (idx % n as u64) as Vertex;
            idx /= n as u64;
        }
        e
    };
    let picked: Vec<u64> = if total <= ENUMERATION_LIMIT {
        (0..total).filter(|_| rng.random::<f64>() < r).collect()
    } else {
        let count = Binomial::new(total, r).expect("r in [0, 1]").sample(rng);
        let mut seen = HashSet::with_capacity(count as usize);
        while (seen.len() as u64) < count {
            seen.insert(rng.random_range(0..total));
        }
        seen.into_iter().collect()
    };
    PartiteHypergraph::uniform(k, n, picked.into_iter().map(decode))
}

/// Read-only access to the feature sets of either `G(n, m, p)` representation.
pub trait FeatureSets {
    fn n(&self) -> usize;
    fn feature_sets(&self) -> Box<dyn Iterator<Item = &[Vertex]> + '_>;
}

impl FeatureSets for FeatureAssignment {
    fn n(&self) -> usize {
        FeatureAssignment::n(self)
    }

    fn feature_sets(&self) -> Box<dyn Iterator<Item = &[Vertex]> + '_> {
        Box::new(self.sets().iter().map(Vec::as_slice))
    }
}

impl FeatureSets for StratifiedFeatures {
    fn n(&self) -> usize {
        self.n
    }

    fn feature_sets(&self) -> Box<dyn Iterator<Item = &[Vertex]> + '_> {
        Box::new(self.sets.iter().flatten().map(Vec::as_slice))
    }
}

/// `H^(k)` for every size `k >= 2` that occurs: the distinct vertex sets of size `k`.
pub fn decompose_by_size<F: FeatureSets + ?Sized>(f: &F) -> BTreeMap<usize, Hypergraph> {
    let mut by_size: BTreeMap<usize, Vec<Vec<Vertex>>> = BTreeMap::new();
    for s in f.feature_sets().filter(|s| s.len() >= 2) {
        by_size.entry(s.len()).or_default().push(s.to_vec());
    }
    by_size
        .into_iter()
        .map(|(k, edges)| (k, Hypergraph::from_sorted_unchecked(f.n(), k, edges)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::union_graphs;
    use crate::stats::chi_square_gof;

    fn binom_pmf(n: u64, p: f64) -> Vec<f64> {
        (0..=n)
            .map(|k| {
                binomial(n, k).unwrap() as f64 * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
            })
            .collect()
    }

    #[test]
    fn er_degenerate_probabilities() {
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(sample_er(7, 0.0, &mut rng).unwrap(), Graph::empty(7));
        assert_eq!(sample_er(7, 1.0, &mut rng).unwrap(), Graph::complete(7));
        assert!(sample_er(7, 1.5, &mut rng).is_err());
    }

    #[test]
    fn er_edge_count_is_binomial() {
        for &p in &[0.5, 0.1] {
            let mut rng = RngStream::new(11, 0).rng();
            let mut hist = vec![0u64; 7];
            for _ in 0..100_000 {
                hist[sample_er(4, p, &mut rng).unwrap().edge_count()] += 1;
            }
            let pv = chi_square_gof(&hist, &binom_pmf(6, p)).unwrap();
            assert!(pv > 0.01, "p={p}: chi-square p-value {pv}");
        }
    }

    #[test]
    fn er_skipping_covers_every_pair() {
        // every pair must be reachable by the geometric walk
        let mut rng = RngStream::new(3, 0).rng();
        let mut hits = vec![0u32; crate::graph::pair_count(9)];
        for _ in 0..20_000 {
            for &(u, v) in sample_er(9, 0.2, &mut rng).unwrap().edges() {
                hits[crate::graph::pair_index(9, u, v)] += 1;
            }
        }
        for &h in &hits {
            // 20000 * 0.2 = 4000, sd ≈ 57
            assert!((h as f64 - 4000.0).abs() < 300.0, "{hits:?}");
        }
    }

    #[test]
    fn naive_degenerate_probabilities() {
        let mut rng = RngStream::new(2, 0).rng();
        let f = sample_rig_naive(5, 4, 0.0, &mut rng).unwrap();
        assert!(f.sets().iter().all(Vec::is_empty));
        let f = sample_rig_naive(5, 4, 1.0, &mut rng).unwrap();
        assert!(f.sets().iter().all(|s| s.len() == 5));
        assert!(matches!(
            sample_rig_naive(10_000, 1_000_000, 0.1, &mut rng),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn stratified_zero_p() {
        let mut rng = RngStream::new(3, 0).rng();
        let s = sample_rig_stratified(6, 17, 0.0, &mut rng, None).unwrap();
        assert_eq!(s.counts()[0], 17);
        assert!(s.counts()[1..].iter().all(|&c| c == 0));
        assert_eq!(s.project(), Graph::empty(6));
    }

    #[test]
    fn stratified_sets_have_their_size() {
        let mut rng = RngStream::new(4, 0).rng();
        let s = sample_rig_stratified(8, 200, 0.3, &mut rng, None).unwrap();
        assert_eq!(s.m(), 200);
        for k in 2..=8 {
            assert_eq!(s.sets_of_size(k).len() as u64, s.counts()[k]);
            for set in s.sets_of_size(k) {
                assert_eq!(set.len(), k);
                assert!(set.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn stratified_large_m_is_fast_and_unbiased() {
        let (n, m, p) = (500usize, 62_500_000_000u64, 4.5e-7);
        let pi2 = size_distribution(n as u64, p)[2];
        let mean = m as f64 * pi2;
        let reps = 1000;
        let start = std::time::Instant::now();
        let mut total = 0.0;
        for r in 0..reps {
            let mut rng = RngStream::new(5, r).rng();
            total += sample_rig_stratified(n, m, p, &mut rng, None)
                .unwrap()
                .counts()[2] as f64;
        }
        let per_call = start.elapsed().as_secs_f64() / reps as f64;
        assert!(per_call < 1.0, "{per_call}s per sample");
        let sd = (mean * (1.0 - pi2) / reps as f64).sqrt();
        assert!((total / reps as f64 - mean).abs() < 3.0 * sd);
    }

    #[test]
    fn truncation_folds_mass_into_size_zero() {
        let mut rng = RngStream::new(6, 0).rng();
        let s = sample_rig_stratified(10, 1000, 0.2, &mut rng, Some(3)).unwrap();
        assert!(s.counts()[4..].iter().all(|&c| c == 0));
        assert_eq!(s.m(), 1000);
        assert!(s.warnings()[0].contains("not negligible"));
        let k = auto_k_max(500, 62_500_000_000, 4.5e-7);
        assert!((3..=6).contains(&k), "{k}");
        let s = sample_rig_stratified(500, 62_500_000_000, 4.5e-7, &mut rng, Some(k)).unwrap();
        assert!(!s.warnings()[0].contains("not negligible"));
    }

    #[test]
    fn hypergraph_degenerate_probabilities() {
        let mut rng = RngStream::new(7, 0).rng();
        assert_eq!(
            sample_iid_hypergraph(6, 3, 0.0, &mut rng)
                .unwrap()
                .edge_count(),
            0
        );
        assert_eq!(
            sample_iid_hypergraph(6, 3, 1.0, &mut rng)
                .unwrap()
                .edge_count(),
            20
        );
        assert!(sample_iid_hypergraph(6, 7, 0.5, &mut rng).is_err());
        assert!(sample_iid_hypergraph(6, 1, 0.5, &mut rng).is_err());
    }

    #[test]
    fn hypergraph_edge_count_is_binomial() {
        let mut rng = RngStream::new(8, 0).rng();
        let mut hist = vec![0u64; 21];
        for _ in 0..100_000 {
            hist[sample_iid_hypergraph(6, 3, 0.1, &mut rng)
                .unwrap()
                .edge_count()] += 1;
        }
        let pv = chi_square_gof(&hist, &binom_pmf(20, 0.1)).unwrap();
        assert!(pv > 0.01, "{pv}");
    }

    #[test]
    fn hypergraph_rejection_path() {
        // C(200, 4) ≈ 6.5e7 > enumeration limit
        let mut rng = RngStream::new(9, 0).rng();
        let q = 1e-6;
        let mut total = 0usize;
        for _ in 0..200 {
            let h = sample_iid_hypergraph(200, 4, q, &mut rng).unwrap();
            assert!(h.edges().iter().all(|e| e.len() == 4));
            total += h.edge_count();
        }
        let mean = binomial(200, 4).unwrap() as f64 * q;
        let sd = (mean / 200.0).sqrt();
        assert!((total as f64 / 200.0 - mean).abs() < 4.0 * sd);
    }

    #[test]
    fn decompose_example() {
        let f = FeatureAssignment::new(4, vec![vec![0, 1], vec![0, 1, 2], vec![3]]).unwrap();
        let d = decompose_by_size(&f);
        assert_eq!(d.len(), 2);
        assert_eq!(d[&2].edges(), &[vec![0, 1]]);
        assert_eq!(d[&3].edges(), &[vec![0, 1, 2]]);
        let empty = FeatureAssignment::new(4, vec![vec![]; 3]).unwrap();
        assert!(decompose_by_size(&empty).is_empty());
    }

    #[test]
    fn decomposition_identity_on_random_instances() {
        let mut rng = RngStream::new(10, 0).rng();
        for _ in 0..10_000 {
            let f = sample_rig_naive(6, 20, 0.3, &mut rng).unwrap();
            let parts: Vec<Graph> = decompose_by_size(&f)
                .values()
                .map(|h| h.project())
                .collect();
            let union = if parts.is_empty() {
                Graph::empty(6)
            } else {
                union_graphs(&parts).unwrap()
            };
            assert_eq!(union, f.project());
        }
    }

    #[test]
    fn same_stream_same_samples() {
        let a = sample_er(30, 0.2, &mut RngStream::new(42, 3).rng()).unwrap();
        let b = sample_er(30, 0.2, &mut RngStream::new(42, 3).rng()).unwrap();
        assert_eq!(a, b);
        let c = sample_er(30, 0.2, &mut RngStream::new(42, 4).rng()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let n = 200_000;
        let mut a = RngStream::new(42, 0).rng();
        let mut b = RngStream::new(42, 1).rng();
        let xs: Vec<f64> = (0..n).map(|_| a.random::<f64>()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.random::<f64>()).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / n as f64;
        let corr = cov / (1.0 / 12.0);
        // sd of the sample correlation ≈ 1/sqrt(n)
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "{corr}");
    }

    #[test]
    fn partite_sampler_counts() {
        let mut rng = RngStream::new(12, 0).rng();
        let h = sample_partite_hypergraph(3, 4, 1.0, &mut rng).unwrap();
        assert_eq!(h.edges().len(), 64);
        let h = sample_partite_hypergraph(3, 4, 0.0, &mut rng).unwrap();
        assert!(h.edges().is_empty());
    }
}
