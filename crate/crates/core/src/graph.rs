//! Graph and hypergraph value types.
//!
//! Every structure here is immutable after construction and stores its edges
//! canonically: vertices inside an edge are sorted, and the edge list itself is
//! sorted and deduplicated. Two values are therefore equal exactly when they
//! describe the same (hyper)graph, which lets them serve as keys of exact
//! probability mass functions.
//!
//! Graphs on at most [`MAX_CODE_VERTICES`] vertices also have a fixed-width
//! bit encoding (one bit per vertex pair, lexicographic pair order) used by the
//! exhaustive oracles.

use std::fmt;

use crate::error::{Error, Result};

pub type Vertex = u32;

/// Largest vertex count whose `C(n, 2)` pairs fit in a `u64` code.
pub const MAX_CODE_VERTICES: usize = 11;

/// A simple undirected graph on the vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Graph {
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n as Vertex {
            for v in u + 1..n as Vertex {
                edges.push((u, v));
            }
        }
        Graph { n, edges }
    }

    /// Builds a graph from arbitrary unordered pairs. Duplicates are merged;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut out = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {u}")));
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::out_of_range("edge endpoint", u.max(v), "0..n"));
            }
            out.push((u.min(v), u.max(v)));
        }
        Ok(Self::from_pairs_unchecked(n, out))
    }

    /// Pairs must already satisfy `u < v < n`; sorting and dedup happen here.
    pub(crate) fn from_pairs_unchecked(n: usize, mut edges: Vec<(Vertex, Vertex)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        debug_assert!(edges.iter().all(|&(u, v)| u < v && (v as usize) < n));
        Graph { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).is_ok()
    }

    /// Sorted neighbour lists.
    pub fn adjacency(&self) -> Vec<Vec<Vertex>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Bit-vector code over the `C(n, 2)` possible edges; `None` when `n` is too large.
    pub fn encode(&self) -> Option<u64> {
        if self.n > MAX_CODE_VERTICES {
            return None;
        }
        Some(
            self.edges
                .iter()
                .fold(0u64, |acc, &(u, v)| acc | 1 << pair_index(self.n, u, v)),
        )
    }

    pub fn decode(n: usize, code: u64) -> Result<Self> {
        if n > MAX_CODE_VERTICES {
            return Err(Error::out_of_range("n", n, "0..=11 for bit codes"));
        }
        let pairs = pair_count(n);
        if pairs < 64 && code >> pairs != 0 {
            return Err(Error::InvalidParameter(format!(
                "code {code:#x} has bits beyond the {pairs} pairs of n={n}"
            )));
        }
        let edges = (0..pairs)
            .filter(|&i| code >> i & 1 == 1)
            .map(|i| pair_from_index(n, i))
            .collect();
        Ok(Graph { n, edges })
    }

    /// Canonical text form: an `n=<int>` header then one `u v` line per edge.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses the canonical text form. Blank lines and `#` comment lines are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            if n.is_none() {
                let value = line
                    .strip_prefix("n=")
                    .ok_or_else(|| err("expected `n=<int>` header"))?;
                n = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| err("bad vertex count"))?,
                );
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<Vertex> {
                parts
                    .next()
                    .ok_or_else(|| err("expected two vertices"))?
                    .parse()
                    .map_err(|_| err("bad vertex index"))
            };
            let (u, v) = (next()?, next()?);
            edges.push((u, v));
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "missing `n=` header".into(),
        })?;
        Graph::from_edges(n, edges)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        for (u, v) in &self.edges {
            writeln!(f, "{u} {v}")?;
        }
        Ok(())
    }
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Lexicographic index of the pair `{u, v}` among all pairs of `0..n`.
pub fn pair_index(n: usize, u: Vertex, v: Vertex) -> usize {
    let (u, v) = (u.min(v) as usize, u.max(v) as usize);
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

pub fn pair_from_index(n: usize, mut index: usize) -> (Vertex, Vertex) {
    let mut u = 0;
    while index >= n - u - 1 {
        index -= n - u - 1;
        u += 1;
    }
    (u as Vertex, (u + 1 + index) as Vertex)
}

/// A `k`-uniform hypergraph on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hypergraph {
    n: usize,
    k: usize,
    edges: Vec<Vec<Vertex>>,
}

impl Hypergraph {
    pub fn empty(n: usize, k: usize) -> Result<Self> {
        Self::from_edges(n, k, Vec::<Vec<Vertex>>::new())
    }

    pub fn from_edges<I, E>(n: usize, k: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<Vec<Vertex>>,
    {
        if k < 2 {
            return Err(Error::out_of_range("k", k, ">= 2"));
        }
        let mut out = Vec::new();
        for e in edges {
            let mut e: Vec<Vertex> = e.into();
            e.sort_unstable();
            e.dedup();
            if e.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "hyperedge {e:?} does not have {k} distinct vertices"
                )));
            }
            if e.iter().any(|&v| v as usize >= n) {
                return Err(Error::out_of_range("hyperedge vertex", e[k - 1], "0..n"));
            }
            out.push(e);
        }
        Ok(Self::from_sorted_unchecked(n, k, out))
    }

    /// Each edge must already be a sorted list of `k` distinct vertices below `n`.
    pub(crate) fn from_sorted_unchecked(n: usize, k: usize, mut edges: Vec<Vec<Vertex>>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        Hypergraph { n, k, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Vec<Vertex>] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, edge: &[Vertex]) -> bool {
        self.edges
            .binary_search_by(|e| e.as_slice().cmp(edge))
            .is_ok()
    }
}

/// A `k`-partite `k`-uniform hypergraph; coordinate `i` of every edge indexes
/// into part `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartiteHypergraph {
    part_sizes: Vec<usize>,
    edges: Vec<Vec<Vertex>>,
}

impl PartiteHypergraph {
    pub fn new<I, E>(part_sizes: Vec<usize>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<Vec<Vertex>>,
    {
        let k = part_sizes.len();
        if k < 2 {
            return Err(Error::out_of_range("number of parts", k, ">= 2"));
        }
        let mut out = Vec::new();
        for e in edges {
            let e: Vec<Vertex> = e.into();
            if e.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "partite edge {e:?} does not have {k} coordinates"
                )));
            }
            if e.iter()
                .zip(&part_sizes)
                .any(|(&x, &size)| x as usize >= size)
            {
                return Err(Error::InvalidParameter(format!(
                    "partite edge {e:?} leaves its parts {part_sizes:?}"
                )));
            }
            out.push(e);
        }
        out.sort_unstable();
        out.dedup();
        Ok(PartiteHypergraph {
            part_sizes,
            edges: out,
        })
    }

    /// `k` parts of `n` vertices each.
    pub fn uniform<I, E>(k: usize, n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<Vec<Vertex>>,
    {
        Self::new(vec![n; k], edges)
    }

    pub fn k(&self) -> usize {
        self.part_sizes.len()
    }

    pub fn part_sizes(&self) -> &[usize] {
        &self.part_sizes
    }

    pub fn edges(&self) -> &[Vec<Vertex>] {
        &self.edges
    }

    /// Global vertex id of index `j` in part `i` (parts laid out consecutively).
    pub fn vertex_id(&self, part: usize, index: Vertex) -> Vertex {
        self.part_sizes[..part].iter().sum::<usize>() as Vertex + index
    }

    pub fn total_vertices(&self) -> usize {
        self.part_sizes.iter().sum()
    }
}

/// Incidence between `n` vertices and `m` features: for each feature `w`, the
/// sorted set `V(w)` of vertices that picked it. Empty and singleton sets are kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureAssignment {
    n: usize,
    sets: Vec<Vec<Vertex>>,
}

impl FeatureAssignment {
    pub fn new(n: usize, sets: Vec<Vec<Vertex>>) -> Result<Self> {
        let mut sets = sets;
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
            if s.last().is_some_and(|&v| v as usize >= n) {
                return Err(Error::out_of_range(
                    "feature member",
                    s[s.len() - 1],
                    "0..n",
                ));
            }
        }
        Ok(FeatureAssignment { n, sets })
    }

    pub(crate) fn from_sorted_unchecked(n: usize, sets: Vec<Vec<Vertex>>) -> Self {
        FeatureAssignment { n, sets }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.sets.len()
    }

    /// `V(w)` for every feature, in feature order.
    pub fn sets(&self) -> &[Vec<Vertex>] {
        &self.sets
    }

    /// Vertex-side view: `W(v)` for each vertex.
    pub fn features_of_vertices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for (w, set) in self.sets.iter().enumerate() {
            for &v in set {
                out[v as usize].push(w);
            }
        }
        out
    }

    /// Keeps only the features whose vertex set has exactly `k` members.
    pub fn restrict_to_size(&self, k: usize) -> FeatureAssignment {
        FeatureAssignment {
            n: self.n,
            sets: self.sets.iter().filter(|s| s.len() == k).cloned().collect(),
        }
    }
}

/// Anything whose projection `G H` is defined: pairs covered by a common edge or feature.
pub trait Project {
    fn project(&self) -> Graph;
}

pub(crate) fn push_clique(set: &[Vertex], out: &mut Vec<(Vertex, Vertex)>) {
    for (i, &u) in set.iter().enumerate() {
        for &v in &set[i + 1..] {
            out.push((u, v));
        }
    }
}

/// Union of the cliques spanned by `sets`, on `n` vertices. Sets must be sorted.
pub(crate) fn project_sets<'a, I>(n: usize, sets: I) -> Graph
where
    I: IntoIterator<Item = &'a [Vertex]>,
{
    let mut pairs = Vec::new();
    for s in sets {
        push_clique(s, &mut pairs);
    }
    Graph::from_pairs_unchecked(n, pairs)
}

impl Project for Hypergraph {
    fn project(&self) -> Graph {
        project_sets(self.n, self.edges.iter().map(Vec::as_slice))
    }
}

impl Project for FeatureAssignment {
    fn project(&self) -> Graph {
        project_sets(self.n, self.sets.iter().map(Vec::as_slice))
    }
}

impl Project for PartiteHypergraph {
    /// Vertices are the disjoint union of the parts, before any merging.
    fn project(&self) -> Graph {
        let offsets: Vec<Vertex> = self
            .part_sizes
            .iter()
            .scan(0usize, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o as Vertex)
            })
            .collect();
        let mut pairs = Vec::new();
        let mut ids = Vec::with_capacity(self.k());
        for e in &self.edges {
            ids.clear();
            ids.extend(e.iter().zip(&offsets).map(|(&x, &o)| x + o));
            push_clique(&ids, &mut pairs);
        }
        Graph::from_pairs_unchecked(self.total_vertices(), pairs)
    }
}

pub fn project_to_graph<H: Project + ?Sized>(h: &H) -> Graph {
    h.project()
}

/// Identifies vertex `j` of every part with vertex `j`, dropping edges whose
/// image has fewer than `k` distinct vertices.
pub fn merge_partite(h: &PartiteHypergraph) -> Result<Hypergraph> {
    let n = h.part_sizes[0];
    if h.part_sizes.iter().any(|&s| s != n) {
        return Err(Error::UnequalPartSizes(h.part_sizes.clone()));
    }
    let k = h.k();
    let edges = h
        .edges
        .iter()
        .filter_map(|e| {
            let mut img = e.clone();
            img.sort_unstable();
            img.dedup();
            (img.len() == k).then_some(img)
        })
        .collect();
    Ok(Hypergraph::from_sorted_unchecked(n, k, edges))
}

/// Graph-level counterpart of [`merge_partite`]: vertex `i*n + j` becomes `j`,
/// and pairs that collapse onto one vertex are dropped.
pub fn merge_partite_graph(g: &Graph, k: usize, n: usize) -> Result<Graph> {
    if g.n() != k * n {
        return Err(Error::VertexCountMismatch(g.n(), k * n));
    }
    let pairs = g
        .edges
        .iter()
        .map(|&(u, v)| (u % n as Vertex, v % n as Vertex))
        .filter(|(u, v)| u != v)
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    Ok(Graph::from_pairs_unchecked(n, pairs))
}

pub fn union_graphs(gs: &[Graph]) -> Result<Graph> {
    let first = gs
        .first()
        .ok_or_else(|| Error::InvalidParameter("union of an empty list".into()))?;
    let n = first.n;
    let mut pairs = Vec::new();
    for g in gs {
        if g.n != n {
            return Err(Error::VertexCountMismatch(n, g.n));
        }
        pairs.extend_from_slice(&g.edges);
    }
    Ok(Graph::from_pairs_unchecked(n, pairs))
}

/// `E(g1) ⊆ E(g2)`.
pub fn is_subgraph(g1: &Graph, g2: &Graph) -> Result<bool> {
    if g1.n != g2.n {
        return Err(Error::VertexCountMismatch(g1.n, g2.n));
    }
    let mut it = g2.edges.iter();
    Ok(g1.edges.iter().all(|e| it.any(|f| f == e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, edges: &[(Vertex, Vertex)]) -> Graph {
        Graph::from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn single_hyperedge_projects_to_triangle() {
        let h = Hypergraph::from_edges(3, 3, [vec![0, 1, 2]]).unwrap();
        assert_eq!(project_to_graph(&h), Graph::complete(3));
    }

    #[test]
    fn empty_hypergraph_projects_to_empty_graph() {
        let h = Hypergraph::empty(5, 3).unwrap();
        assert_eq!(project_to_graph(&h), Graph::empty(5));
    }

    #[test]
    fn feature_projection_is_union_of_cliques() {
        let f = FeatureAssignment::new(4, vec![vec![0, 1, 2], vec![2, 3]]).unwrap();
        assert_eq!(
            project_to_graph(&f),
            g(4, &[(0, 1), (0, 2), (1, 2), (2, 3)])
        );
    }

    #[test]
    fn small_features_contribute_nothing() {
        let f = FeatureAssignment::new(3, vec![vec![], vec![1], vec![0, 2]]).unwrap();
        assert_eq!(f.m(), 3);
        assert_eq!(project_to_graph(&f), g(3, &[(0, 2)]));
    }

    #[test]
    fn partite_projection_uses_disjoint_vertices() {
        let h = PartiteHypergraph::uniform(3, 2, [vec![0, 0, 1]]).unwrap();
        // part offsets 0, 2, 4
        assert_eq!(project_to_graph(&h), g(6, &[(0, 2), (0, 5), (2, 5)]));
    }

    #[test]
    fn merge_keeps_transversal_edges() {
        let h = PartiteHypergraph::uniform(3, 3, [vec![0, 1, 2]]).unwrap();
        let merged = merge_partite(&h).unwrap();
        assert_eq!(merged.edges(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn merge_deletes_degenerate_edges() {
        let h = PartiteHypergraph::uniform(3, 3, [vec![0, 0, 1]]).unwrap();
        assert_eq!(merge_partite(&h).unwrap().edge_count(), 0);
    }

    #[test]
    fn merge_deduplicates() {
        let h = PartiteHypergraph::uniform(3, 3, [vec![0, 1, 2], vec![2, 0, 1]]).unwrap();
        assert_eq!(merge_partite(&h).unwrap().edges(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn merge_rejects_unequal_parts() {
        let h = PartiteHypergraph::new(vec![3, 3, 4], [vec![0, 1, 3]]).unwrap();
        assert!(matches!(merge_partite(&h), Err(Error::UnequalPartSizes(_))));
    }

    #[test]
    fn partite_edges_must_stay_in_their_part() {
        assert!(PartiteHypergraph::uniform(3, 2, [vec![0, 2, 1]]).is_err());
    }

    #[test]
    fn union_examples() {
        let a = g(3, &[(0, 1)]);
        let b = g(3, &[(1, 2)]);
        assert_eq!(union_graphs(&[a.clone(), Graph::empty(3)]).unwrap(), a);
        assert_eq!(
            union_graphs(&[a.clone(), b]).unwrap(),
            g(3, &[(0, 1), (1, 2)])
        );
        assert_eq!(union_graphs(&[a.clone(), a.clone()]).unwrap(), a);
        assert!(matches!(
            union_graphs(&[a, Graph::empty(4)]),
            Err(Error::VertexCountMismatch(3, 4))
        ));
    }

    #[test]
    fn subgraph_examples() {
        let any = g(4, &[(0, 1), (1, 2)]);
        assert!(is_subgraph(&Graph::empty(4), &any).unwrap());
        assert!(is_subgraph(&any, &any).unwrap());
        assert!(!is_subgraph(&g(4, &[(0, 1), (2, 3)]), &any).unwrap());
        assert!(is_subgraph(&any, &Graph::empty(5)).is_err());
    }

    #[test]
    fn subgraph_is_a_partial_order_on_four_vertices() {
        let all: Vec<Graph> = (0..64).map(|c| Graph::decode(4, c).unwrap()).collect();
        for a in &all {
            assert!(is_subgraph(a, a).unwrap());
            for b in &all {
                let ab = is_subgraph(a, b).unwrap();
                let ba = is_subgraph(b, a).unwrap();
                if ab && ba {
                    assert_eq!(a, b);
                }
                // agrees with the bit-code view
                let (ca, cb) = (a.encode().unwrap(), b.encode().unwrap());
                assert_eq!(ab, ca & !cb == 0);
                if ab {
                    for c in &all {
                        if is_subgraph(b, c).unwrap() {
                            assert!(is_subgraph(a, c).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_loops_and_out_of_range() {
        assert!(Graph::from_edges(3, [(1, 1)]).is_err());
        assert!(Graph::from_edges(3, [(0, 3)]).is_err());
        assert!(Hypergraph::from_edges(4, 3, [vec![0, 1, 1]]).is_err());
        assert!(Hypergraph::from_edges(4, 1, Vec::<Vec<Vertex>>::new()).is_err());
        assert!(FeatureAssignment::new(2, vec![vec![0, 2]]).is_err());
    }

    #[test]
    fn pair_index_round_trip() {
        for n in 2..=MAX_CODE_VERTICES {
            for i in 0..pair_count(n) {
                let (u, v) = pair_from_index(n, i);
                assert!(u < v && (v as usize) < n);
                assert_eq!(pair_index(n, u, v), i);
            }
        }
    }

    #[test]
    fn decode_rejects_stray_bits() {
        assert!(Graph::decode(3, 1 << 3).is_err());
        assert!(Graph::decode(12, 0).is_err());
        assert_eq!(Graph::complete(12).encode(), None);
    }

    #[test]
    fn text_format() {
        let x = g(4, &[(2, 3), (0, 1)]);
        assert_eq!(x.to_text(), "n=4\n0 1\n2 3\n");
        let parsed = Graph::from_text("# model=er\nn=4\n\n0 1\n3 2\n").unwrap();
        assert_eq!(parsed, x);
        assert!(Graph::from_text("0 1\n").is_err());
        assert!(Graph::from_text("n=2\n0 x\n").is_err());
    }
}
