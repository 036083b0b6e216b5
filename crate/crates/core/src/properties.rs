//! Monotone increasing graph properties and the numeric statistics compared
//! across models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};

/// Largest pattern accepted by [`PropertySpec::ContainsSubgraph`].
pub const MAX_PATTERN_VERTICES: usize = 5;

/// A graph property closed under edge addition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropertySpec {
    Connected,
    LargestComponentGe(usize),
    MinDegreeGe(usize),
    TriangleCountGe(u64),
    /// Contains a (not necessarily induced) copy of the pattern.
    ContainsSubgraph(Graph),
    CliqueGe(usize),
}

impl PropertySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PropertySpec::ContainsSubgraph(f) if f.n() > MAX_PATTERN_VERTICES => {
                Err(Error::out_of_range("pattern vertices", f.n(), "<= 5"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PropertySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertySpec::Connected => write!(f, "connected"),
            PropertySpec::LargestComponentGe(t) => write!(f, "largest_component_ge:{t}"),
            PropertySpec::MinDegreeGe(t) => write!(f, "min_degree_ge:{t}"),
            PropertySpec::TriangleCountGe(t) => write!(f, "triangle_count_ge:{t}"),
            PropertySpec::CliqueGe(t) => write!(f, "clique_ge:{t}"),
            PropertySpec::ContainsSubgraph(g) => {
                write!(f, "contains_subgraph:{}", g.n())?;
                for &(u, v) in g.edges() {
                    write!(f, ",{u}-{v}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `connected`, `largest_component_ge:T`, `min_degree_ge:T`,
/// `triangle_count_ge:T`, `clique_ge:T` and `contains_subgraph:N,u-v,...`.
impl FromStr for PropertySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse property `{s}`"));
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a.trim(), Some(b.trim())),
            None => (s.trim(), None),
        };
        let num = || arg.ok_or_else(bad)?.parse::<u64>().map_err(|_| bad());
        let spec = match name {
            "connected" => PropertySpec::Connected,
            "largest_component_ge" => PropertySpec::LargestComponentGe(num()? as usize),
            "min_degree_ge" => PropertySpec::MinDegreeGe(num()? as usize),
            "triangle_count_ge" => PropertySpec::TriangleCountGe(num()?),
            "clique_ge" => PropertySpec::CliqueGe(num()? as usize),
            "contains_subgraph" => {
                let mut parts = arg.ok_or_else(bad)?.split(',');
                let n: usize = parts
                    .next()
                    .ok_or_else(bad)?
                    .trim()
                    .parse()
                    .map_err(|_| bad())?;
                let mut edges = Vec::new();
                for e in parts {
                    let (u, v) = e.split_once('-').ok_or_else(bad)?;
                    edges.push((
                        u.trim().parse::<Vertex>().map_err(|_| bad())?,
                        v.trim().parse::<Vertex>().map_err(|_| bad())?,
                    ));
                }
                PropertySpec::ContainsSubgraph(Graph::from_edges(n, edges)?)
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for PropertySpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PropertySpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn evaluate_property(g: &Graph, spec: &PropertySpec) -> Result<bool> {
    spec.validate()?;
    Ok(match spec {
        PropertySpec::Connected => g.n() <= 1 || largest_component(g) == g.n(),
        PropertySpec::LargestComponentGe(t) => largest_component(g) >= *t,
        PropertySpec::MinDegreeGe(t) => g.degrees().into_iter().min().unwrap_or(0) >= *t,
        PropertySpec::TriangleCountGe(t) => count_triangles(g) >= *t,
        PropertySpec::ContainsSubgraph(f) => contains_subgraph(g, f),
        PropertySpec::CliqueGe(t) => has_clique(g, *t),
    })
}

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Size of the largest connected component (0 for the graph on no vertices).
pub fn largest_component(g: &Graph) -> usize {
    let mut dsu = Dsu::new(g.n());
    for &(u, v) in g.edges() {
        dsu.union(u as usize, v as usize);
    }
    (0..g.n())
        .map(|v| {
            let r = dsu.find(v);
            dsu.size[r]
        })
        .max()
        .unwrap_or(0)
}

pub fn count_triangles(g: &Graph) -> u64 {
    let adj = g.adjacency();
    let mut count = 0u64;
    for &(u, v) in g.edges() {
        // common neighbours above v, so each triangle is seen once
        let (a, b) = (&adj[u as usize], &adj[v as usize]);
        let (mut i, mut j) = (
            a.partition_point(|&w| w <= v),
            b.partition_point(|&w| w <= v),
        );
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    count
}

fn contains_subgraph(g: &Graph, pattern: &Graph) -> bool {
    let k = pattern.n();
    if k > g.n() {
        return false;
    }
    let padj = pattern.adjacency();
    // place high-degree pattern vertices first
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(padj[v].len()));
    let mut image = vec![Vertex::MAX; k];
    let mut used = vec![false; g.n()];
    extend_embedding(g, &padj, &order, 0, &mut image, &mut used)
}

fn extend_embedding(
    g: &Graph,
    padj: &[Vec<Vertex>],
    order: &[usize],
    depth: usize,
    image: &mut [Vertex],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let pv = order[depth];
    for cand in 0..g.n() as Vertex {
        if used[cand as usize] {
            continue;
        }
        let fits = padj[pv]
            .iter()
            .all(|&w| image[w as usize] == Vertex::MAX || g.has_edge(cand, image[w as usize]));
        if fits {
            image[pv] = cand;
            used[cand as usize] = true;
            if extend_embedding(g, padj, order, depth + 1, image, used) {
                return true;
            }
            used[cand as usize] = false;
            image[pv] = Vertex::MAX;
        }
    }
    false
}

/// Whether `g` has a clique on at least `t` vertices.
pub fn has_clique(g: &Graph, t: usize) -> bool {
    if t <= 1 {
        return t == 0 || g.n() >= 1;
    }
    let adj = g.adjacency();
    (0..g.n() as Vertex).any(|v| {
        let higher: Vec<Vertex> = adj[v as usize].iter().copied().filter(|&w| w > v).collect();
        grow_clique(&adj, &higher, 1, t)
    })
}

fn grow_clique(adj: &[Vec<Vertex>], cands: &[Vertex], size: usize, t: usize) -> bool {
    if size >= t {
        return true;
    }
    if size + cands.len() < t {
        return false;
    }
    for (i, &v) in cands.iter().enumerate() {
        if size + cands.len() - i < t {
            return false;
        }
        let next: Vec<Vertex> = cands[i + 1..]
            .iter()
            .copied()
            .filter(|w| adj[v as usize].binary_search(w).is_ok())
            .collect();
        if grow_clique(adj, &next, size + 1, t) {
            return true;
        }
    }
    false
}

/// Numeric graph statistics used in domination checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphStatistic {
    EdgeCount,
    MaxDegree,
    TriangleCount,
    LargestComponent,
}

impl GraphStatistic {
    pub fn eval(self, g: &Graph) -> f64 {
        match self {
            GraphStatistic::EdgeCount => g.edge_count() as f64,
            GraphStatistic::MaxDegree => g.max_degree() as f64,
            GraphStatistic::TriangleCount => count_triangles(g) as f64,
            GraphStatistic::LargestComponent => largest_component(g) as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GraphStatistic::EdgeCount => "edge_count",
            GraphStatistic::MaxDegree => "max_degree",
            GraphStatistic::TriangleCount => "triangle_count",
            GraphStatistic::LargestComponent => "largest_component",
        }
    }
}
