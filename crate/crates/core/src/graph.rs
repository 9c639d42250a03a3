//! Influence graphs, random-walk transition matrices and network values.
//!
//! The voter model on an undirected graph with self-loops is dual to a simple
//! random walk: after `tau` rounds, customer `j` holds the initial opinion of
//! customer `j'` with probability `M^tau(j, j')`. A customer's network value
//! is therefore the `w`-weighted column sum of `M^tau`.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

/// Default validation cap on any single customer value.
pub const DEFAULT_VALUE_CAP: f64 = 1e12;

/// What to do when an input graph omits a node's self-loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfLoopPolicy {
    /// Add the loop and log a warning.
    #[default]
    Repair,
    /// Reject the graph.
    Strict,
}

/// Undirected influence graph over customers `0..N`.
///
/// Neighbor lists are sorted, symmetric and always contain the node itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceGraph {
    neighbors: Vec<Vec<usize>>,
}

/// A graph plus the nodes whose self-loops had to be added while loading.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: InfluenceGraph,
    pub repaired: Vec<usize>,
}

impl InfluenceGraph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Duplicate edges are merged; `(u, u)` is a self-loop.
    pub fn from_edges<I>(node_count: usize, edges: I, policy: SelfLoopPolicy) -> Result<LoadedGraph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if node_count == 0 {
            return Err(Error::input("graph must have at least one node"));
        }
        let mut sets = vec![BTreeSet::new(); node_count];
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::input(format!("edge ({u}, {v}) references a node outside 0..{node_count}")));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        let repaired: Vec<usize> = (0..node_count).filter(|&n| !sets[n].contains(&n)).collect();
        if !repaired.is_empty() {
            match policy {
                SelfLoopPolicy::Strict => {
                    return Err(Error::input(format!(
                        "{} node(s) lack a self-loop (first: {})",
                        repaired.len(),
                        repaired[0]
                    )))
                }
                SelfLoopPolicy::Repair => {
                    log::warn!("added missing self-loops to {} node(s)", repaired.len());
                    for &n in &repaired {
                        sets[n].insert(n);
                    }
                }
            }
        }
        let neighbors = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        Ok(LoadedGraph { graph: InfluenceGraph { neighbors }, repaired })
    }

    /// Parses the edge-list text format.
    ///
    /// One `u v` pair per line, 0-based ids, `#` starts a comment. An optional
    /// `nodes N` line fixes the node count; otherwise it is `max id + 1`.
    pub fn parse(text: &str, policy: SelfLoopPolicy) -> Result<LoadedGraph> {
        let mut declared: Option<usize> = None;
        let mut edges = Vec::new();
        let mut max_id: Option<usize> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_id = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::GraphParse { line: line_no, msg: format!("`{s}` is not a node id") })
            };
            match fields.as_slice() {
                ["nodes", n] => {
                    if declared.is_some() {
                        return Err(Error::GraphParse { line: line_no, msg: "duplicate `nodes` header".into() });
                    }
                    declared = Some(parse_id(n)?);
                }
                [u, v] => {
                    let (u, v) = (parse_id(u)?, parse_id(v)?);
                    max_id = Some(max_id.unwrap_or(0).max(u).max(v));
                    edges.push((u, v));
                }
                _ => {
                    return Err(Error::GraphParse {
                        line: line_no,
                        msg: format!("expected `u v` or `nodes N`, got `{line}`"),
                    })
                }
            }
        }
        let node_count = match (declared, max_id) {
            (Some(n), Some(m)) if m >= n => {
                return Err(Error::input(format!("edge endpoint {m} exceeds declared node count {n}")))
            }
            (Some(n), _) => n,
            (None, Some(m)) => m + 1,
            (None, None) => return Err(Error::input("graph file has no edges and no `nodes` header")),
        };
        Self::from_edges(node_count, edges, policy)
    }

    /// Path `0 - 1 - ... - (n-1)` with self-loops.
    pub fn path(n: usize) -> Result<Self> {
        let edges = (0..n).map(|i| (i, i)).chain((1..n).map(|i| (i - 1, i)));
        Ok(Self::from_edges(n, edges, SelfLoopPolicy::Strict)?.graph)
    }

    /// Complete graph on `n` nodes with self-loops.
    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|i| (i..n).map(move |j| (i, j)));
        Ok(Self::from_edges(n, edges, SelfLoopPolicy::Strict)?.graph)
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Sorted neighbors of `node`, including itself.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    /// Edges `(u, v)` with `u <= v`, in order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(u, ns)| ns.iter().filter(move |&&v| v >= u).map(move |&v| (u, v)))
    }
}

impl fmt::Display for InfluenceGraph {
    /// Writes the graph in the edge-list format accepted by [`InfluenceGraph::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes {}", self.node_count())?;
        for (u, v) in self.edges() {
            writeln!(f, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Dense row-major square matrix of transition probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        TransitionMatrix { dim, entries }
    }

    /// Wraps row-major entries, checking shape and nonnegativity.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            Error::check_dim(dim, row.len())?;
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::input("transition entries must be finite and nonnegative"));
            }
            entries.extend(row);
        }
        Ok(TransitionMatrix { dim, entries })
    }

    /// Normalized transition matrix: `M(j, j') = 1/|N(j)|` for `j' ∈ N(j)`.
    pub fn from_graph(graph: &InfluenceGraph) -> Self {
        let dim = graph.node_count();
        let mut entries = vec![0.0; dim * dim];
        for j in 0..dim {
            let p = 1.0 / graph.degree(j) as f64;
            for &k in graph.neighbors(j) {
                entries[j * dim + k] = p;
            }
        }
        TransitionMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.dim.max(1))
    }

    /// Largest `|row sum - 1|` over all rows.
    pub fn max_row_defect(&self) -> f64 {
        self.rows().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &TransitionMatrix) -> TransitionMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut entries = vec![0.0; n * n];
        let kernel = |(i, out): (usize, &mut [f64])| {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out.iter_mut().zip(&rhs.entries[k * n..(k + 1) * n]) {
                    *o += a * b;
                }
            }
        };
        if n >= 128 {
            entries.par_chunks_mut(n).enumerate().for_each(kernel);
        } else {
            entries.chunks_mut(n.max(1)).enumerate().for_each(kernel);
        }
        TransitionMatrix { dim: n, entries }
    }

    /// `self^tau` by repeated squaring. `tau = 0` gives the identity.
    pub fn power(&self, tau: u32) -> TransitionMatrix {
        let mut result = TransitionMatrix::identity(self.dim);
        let mut base = self.clone();
        let mut e = tau;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Row vector times matrix: `(x · M)_k = Σ_j x_j M(j, k)`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (o, m) in out.iter_mut().zip(self.row(j)) {
                *o += xj * m;
            }
        }
        out
    }
}

/// See [`TransitionMatrix::from_graph`].
pub fn build_transition(graph: &InfluenceGraph) -> TransitionMatrix {
    TransitionMatrix::from_graph(graph)
}

/// See [`TransitionMatrix::power`].
pub fn matrix_power(m: &TransitionMatrix, tau: u32) -> TransitionMatrix {
    m.power(tau)
}

/// Per-customer nonnegative values together with their total.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector {
    values: Vec<f64>,
    total: f64,
}

impl ValueVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_cap(values, DEFAULT_VALUE_CAP)
    }

    /// Validates every entry is finite and in `[0, cap]`.
    pub fn with_cap(values: Vec<f64>, cap: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("value vector is empty"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > cap) {
            return Err(Error::input(format!("value {v} at customer {i} outside [0, {cap}]")));
        }
        let total = values.iter().sum();
        Ok(ValueVector { values, total })
    }

    /// `n` customers of equal value `value`.
    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }
}

/// Network values `v_{j'} = Σ_j w_j M^tau(j, j')`.
///
/// For `tau` up to twice the dimension the row vector is propagated step by
/// step; beyond that `M^tau` is formed by squaring.
pub fn network_values(w: &ValueVector, m: &TransitionMatrix, tau: u32) -> Result<ValueVector> {
    Error::check_dim(m.dim(), w.len())?;
    let v = if (tau as usize) <= 2 * m.dim() {
        let mut x = w.as_slice().to_vec();
        for _ in 0..tau {
            x = m.left_mul(&x);
        }
        x
    } else {
        m.power(tau).left_mul(w.as_slice())
    };
    // Rounding can push a value a hair below zero when mass cancels exactly.
    let v = v.into_iter().map(|x| x.max(0.0)).collect();
    ValueVector::with_cap(v, f64::INFINITY)
}

const WALK_BLOCK: usize = 4096;

/// Monte Carlo estimate of `M^tau`: the fraction of `walks_per_node`
/// length-`tau` random walks from each node that end at each other node.
///
/// Walks are drawn in blocks of 4096, each block on its own stream
/// `(seed, node, block)`.
pub fn estimate_transition_power(
    graph: &InfluenceGraph,
    tau: u32,
    walks_per_node: usize,
    seed: u64,
) -> Result<TransitionMatrix> {
    if walks_per_node == 0 {
        return Err(Error::input("walks_per_node must be at least 1"));
    }
    let n = graph.node_count();
    let blocks = walks_per_node.div_ceil(WALK_BLOCK);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|start| {
            let mut counts = vec![0u64; n];
            for block in 0..blocks {
                let mut rng = rng::stream(seed, &[start as u64, block as u64]);
                let walks = WALK_BLOCK.min(walks_per_node - block * WALK_BLOCK);
                for _ in 0..walks {
                    let mut at = start;
                    for _ in 0..tau {
                        let ns = graph.neighbors(at);
                        at = ns[rng.random_range(0..ns.len())];
                    }
                    counts[at] += 1;
                }
            }
            counts.into_iter().map(|c| c as f64 / walks_per_node as f64).collect()
        })
        .collect();
    TransitionMatrix::from_rows(rows)
}
