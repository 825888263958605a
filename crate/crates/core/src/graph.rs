//! Causal graph types and the scale-free DAG sampler.
//!
//! Adjacency convention throughout: `adj[k][i] == true` iff node `k` causes node `i`
//! (row = cause, column = effect).

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, SeededRng};

/// Square boolean adjacency, row = cause. Carries no structural invariant, so it also
/// holds driver Jacobian supports (with self-loops) and cyclic climate graphs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdjMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl AdjMatrix {
    pub fn empty(n: usize) -> Self {
        Self { n, bits: vec![false; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::empty(n);
        for k in 0..n {
            for i in 0..n {
                m.bits[k * n + i] = f(k, i);
            }
        }
        m
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut m = Self::empty(n);
        for &(k, i) in edges {
            m.set(k, i, true);
        }
        m
    }

    /// Parse nested rows of 0/1.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::empty(n);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(alloc::format!(
                    "row {k} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (i, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => m.set(k, i, true),
                    _ => {
                        return Err(Error::InvalidConfig(alloc::format!(
                            "adjacency entry ({k},{i}) is {v}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|k| (0..self.n).map(|i| self.get(k, i) as u8).collect()).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, cause: usize, effect: usize) -> bool {
        self.bits[cause * self.n + effect]
    }

    #[inline]
    pub fn set(&mut self, cause: usize, effect: usize, v: bool) {
        self.bits[cause * self.n + effect] = v;
    }

    /// All edges as `(cause, effect)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n * self.n).filter(|&p| self.bits[p]).map(move |p| (p / self.n, p % self.n))
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&k| self.get(k, i)).count()
    }

    pub fn out_degree(&self, k: usize) -> usize {
        (0..self.n).filter(|&i| self.get(k, i)).count()
    }

    pub fn parents(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&k| self.get(k, i))
    }

    pub fn children(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.get(k, i))
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.n).any(|i| self.get(i, i))
    }

    pub fn or(&self, other: &AdjMatrix) -> AdjMatrix {
        assert_eq!(self.n, other.n);
        AdjMatrix { n: self.n, bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect() }
    }

    pub fn and(&self, other: &AdjMatrix) -> AdjMatrix {
        assert_eq!(self.n, other.n);
        AdjMatrix { n: self.n, bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect() }
    }

    pub fn is_subset_of(&self, other: &AdjMatrix) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    pub fn without_diagonal(&self) -> AdjMatrix {
        AdjMatrix::from_fn(self.n, |k, i| k != i && self.get(k, i))
    }

    /// Rotate the off-diagonal entries 90° counterclockwise: `(i, j) -> (n-1-j, i)`.
    /// Entries landing on the diagonal are dropped.
    pub fn rotate_offdiag_ccw(&self) -> AdjMatrix {
        let n = self.n;
        let mut out = AdjMatrix::empty(n);
        for (i, j) in self.edges() {
            if i == j {
                continue;
            }
            let (r, c) = (n - 1 - j, i);
            if r != c {
                out.set(r, c, true);
            }
        }
        out
    }

    /// Kahn's algorithm preferring the highest-index ready node, so a growth-sampled
    /// graph (edges point from high to low index) yields `n-1, ..., 0`.
    /// Self-loops are ignored. `None` if a cycle exists.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n;
        let mut indeg: Vec<usize> = (0..n).map(|i| self.parents(i).filter(|&k| k != i).count()).collect();
        let mut ready: BinaryHeap<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(k) = ready.pop() {
            order.push(k);
            for i in self.children(k) {
                if i == k {
                    continue;
                }
                indeg[i] -= 1;
                if indeg[i] == 0 {
                    ready.push(i);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        !self.has_self_loops() && self.topological_order().is_some()
    }

    /// Nodes with no incoming edge (self-loops count as incoming).
    pub fn roots(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.in_degree(i) == 0).collect()
    }

    /// Descendants of `k` (excluding `k` unless it lies on a cycle through itself).
    pub fn descendants(&self, k: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack: Vec<usize> = self.children(k).collect();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(self.children(v));
            }
        }
        seen
    }

    /// Induced subgraph on the nodes where `keep` is true, renumbered in order.
    pub fn induced(&self, keep: &[bool]) -> AdjMatrix {
        let idx: Vec<usize> = (0..self.n).filter(|&i| keep[i]).collect();
        AdjMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Directed latent projection onto `keep`: `a -> b` iff some directed path from
    /// `a` to `b` has all intermediate nodes hidden.
    pub fn latent_projection(&self, keep: &[bool]) -> AdjMatrix {
        let idx: Vec<usize> = (0..self.n).filter(|&i| keep[i]).collect();
        let mut out = AdjMatrix::empty(idx.len());
        for (a, &src) in idx.iter().enumerate() {
            let mut seen = vec![false; self.n];
            let mut stack: Vec<usize> = self.children(src).collect();
            while let Some(v) = stack.pop() {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                if !keep[v] {
                    stack.extend(self.children(v));
                }
            }
            for (b, &dst) in idx.iter().enumerate() {
                if seen[dst] {
                    out.set(a, b, true);
                }
            }
        }
        out
    }
}

impl Serialize for AdjMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AdjMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<u8>>::deserialize(d)?;
        AdjMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Ground-truth graph of a coupled model: acyclic contemporaneous block, optional
/// lagged block with a single lag `tau`, and a set of hidden node indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct CausalGraph {
    adj: AdjMatrix,
    lagged: Option<AdjMatrix>,
    tau: usize,
    hidden: Vec<usize>,
}

/// Wire form of [`CausalGraph`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub tau: usize,
    pub adj: AdjMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagged: Option<AdjMatrix>,
    #[serde(default)]
    pub hidden: Vec<usize>,
}

impl TryFrom<GraphJson> for CausalGraph {
    type Error = Error;

    fn try_from(g: GraphJson) -> Result<Self> {
        if g.adj.n() != g.n {
            return Err(Error::ShapeMismatch(alloc::format!("adj is {0}x{0}, n = {1}", g.adj.n(), g.n)));
        }
        let graph = CausalGraph::new(g.adj)?;
        let graph = match g.lagged {
            Some(lagged) => graph.with_lagged(lagged, g.tau)?,
            None if g.tau != 0 => {
                return Err(Error::InvalidConfig(alloc::format!("tau = {} without a lagged block", g.tau)))
            }
            None => graph,
        };
        graph.with_hidden(g.hidden)
    }
}

impl From<CausalGraph> for GraphJson {
    fn from(g: CausalGraph) -> Self {
        GraphJson { n: g.adj.n(), tau: g.tau, adj: g.adj, lagged: g.lagged, hidden: g.hidden }
    }
}

impl CausalGraph {
    /// Wrap an acyclic, loop-free adjacency.
    pub fn new(adj: AdjMatrix) -> Result<Self> {
        if adj.has_self_loops() {
            return Err(Error::InvalidConfig("causal graph has a self-loop".into()));
        }
        if adj.topological_order().is_none() {
            return Err(Error::InvalidConfig("contemporaneous block is cyclic".into()));
        }
        Ok(Self { adj, lagged: None, tau: 0, hidden: Vec::new() })
    }

    fn with_lagged(mut self, lagged: AdjMatrix, tau: usize) -> Result<Self> {
        if tau == 0 {
            return Err(Error::InvalidLag(tau));
        }
        if lagged.n() != self.adj.n() {
            return Err(Error::ShapeMismatch("lagged block size differs from adj".into()));
        }
        self.lagged = Some(lagged);
        self.tau = tau;
        Ok(self)
    }

    fn with_hidden(mut self, mut hidden: Vec<usize>) -> Result<Self> {
        hidden.sort_unstable();
        hidden.dedup();
        if hidden.iter().any(|&h| h >= self.n()) {
            return Err(Error::InvalidConfig("hidden index out of range".into()));
        }
        self.hidden = hidden;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.adj.n()
    }

    pub fn adj(&self) -> &AdjMatrix {
        &self.adj
    }

    pub fn lagged(&self) -> Option<&AdjMatrix> {
        self.lagged.as_ref()
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    /// `true` for nodes not marked hidden.
    pub fn observed_mask(&self) -> Vec<bool> {
        let mut m = vec![true; self.n()];
        for &h in &self.hidden {
            m[h] = false;
        }
        m
    }

    /// Lag-agnostic union of both blocks.
    pub fn summary_adj(&self) -> AdjMatrix {
        match &self.lagged {
            Some(l) => self.adj.or(l),
            None => self.adj.clone(),
        }
    }

    /// Order in which every node comes after all its parents in either block.
    pub fn causal_order(&self) -> Vec<usize> {
        self.summary_adj()
            .topological_order()
            .expect("summary of a sampled causal graph is acyclic")
    }
}

/// Growth-with-redirection parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnrConfig {
    pub n: usize,
    pub r: f64,
}

impl GnrConfig {
    pub fn new(n: usize, r: f64) -> Result<Self> {
        let cfg = Self { n, r };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("GNR needs at least one node".into()));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::InvalidConfig(alloc::format!("redirection probability {} outside [0,1]", self.r)));
        }
        Ok(())
    }
}

impl Default for GnrConfig {
    fn default() -> Self {
        Self { n: 10, r: 0.5 }
    }
}

/// Growing network with redirection. Node `i >= 1` links to one earlier node drawn
/// proportionally to the attachment kernel, redirected with probability `r` to that
/// node's own target. Edge `i -> m` means `i` causes `m`, so node 0 is the terminal sink.
pub fn gnr_sample(config: GnrConfig, rng: &mut SeededRng) -> AdjMatrix {
    let n = config.n;
    let mut adj = AdjMatrix::empty(n);
    if n <= 1 {
        return adj;
    }
    // Kernel entries are integer counts, so sampling is exact.
    let mut kernel = vec![0usize; n];
    let mut ancestor = vec![0usize; n];
    kernel[0] = 1;
    let mut total = 1usize;
    for i in 1..n {
        let mut draw = rng.below(total);
        let mut m = 0;
        while draw >= kernel[m] {
            draw -= kernel[m];
            m += 1;
        }
        if rng.uniform() < config.r {
            m = ancestor[m];
        }
        adj.set(i, m, true);
        kernel[i] += 1;
        kernel[m] += 1;
        total += 2;
        ancestor[i] = m;
    }
    adj
}

/// Outcome of [`add_confounders`].
#[derive(Debug, Clone, PartialEq)]
pub struct Confounded {
    pub graph: CausalGraph,
    /// Set when no node qualified as a hidden common cause.
    pub no_candidate: bool,
}

/// Merge a 90°-rotated second GNR sample into `first` and hide one new common cause.
pub fn add_confounders(first: &CausalGraph, config: GnrConfig, rng: &mut SeededRng, max_retry: usize) -> Result<Confounded> {
    for _ in 0..max_retry.max(1) {
        let second = gnr_sample(config, rng);
        if let Some(c) = merge_confounder(first, &second, rng) {
            return Ok(c);
        }
    }
    Err(Error::RetryExhausted { what: "confounder merge", attempts: max_retry.max(1) })
}

/// One merge attempt with an explicit second sample. `None` when the union is cyclic.
///
/// The hidden node must (a) have out-degree at least 2 in the union, (b) have gained an
/// outgoing edge from the rotated sample and (c) have no parents; it is drawn uniformly
/// among qualifying nodes.
pub fn merge_confounder(first: &CausalGraph, second: &AdjMatrix, rng: &mut SeededRng) -> Option<Confounded> {
    let rotated = second.rotate_offdiag_ccw();
    let combined = first.adj().or(&rotated);
    if combined.topological_order().is_none() {
        return None;
    }
    let candidates: Vec<usize> = (0..combined.n())
        .filter(|&k| {
            combined.out_degree(k) >= 2
                && combined.in_degree(k) == 0
                && rotated.children(k).any(|i| !first.adj().get(k, i))
        })
        .collect();
    let mut graph = CausalGraph::new(combined).ok()?;
    graph.lagged = first.lagged.clone();
    graph.tau = first.tau;
    if candidates.is_empty() {
        return Some(Confounded { graph, no_candidate: true });
    }
    graph.hidden = vec![candidates[rng.below(candidates.len())]];
    Some(Confounded { graph, no_candidate: false })
}

/// Move each contemporaneous edge to the lagged block with probability `p_t`.
pub fn sample_lagged_edges(graph: &CausalGraph, p_t: f64, tau: usize, rng: &mut SeededRng) -> Result<CausalGraph> {
    if tau < 1 {
        return Err(Error::InvalidLag(tau));
    }
    if !(0.0..=1.0).contains(&p_t) {
        return Err(Error::InvalidConfig(alloc::format!("lag probability {p_t} outside [0,1]")));
    }
    let n = graph.n();
    let mut adj = graph.adj().clone();
    let mut lagged = graph.lagged().cloned().unwrap_or_else(|| AdjMatrix::empty(n));
    let edges: Vec<(usize, usize)> = graph.adj().edges().collect();
    for (k, i) in edges {
        if rng.bernoulli(p_t) {
            adj.set(k, i, false);
            lagged.set(k, i, true);
        }
    }
    Ok(CausalGraph { adj, lagged: Some(lagged), tau, hidden: graph.hidden.clone() })
}

/// Union of both blocks as a lag-free graph.
pub fn summary_graph(graph: &CausalGraph) -> CausalGraph {
    CausalGraph { adj: graph.summary_adj(), lagged: None, tau: 0, hidden: graph.hidden.clone() }
}

/// Zero in-degree mask per block: length `n` without a lagged block, otherwise the
/// contemporaneous mask followed by the lagged one (length `2n`).
pub fn root_nodes(graph: &CausalGraph) -> Vec<bool> {
    let mut mask = graph.adj().roots();
    if let Some(l) = graph.lagged() {
        mask.extend(l.roots());
    }
    mask
}

/// Nodes without parents in either block; these carry drivers.
pub fn driver_nodes(graph: &CausalGraph) -> Vec<bool> {
    graph.summary_adj().roots()
}
