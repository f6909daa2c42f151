//! Time-varying communication graphs with replayable edge schedules.
//!
//! Nodes are indexed `0..n`. An undirected edge is stored as `(u, v)` with
//! `u < v`. The realized edge set of round `k` is a pure function of the
//! graph's fields and `k`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

pub type Edge = (usize, usize);
pub type EdgeSet = BTreeSet<Edge>;

/// Default number of Erdős–Rényi resamples before giving up.
pub const DEFAULT_RETRY_BUDGET: usize = 1000;

/// Redraws allowed per toggle when a removal would disconnect the graph.
const TOGGLE_RETRIES: usize = 64;

const CHURN_STREAM_TAG: u64 = 0xC4_0A11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    Static,
    EdgeChurn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingGraph {
    n_nodes: usize,
    schedule_kind: ScheduleKind,
    base_edges: EdgeSet,
    churn_rate: f64,
    seed: u64,
    rejections: usize,
}

/// Normalizes an unordered pair to `(min, max)`.
#[inline]
pub fn edge(u: usize, v: usize) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl TimeVaryingGraph {
    /// Static graph over the given edges. Fails on self-loops, out-of-range
    /// endpoints or a disconnected edge set.
    pub fn from_edges(n_nodes: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidParameter(
                "graph needs at least one node".into(),
            ));
        }
        let mut base_edges = EdgeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for {n_nodes} nodes"
                )));
            }
            base_edges.insert(edge(u, v));
        }
        if !is_connected(&base_edges, n_nodes) {
            return Err(Error::Disconnected { n: n_nodes });
        }
        Ok(Self {
            n_nodes,
            schedule_kind: ScheduleKind::Static,
            base_edges,
            churn_rate: 0.0,
            seed: 0,
            rejections: 0,
        })
    }

    pub fn complete(n_nodes: usize) -> Result<Self> {
        let edges = (0..n_nodes).flat_map(|u| (u + 1..n_nodes).map(move |v| (u, v)));
        Self::from_edges(n_nodes, edges)
    }

    pub fn path(n_nodes: usize) -> Result<Self> {
        Self::from_edges(n_nodes, (1..n_nodes).map(|v| (v - 1, v)))
    }

    /// Turns the graph into an edge-churn schedule around its current base
    /// edges. `seed` keys the per-round toggle streams.
    pub fn with_churn(mut self, churn_rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&churn_rate) {
            return Err(Error::InvalidParameter(format!(
                "churn rate {churn_rate} outside [0, 1]"
            )));
        }
        self.schedule_kind = ScheduleKind::EdgeChurn;
        self.churn_rate = churn_rate;
        self.seed = seed;
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn schedule_kind(&self) -> ScheduleKind {
        self.schedule_kind
    }

    pub fn base_edges(&self) -> &EdgeSet {
        &self.base_edges
    }

    pub fn churn_rate(&self) -> f64 {
        self.churn_rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of disconnected Erdős–Rényi samples rejected during generation.
    pub fn rejections(&self) -> usize {
        self.rejections
    }

    pub fn is_static(&self) -> bool {
        self.schedule_kind == ScheduleKind::Static || self.churn_rate == 0.0
    }

    /// Number of toggles proposed per churn round.
    pub fn toggles_per_round(&self) -> usize {
        let raw = self.churn_rate * self.base_edges.len() as f64;
        // guards against 0.2 * 30 = 6.000000000000001 rounding up to 7
        (raw - 1e-9).ceil().max(0.0) as usize
    }

    /// Realized edge set of round `k`. Round 0 of a churn schedule is the base
    /// graph; later rounds apply seeded connectivity-preserving toggles to it.
    pub fn edges_at(&self, k: usize) -> EdgeSet {
        if self.is_static() || k == 0 {
            return self.base_edges.clone();
        }
        let n = self.n_nodes;
        let n_pairs = n * (n - 1) / 2;
        if n_pairs == 0 {
            return self.base_edges.clone();
        }
        let mut rng = rng::stream(&[self.seed, CHURN_STREAM_TAG, k as u64]);
        let mut edges = self.base_edges.clone();
        for _ in 0..self.toggles_per_round() {
            for _ in 0..TOGGLE_RETRIES {
                let pair = pair_from_index(rng.random_range(0..n_pairs), n);
                if edges.remove(&pair) {
                    if is_connected(&edges, n) {
                        break;
                    }
                    edges.insert(pair);
                } else {
                    edges.insert(pair);
                    break;
                }
            }
        }
        edges
    }

    /// Writes round `k` as a `n=<n> k=<round>` header followed by one `u v`
    /// line per edge.
    pub fn to_edge_list(&self, k: usize) -> String {
        format_edge_list(self.n_nodes, k, &self.edges_at(k))
    }
}

pub fn format_edge_list(n: usize, k: usize, edges: &EdgeSet) -> String {
    let mut out = format!("n={n} k={k}\n");
    for (u, v) in edges {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// Parses the edge-list fixture format back into `(n, k, edges)`.
pub fn parse_edge_list(text: &str) -> Result<(usize, usize, EdgeSet)> {
    let bad = |msg: &str| Error::InvalidParameter(format!("edge list: {msg}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("missing header"))?;
    let mut n = None;
    let mut k = None;
    for tok in header.split_whitespace() {
        match tok.split_once('=') {
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            Some(("k", v)) => k = v.parse::<usize>().ok(),
            _ => return Err(bad("malformed header")),
        }
    }
    let (n, k) = n.zip(k).ok_or_else(|| bad("header needs n and k"))?;
    let mut edges = EdgeSet::new();
    for line in lines {
        let mut it = line.split_whitespace().map(str::parse::<usize>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(u)), Some(Ok(v)), None) if u != v && u < n && v < n => {
                edges.insert(edge(u, v));
            }
            _ => return Err(bad(&format!("bad edge line {line:?}"))),
        }
    }
    Ok((n, k, edges))
}

/// Maps `0..n(n-1)/2` onto the upper-triangular pairs in row-major order.
fn pair_from_index(mut idx: usize, n: usize) -> Edge {
    let mut u = 0;
    loop {
        let row = n - 1 - u;
        if idx < row {
            return (u, u + 1 + idx);
        }
        idx -= row;
        u += 1;
    }
}

/// Samples a connected G(n, p) graph, resampling up to `retry_budget` times.
pub fn generate_erdos_renyi_with_budget(
    n: usize,
    p: f64,
    seed: u64,
    retry_budget: usize,
) -> Result<TimeVaryingGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "Erdős–Rényi needs n >= 2, got {n}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "edge probability {p} outside (0, 1]"
        )));
    }
    let mut rng = rng::stream(&[seed]);
    for attempt in 0..retry_budget {
        let mut edges = EdgeSet::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.insert((u, v));
                }
            }
        }
        if is_connected(&edges, n) {
            return Ok(TimeVaryingGraph {
                n_nodes: n,
                schedule_kind: ScheduleKind::Static,
                base_edges: edges,
                churn_rate: 0.0,
                seed,
                rejections: attempt,
            });
        }
    }
    Err(Error::RetryBudgetExhausted {
        n,
        p,
        attempts: retry_budget,
    })
}

pub fn generate_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<TimeVaryingGraph> {
    generate_erdos_renyi_with_budget(n, p, seed, DEFAULT_RETRY_BUDGET)
}

/// True iff the undirected graph on `0..n` has a single component.
pub fn is_connected(edges: &EdgeSet, n: usize) -> bool {
    if n <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}
