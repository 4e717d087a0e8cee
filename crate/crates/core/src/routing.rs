//! End-to-end key rates over trusted-node paths.
//!
//! Keys are generated on all links of a path in parallel, so the path rate is
//! that of its slowest link and the best route maximizes the minimum link
//! rate (widest path).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of node pairs sampled for ⟨K⟩.
pub const DEFAULT_PAIR_SAMPLES: usize = 1000;
/// Largest network accepted by [`brute_force_widest`].
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

/// Undirected graph with a key rate (bits/s) on every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl RateGraph {
    /// Builds from `(i, j, rate)` triples. Self-loops are dropped; for
    /// repeated pairs the larger rate is kept.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (a, b, r) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            if a == b {
                continue;
            }
            adj[a].push((b, r));
            adj[b].push((a, r));
        }
        for list in &mut adj {
            list.sort_by(|x, y| x.0.cmp(&y.0).then(y.1.total_cmp(&x.1)));
            list.dedup_by_key(|e| e.0);
        }
        Self { adj }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// `(neighbor, rate)` pairs sorted by neighbor id.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn rate(&self, a: usize, b: usize) -> Option<f64> {
        self.adj[a]
            .binary_search_by_key(&b, |e| e.0)
            .ok()
            .map(|k| self.adj[a][k].1)
    }

    pub fn max_rate(&self) -> f64 {
        self.adj
            .iter()
            .flatten()
            .map(|e| e.1)
            .fold(0.0, f64::max)
    }

    fn check(&self, a: usize, b: usize) -> Result<()> {
        let n = self.adj.len();
        for v in [a, b] {
            if v >= n {
                return Err(Error::NodeOutOfRange(v, n));
            }
        }
        if a == b {
            return Err(Error::SameEndpoints(a));
        }
        Ok(())
    }
}

/// A route and its bottleneck rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub path: Vec<usize>,
    /// bits/s
    #[serde(rename = "rate_bps")]
    pub bottleneck_rate: f64,
}

impl PathResult {
    fn none() -> Self {
        Self {
            path: Vec::new(),
            bottleneck_rate: 0.0,
        }
    }

    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    width: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.width
            .total_cmp(&other.width)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best bottleneck rate from `source` to every node (0 when unreachable,
/// +∞ at the source itself). Stops early once `target` is settled.
fn widest_from(g: &RateGraph, source: usize, target: Option<usize>) -> Vec<f64> {
    let mut best = vec![0.0f64; g.node_count()];
    let mut done = vec![false; g.node_count()];
    let mut heap = BinaryHeap::new();
    best[source] = f64::INFINITY;
    heap.push(Frontier {
        width: f64::INFINITY,
        node: source,
    });
    while let Some(Frontier { width, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if Some(node) == target {
            break;
        }
        for &(w, rate) in g.neighbors(node) {
            let cand = width.min(rate);
            if cand > best[w] && !done[w] {
                best[w] = cand;
                heap.push(Frontier { width: cand, node: w });
            }
        }
    }
    best
}

/// Bottleneck rates from `source` to all nodes; entry `source` is 0.
pub fn bottleneck_rates_from(g: &RateGraph, source: usize) -> Vec<f64> {
    let mut best = widest_from(g, source, None);
    best[source] = 0.0;
    best
}

/// Widest (max-min rate) path from `a` to `b`.
///
/// Among paths with the optimal bottleneck the one with fewest hops is
/// returned, then the lexicographically smallest node sequence. Disconnected
/// pairs give an empty path with rate 0.
pub fn widest_path(g: &RateGraph, a: usize, b: usize) -> Result<PathResult> {
    g.check(a, b)?;
    let width = widest_from(g, a, Some(b))[b];
    if !(width > 0.0) {
        return Ok(PathResult::none());
    }

    // Fewest hops over the sub-graph of edges at least as wide as the optimum.
    let n = g.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[b] = 0;
    queue.push_back(b);
    while let Some(v) = queue.pop_front() {
        if v == a {
            break;
        }
        for &(w, rate) in g.neighbors(v) {
            if rate >= width && dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }

    let mut path = vec![a];
    let mut v = a;
    while v != b {
        // neighbors are sorted, so the first admissible step is the smallest id
        let next = g
            .neighbors(v)
            .iter()
            .find(|&&(w, rate)| rate >= width && dist[w] != usize::MAX && dist[w] + 1 == dist[v])
            .map(|&(w, _)| w)
            .expect("BFS layers guarantee a next hop");
        path.push(next);
        v = next;
    }
    Ok(PathResult {
        path,
        bottleneck_rate: width,
    })
}

/// Exhaustive simple-path search with the same contract as [`widest_path`].
/// Test oracle; limited to small graphs.
pub fn brute_force_widest(g: &RateGraph, a: usize, b: usize) -> Result<PathResult> {
    if g.node_count() > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooLarge(g.node_count(), BRUTE_FORCE_MAX_NODES));
    }
    g.check(a, b)?;

    fn better(cand: (f64, &[usize]), best: &PathResult) -> bool {
        match cand.0.total_cmp(&best.bottleneck_rate) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match cand.1.len().cmp(&best.path.len()) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => cand.1 < best.path.as_slice(),
            },
        }
    }

    fn dfs(
        g: &RateGraph,
        v: usize,
        b: usize,
        width: f64,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        best: &mut PathResult,
    ) {
        if v == b {
            if width > 0.0 && (best.path.is_empty() || better((width, path), best)) {
                best.path = path.clone();
                best.bottleneck_rate = width;
            }
            return;
        }
        for &(w, rate) in g.neighbors(v) {
            if on_path[w] {
                continue;
            }
            on_path[w] = true;
            path.push(w);
            dfs(g, w, b, width.min(rate), path, on_path, best);
            path.pop();
            on_path[w] = false;
        }
    }

    let mut best = PathResult::none();
    let mut on_path = vec![false; g.node_count()];
    on_path[a] = true;
    let mut path = vec![a];
    dfs(g, a, b, f64::INFINITY, &mut path, &mut on_path, &mut best);
    Ok(best)
}

/// Unordered pair `(i, j)`, `i < j`, at position `k` in row-major order of the
/// strict upper triangle of an `n × n` matrix.
fn pair_at(k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    let mut start = 0;
    loop {
        let row = n - 1 - i;
        if k < start + row {
            return (i, i + 1 + (k - start));
        }
        start += row;
        i += 1;
    }
}

/// Mean widest-path rate over `n_pairs` distinct unordered pairs sampled
/// uniformly without replacement (all pairs when `n_pairs` covers them).
/// Disconnected pairs count as 0.
pub fn average_key_rate<R: Rng + ?Sized>(g: &RateGraph, n_pairs: usize, rng: &mut R) -> f64 {
    let n = g.node_count();
    if n < 2 || n_pairs == 0 {
        return 0.0;
    }
    let total = n * (n - 1) / 2;
    let mut by_source: Vec<(usize, Vec<usize>)> = Vec::new();
    if n_pairs >= total {
        by_source = (0..n - 1).map(|i| (i, ((i + 1)..n).collect())).collect();
    } else {
        let mut picks = rand::seq::index::sample(rng, total, n_pairs).into_vec();
        picks.sort_unstable();
        for k in picks {
            let (i, j) = pair_at(k, n);
            match by_source.last_mut() {
                Some((s, targets)) if *s == i => targets.push(j),
                _ => by_source.push((i, vec![j])),
            }
        }
    }
    let count: usize = by_source.iter().map(|(_, t)| t.len()).sum();
    let sums: Vec<f64> = by_source
        .par_iter()
        .map(|(s, targets)| {
            let best = bottleneck_rates_from(g, *s);
            targets.iter().map(|&t| best[t]).sum::<f64>()
        })
        .collect();
    sums.iter().sum::<f64>() / count as f64
}
