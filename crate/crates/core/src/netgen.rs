//! Internet-like networks from the S² geometric model.
//!
//! Generation follows a fixed recipe:
//!
//! 1. place N nodes uniformly on the unit sphere;
//! 2. draw hidden degrees κ from a Pareto law P(κ) ∝ κ^−γ;
//! 3. for every pair take the geodesic distance on the latent sphere of
//!    radius `sqrt(N / 4π)` (unit node density);
//! 4. connect the pair with probability
//!    `1 / (1 + (d / (μ κ_i κ_j)^{1/D})^β)`;
//! 5. nodes left outside the giant component are discarded and the same
//!    number of fresh nodes (new position *and* new κ) are drawn; only pairs
//!    touching a fresh node are re-trialled, and the loop repeats until the
//!    giant component spans all N nodes.
//!
//! Because κ is redrawn for replacement nodes, the κ distribution of the
//! final network is slightly biased toward larger values: low-κ nodes are
//! the ones most often discarded.
//!
//! Pair trials use one random stream per (round, row), derived from the
//! network seed, so results do not depend on the thread count.

use std::io::{Read, Write};

use rayon::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    geodesic_distance, sample_hidden_degrees, sample_uniform_sphere, scales_from_density,
    NodeSeed, SpaceScales,
};
use crate::graph::Graph;
use crate::seed::{derive_seed, rng_from_seed, splitmix64};

/// Clustering exponent fitted to the AS Internet graph.
pub const DEFAULT_BETA: f64 = 2.6261;
/// Degree scale fitted to the AS Internet graph.
pub const DEFAULT_MU: f64 = 0.0233;
pub const DEFAULT_GAMMA: f64 = 2.3;
pub const DEFAULT_MAX_ROUNDS: usize = 1000;

const PAIR_STREAM_SALT: u64 = 0x6e65_7467_656e_5f70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub n_nodes: usize,
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub kappa_min: f64,
    pub dimension: u32,
    /// Real-space node density, km⁻².
    pub rho: f64,
    pub seed: u64,
    /// Cap on regeneration rounds before giving up.
    pub max_rounds: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            n_nodes: 1000,
            beta: DEFAULT_BETA,
            mu: DEFAULT_MU,
            gamma: DEFAULT_GAMMA,
            kappa_min: 1.0,
            dimension: 2,
            rho: 1.1e-3,
            seed: 0,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(invalid("n_nodes", format!("need at least 2, got {}", self.n_nodes)));
        }
        if self.dimension != 2 {
            return Err(invalid("dimension", "only the S² model (D = 2) is supported"));
        }
        if !(self.beta > f64::from(self.dimension)) {
            return Err(invalid("beta", format!("must exceed D = {}, got {}", self.dimension, self.beta)));
        }
        if !(self.mu > 0.0) {
            return Err(invalid("mu", format!("must be positive, got {}", self.mu)));
        }
        if !(self.gamma > 1.0) {
            return Err(invalid("gamma", format!("must exceed 1, got {}", self.gamma)));
        }
        if !(self.kappa_min > 0.0) {
            return Err(invalid("kappa_min", format!("must be positive, got {}", self.kappa_min)));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(invalid("rho", format!("must be positive, got {}", self.rho)));
        }
        if self.max_rounds == 0 {
            return Err(invalid("max_rounds", "must be at least 1"));
        }
        Ok(())
    }
}

/// Connection probability of the S^D model.
pub fn connection_probability(
    d_latent: f64,
    kappa_i: f64,
    kappa_j: f64,
    mu: f64,
    beta: f64,
    dimension: u32,
) -> Result<f64> {
    if !(kappa_i > 0.0) || !(kappa_j > 0.0) {
        return Err(invalid("kappa", "hidden degrees must be positive"));
    }
    if !(mu > 0.0) {
        return Err(invalid("mu", "must be positive"));
    }
    if dimension == 0 {
        return Err(invalid("dimension", "must be at least 1"));
    }
    if !(d_latent >= 0.0) {
        return Err(invalid("d_latent", "must be non-negative"));
    }
    let scale = (mu * kappa_i * kappa_j).powf(1.0 / f64::from(dimension));
    Ok(1.0 / (1.0 + (d_latent / scale).powf(beta)))
}

/// Bookkeeping from a generation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenerationStats {
    /// Rounds of pair trials, including the first.
    pub rounds: usize,
    /// Bernoulli trials over all rounds.
    pub trials: u64,
    /// Bernoulli trials in the first round; always N(N−1)/2.
    pub first_round_trials: u64,
    /// Nodes replaced after the first round.
    pub replaced: usize,
}

/// An immutable network produced by [`generate`].
#[derive(Debug, Clone)]
pub struct GeneratedNetwork {
    pub params: ModelParams,
    pub scales: SpaceScales,
    pub nodes: Vec<NodeSeed>,
    graph: Graph,
    pub stats: GenerationStats,
}

impl GeneratedNetwork {
    /// Assembles a network from explicit parts (fixtures, snapshots).
    pub fn from_parts(
        params: ModelParams,
        nodes: Vec<NodeSeed>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                return Err(invalid("nodes", format!("node at position {i} has id {}", node.id)));
            }
            if !(node.kappa > 0.0) {
                return Err(invalid("nodes", format!("node {i} has non-positive kappa")));
            }
        }
        let mut edge_list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange(a.max(b), n));
            }
            if a == b {
                return Err(invalid("edges", format!("self-loop on node {a}")));
            }
            edge_list.push((a, b));
        }
        let scales = scales_from_density(n.max(1), params.rho)?;
        let mut params = params;
        params.n_nodes = n;
        Ok(Self {
            params,
            scales,
            nodes,
            graph: Graph::from_edges(n, edge_list),
            stats: GenerationStats::default(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn latent_distance(&self, i: usize, j: usize) -> f64 {
        geodesic_distance(&self.nodes[i].u, &self.nodes[j].u, self.scales.r_latent)
    }

    /// Real-space fiber length between two nodes, km.
    pub fn real_length(&self, i: usize, j: usize) -> f64 {
        geodesic_distance(&self.nodes[i].u, &self.nodes[j].u, self.scales.r_real)
    }

    /// Same topology and latent coordinates placed at another real-space density.
    pub fn with_density(&self, rho: f64) -> Result<Self> {
        let scales = scales_from_density(self.n_nodes(), rho)?;
        let mut out = self.clone();
        out.params.rho = rho;
        out.scales = scales;
        Ok(out)
    }

    pub fn to_snapshot(&self) -> NetworkSnapshot {
        NetworkSnapshot {
            params: self.params.clone(),
            seed: self.params.seed,
            nodes: self.nodes.clone(),
            edges: self.graph.edges().map(|(a, b)| [a, b]).collect(),
        }
    }

    pub fn from_snapshot(snap: NetworkSnapshot) -> Result<Self> {
        let mut params = snap.params;
        params.seed = snap.seed;
        Self::from_parts(params, snap.nodes, snap.edges.into_iter().map(|[a, b]| (a, b)))
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_snapshot())?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let snap: NetworkSnapshot = serde_json::from_reader(r)?;
        Self::from_snapshot(snap)
    }
}

/// JSON form of a generated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub params: ModelParams,
    pub seed: u64,
    pub nodes: Vec<NodeSeed>,
    pub edges: Vec<[usize; 2]>,
}

/// Largest connected component of the graph on `n_nodes` nodes with the given edges.
pub fn giant_component(edges: &[(usize, usize)], n_nodes: usize) -> Vec<usize> {
    Graph::from_edges(n_nodes, edges.iter().copied()).giant_component()
}

/// Generates a network whose giant component covers all `params.n_nodes` nodes.
pub fn generate(params: &ModelParams) -> Result<GeneratedNetwork> {
    params.validate()?;
    let mut rng = rng_from_seed(params.seed);
    let nodes = fresh_nodes(params, params.n_nodes, &mut rng)?;
    run_generation(params, nodes, &mut rng)
}

/// Like [`generate`], but starts from the given node set. Replacement nodes,
/// if any are needed, are drawn from the stream of `params.seed`.
pub fn generate_from_nodes(params: &ModelParams, nodes: Vec<NodeSeed>) -> Result<GeneratedNetwork> {
    let mut params = params.clone();
    params.n_nodes = nodes.len();
    params.validate()?;
    let mut rng = rng_from_seed(params.seed);
    run_generation(&params, nodes, &mut rng)
}

fn fresh_nodes<R: Rng>(params: &ModelParams, count: usize, rng: &mut R) -> Result<Vec<NodeSeed>> {
    let positions = sample_uniform_sphere(count, rng);
    let kappas = sample_hidden_degrees(count, params.gamma, params.kappa_min, rng)?;
    Ok(positions
        .into_iter()
        .zip(kappas)
        .map(|(u, kappa)| NodeSeed { id: 0, u, kappa })
        .collect())
}

fn run_generation<R: Rng>(
    params: &ModelParams,
    mut nodes: Vec<NodeSeed>,
    rng: &mut R,
) -> Result<GeneratedNetwork> {
    let n = nodes.len();
    for (i, node) in nodes.iter_mut().enumerate() {
        node.id = i;
    }
    let scales = scales_from_density(n, params.rho)?;
    let pair_base = splitmix64(params.seed ^ PAIR_STREAM_SALT);

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut is_new = vec![true; n];
    let mut stats = GenerationStats::default();

    loop {
        if stats.rounds == params.max_rounds {
            let graph = Graph::from_edges(n, edges_of(&adj));
            return Err(Error::GenerationStalled {
                rounds: stats.rounds,
                gcc_size: graph.giant_component_size(),
                n_nodes: n,
            });
        }
        let round = stats.rounds as u32;
        let rows: Vec<(Vec<usize>, u64)> = (0..n)
            .into_par_iter()
            .map(|i| trial_row(params, &nodes, &is_new, scales.r_latent, pair_base, round, i))
            .collect();
        let mut trials = 0;
        for (i, (row, t)) in rows.into_iter().enumerate() {
            trials += t;
            for j in row {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        if stats.rounds == 0 {
            stats.first_round_trials = trials;
        }
        stats.trials += trials;
        stats.rounds += 1;

        let graph = Graph::from_edges(n, edges_of(&adj));
        let gcc = graph.giant_component();
        if gcc.len() == n {
            log::debug!(
                "generated N={} in {} rounds, {} replacements, {} edges",
                n,
                stats.rounds,
                stats.replaced,
                graph.edge_count()
            );
            return Ok(GeneratedNetwork {
                params: ModelParams {
                    n_nodes: n,
                    ..params.clone()
                },
                scales,
                nodes,
                graph,
                stats,
            });
        }

        let mut in_gcc = vec![false; n];
        for &v in &gcc {
            in_gcc[v] = true;
        }
        let outside: Vec<usize> = (0..n).filter(|&v| !in_gcc[v]).collect();
        // nodes outside the giant component only neighbor each other
        for &v in &outside {
            adj[v].clear();
        }
        let replacements = fresh_nodes(params, outside.len(), rng)?;
        for (slot, mut node) in outside.iter().copied().zip(replacements) {
            node.id = slot;
            nodes[slot] = node;
        }
        for (v, flag) in is_new.iter_mut().enumerate() {
            *flag = !in_gcc[v];
        }
        stats.replaced += outside.len();
    }
}

fn edges_of(adj: &[Vec<usize>]) -> impl Iterator<Item = (usize, usize)> + '_ {
    adj.iter()
        .enumerate()
        .flat_map(|(i, l)| l.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
}

/// Bernoulli trials for pairs `(i, j)`, `j > i`, where at least one end is new.
fn trial_row(
    params: &ModelParams,
    nodes: &[NodeSeed],
    is_new: &[bool],
    r_latent: f64,
    pair_base: u64,
    round: u32,
    i: usize,
) -> (Vec<usize>, u64) {
    let mut rng = rng_from_seed(derive_seed(pair_base, round, i as u32));
    let inv_dim = 1.0 / f64::from(params.dimension);
    let ui = nodes[i].u;
    let mu_ki = params.mu * nodes[i].kappa;
    let mut out = Vec::new();
    let mut trials = 0;
    for j in (i + 1)..nodes.len() {
        if !(is_new[i] || is_new[j]) {
            continue;
        }
        trials += 1;
        let d = r_latent * ui.angle_to(&nodes[j].u);
        let scale = (mu_ki * nodes[j].kappa).powf(inv_dim);
        let p = 1.0 / (1.0 + (d / scale).powf(params.beta));
        if rng.random::<f64>() < p {
            out.push(j);
        }
    }
    (out, trials)
}
