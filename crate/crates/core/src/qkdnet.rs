//! Rate-weighted QKD networks obtained by pruning a generated network.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::NodeSeed;
use crate::graph::Graph;
use crate::netgen::{GeneratedNetwork, ModelParams};
use crate::qkdrates::{cv_rate, dv_rate, hybrid_rate, CovMode, CvParams, DvParams, LinkRate, Protocol};
use crate::routing::RateGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    #[default]
    Cv,
    Dv,
    Hybrid,
}

impl ProtocolKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolKind::Cv => "cv",
            ProtocolKind::Dv => "dv",
            ProtocolKind::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cv" => Ok(ProtocolKind::Cv),
            "dv" => Ok(ProtocolKind::Dv),
            "hybrid" => Ok(ProtocolKind::Hybrid),
            other => Err(format!("unknown protocol `{other}` (expected cv, dv or hybrid)")),
        }
    }
}

/// How links are rated and which survive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolPolicy {
    pub kind: ProtocolKind,
    pub cv: CvParams,
    pub dv: DvParams,
    pub cov_mode: CovMode,
    /// Links survive only with a rate strictly above this, bits/s.
    pub k_min: f64,
}

impl Default for ProtocolPolicy {
    fn default() -> Self {
        Self {
            kind: ProtocolKind::Cv,
            cv: CvParams::default(),
            dv: DvParams::default(),
            cov_mode: CovMode::Physical,
            k_min: 0.0,
        }
    }
}

impl ProtocolPolicy {
    pub fn with_kind(kind: ProtocolKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_min >= 0.0) {
            return Err(invalid("k_min", format!("must be non-negative, got {}", self.k_min)));
        }
        match self.kind {
            ProtocolKind::Cv => self.cv.validate(),
            ProtocolKind::Dv => self.dv.validate(),
            ProtocolKind::Hybrid => self.cv.validate().and(self.dv.validate()),
        }
    }

    pub fn link_rate(&self, length_km: f64) -> LinkRate {
        match self.kind {
            ProtocolKind::Cv => cv_rate(length_km, &self.cv, self.cov_mode),
            ProtocolKind::Dv => dv_rate(length_km, &self.dv),
            ProtocolKind::Hybrid => hybrid_rate(length_km, &self.cv, &self.dv, self.cov_mode),
        }
    }
}

/// A surviving link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QkdEdge {
    pub i: usize,
    pub j: usize,
    pub length_km: f64,
    pub rate_bps: f64,
    pub protocol: Protocol,
}

/// Pruned network: every node of the base network, and the base edges whose
/// rate exceeds the threshold.
#[derive(Debug, Clone)]
pub struct QkdNetwork<'a> {
    base: &'a GeneratedNetwork,
    k_min: f64,
    edges: Vec<QkdEdge>,
    topology: Graph,
    rates: RateGraph,
}

impl<'a> QkdNetwork<'a> {
    pub fn base(&self) -> &'a GeneratedNetwork {
        self.base
    }

    pub fn n_nodes(&self) -> usize {
        self.base.n_nodes()
    }

    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    pub fn edges(&self) -> &[QkdEdge] {
        &self.edges
    }

    /// Unweighted view of the surviving links.
    pub fn topology(&self) -> &Graph {
        &self.topology
    }

    pub fn rate_graph(&self) -> &RateGraph {
        &self.rates
    }

    pub fn to_snapshot(&self, policy: Option<&ProtocolPolicy>) -> QkdNetworkSnapshot {
        let base = self.base.to_snapshot();
        QkdNetworkSnapshot {
            params: base.params,
            seed: base.seed,
            nodes: base.nodes,
            edges: base.edges,
            policy: policy.copied(),
            qkd_edges: self.edges.clone(),
        }
    }

    pub fn write_json<W: Write>(&self, policy: Option<&ProtocolPolicy>, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_snapshot(policy))?;
        Ok(())
    }
}

/// JSON form of a pruned network: the generated-network document plus the
/// surviving links with their lengths, rates and protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkdNetworkSnapshot {
    pub params: ModelParams,
    pub seed: u64,
    pub nodes: Vec<NodeSeed>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<ProtocolPolicy>,
    pub qkd_edges: Vec<QkdEdge>,
}

impl QkdNetworkSnapshot {
    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }

    pub fn rate_graph(&self) -> Result<RateGraph> {
        let n = self.nodes.len();
        for e in &self.qkd_edges {
            if e.i >= n || e.j >= n {
                return Err(crate::Error::NodeOutOfRange(e.i.max(e.j), n));
            }
        }
        Ok(RateGraph::from_edges(
            n,
            self.qkd_edges.iter().map(|e| (e.i, e.j, e.rate_bps)),
        ))
    }
}

/// Rates every base edge with `policy` and keeps those above `policy.k_min`.
pub fn weigh_and_prune<'a>(net: &'a GeneratedNetwork, policy: &ProtocolPolicy) -> QkdNetwork<'a> {
    weigh_and_prune_with(net, policy.k_min, |l| policy.link_rate(l))
}

/// Pruning with an arbitrary length → rate function.
pub fn weigh_and_prune_with<'a, F>(net: &'a GeneratedNetwork, k_min: f64, rate_fn: F) -> QkdNetwork<'a>
where
    F: Fn(f64) -> LinkRate + Sync,
{
    let base_edges: Vec<(usize, usize)> = net.graph().edges().collect();
    let edges: Vec<QkdEdge> = base_edges
        .par_iter()
        .filter_map(|&(i, j)| {
            let length_km = net.real_length(i, j);
            let r = rate_fn(length_km);
            (r.rate_bps > k_min).then_some(QkdEdge {
                i,
                j,
                length_km,
                rate_bps: r.rate_bps,
                protocol: r.protocol,
            })
        })
        .collect();
    let n = net.n_nodes();
    QkdNetwork {
        base: net,
        k_min,
        topology: Graph::from_edges(n, edges.iter().map(|e| (e.i, e.j))),
        rates: RateGraph::from_edges(n, edges.iter().map(|e| (e.i, e.j, e.rate_bps))),
        edges,
    }
}

/// Aggregates over surviving links.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeRateSummary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub cv_share: f64,
    pub dv_share: f64,
}

pub fn edge_rate_summary(qnet: &QkdNetwork<'_>) -> EdgeRateSummary {
    summarize_edges(qnet.edges())
}

pub fn summarize_edges(edges: &[QkdEdge]) -> EdgeRateSummary {
    if edges.is_empty() {
        return EdgeRateSummary::default();
    }
    let count = edges.len();
    let (mut min, mut max, mut sum) = (f64::INFINITY, 0.0f64, 0.0);
    let (mut cv, mut dv) = (0usize, 0usize);
    for e in edges {
        min = min.min(e.rate_bps);
        max = max.max(e.rate_bps);
        sum += e.rate_bps;
        match e.protocol {
            Protocol::Cv => cv += 1,
            Protocol::Dv => dv += 1,
            Protocol::None => {}
        }
    }
    EdgeRateSummary {
        count,
        min,
        max,
        mean: sum / count as f64,
        cv_share: cv as f64 / count as f64,
        dv_share: dv as f64 / count as f64,
    }
}
