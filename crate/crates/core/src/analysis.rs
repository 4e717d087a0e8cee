//! Figures of merit over a single network or an ensemble of realizations.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::netgen::GeneratedNetwork;
use crate::seed::rng_from_seed;

/// Giant-component size divided by N, in `[1/N, 1]`.
pub fn connectivity(g: &Graph) -> f64 {
    if g.node_count() == 0 {
        return 0.0;
    }
    g.giant_component_size() as f64 / g.node_count() as f64
}

/// Variance-to-mean ratio of giant-component sizes (population variance).
pub fn susceptibility(gcc_sizes: &[f64]) -> Result<f64> {
    if gcc_sizes.is_empty() {
        return Err(Error::Empty("gcc_sizes"));
    }
    let n = gcc_sizes.len() as f64;
    let mean = gcc_sizes.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(invalid("gcc_sizes", "mean is zero"));
    }
    let var = gcc_sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok(var / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoCEstimate {
    pub rho_c: f64,
    pub index: usize,
    pub chi_max: f64,
    /// Peak sits on the first or last grid point, so the scan window may be off.
    pub at_boundary: bool,
}

/// Density of maximal susceptibility on a scan grid. Ties go to the smaller density.
pub fn estimate_rho_c(curve: &[(f64, f64)]) -> Result<RhoCEstimate> {
    if curve.len() < 3 {
        return Err(invalid("curve", format!("need at least 3 points, got {}", curve.len())));
    }
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(invalid("curve", "densities must be strictly increasing"));
    }
    let mut index = 0;
    for (i, &(_, chi)) in curve.iter().enumerate() {
        if chi > curve[index].1 {
            index = i;
        }
    }
    Ok(RhoCEstimate {
        rho_c: curve[index].0,
        index,
        chi_max: curve[index].1,
        at_boundary: index == 0 || index == curve.len() - 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub k: usize,
    /// `k`, or `k / <k>` for a normalized curve.
    pub x: f64,
    pub pc: f64,
}

/// Fraction of nodes with degree at least `k`, for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfCurve {
    pub normalized: bool,
    pub mean_degree: f64,
    pub points: Vec<CcdfPoint>,
}

impl CcdfCurve {
    pub fn k_max(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    /// `P_c(k)` for any `k`; zero past the maximum degree.
    pub fn at(&self, k: usize) -> f64 {
        self.points.get(k).map_or(0.0, |p| p.pc)
    }
}

pub fn degree_ccdf(g: &Graph, normalize: bool) -> Result<CcdfCurve> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::Empty("graph"));
    }
    let degrees = g.degrees();
    let k_max = degrees.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; k_max + 1];
    for &d in &degrees {
        hist[d] += 1;
    }
    let mean_degree = g.mean_degree();
    if normalize && mean_degree == 0.0 {
        return Err(invalid("normalize", "mean degree is zero"));
    }
    let scale = if normalize { 1.0 / mean_degree } else { 1.0 };
    let mut below = 0usize;
    let points = (0..=k_max)
        .map(|k| {
            let pc = (n - below) as f64 / n as f64;
            below += hist[k];
            CcdfPoint {
                k,
                x: k as f64 * scale,
                pc,
            }
        })
        .collect();
    Ok(CcdfCurve {
        normalized: normalize,
        mean_degree,
        points,
    })
}

/// Which BFS sources contribute to the average distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourcePolicy {
    All,
    /// `m` sources drawn without replacement from the giant component.
    Sample { m: usize, seed: u64 },
}

/// Exact below this many nodes, sampled above.
pub const EXACT_PATH_MAX_NODES: usize = 2000;
pub const DEFAULT_PATH_SOURCES: usize = 200;

impl SourcePolicy {
    pub fn for_size(n: usize, seed: u64) -> Self {
        if n <= EXACT_PATH_MAX_NODES {
            SourcePolicy::All
        } else {
            SourcePolicy::Sample {
                m: DEFAULT_PATH_SOURCES,
                seed,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLengthStats {
    /// Mean hop count over connected pairs in the giant component; NaN if there are none.
    pub mean: f64,
    pub pairs: u64,
    pub gcc_fraction: f64,
    /// The giant component holds no more than half the nodes.
    pub fragmented: bool,
}

/// Average shortest-path length inside the giant component.
pub fn avg_shortest_path(g: &Graph, policy: SourcePolicy) -> PathLengthStats {
    let n = g.node_count();
    let gcc = g.giant_component();
    let gcc_fraction = if n == 0 { 0.0 } else { gcc.len() as f64 / n as f64 };
    let fragmented = gcc_fraction <= 0.5;
    if fragmented {
        log::warn!(
            "average path length on a fragmented network (giant component {:.1}% of nodes)",
            100.0 * gcc_fraction
        );
    }
    let sources: Vec<usize> = match policy {
        SourcePolicy::Sample { m, seed } if m < gcc.len() => {
            let mut rng = rng_from_seed(seed);
            let mut s: Vec<usize> = sample(&mut rng, gcc.len(), m).into_iter().map(|i| gcc[i]).collect();
            s.sort_unstable();
            s
        }
        _ => gcc.clone(),
    };
    let (sum, pairs) = sources
        .par_iter()
        .map(|&s| {
            g.bfs_distances(s)
                .into_iter()
                .filter(|&d| d != usize::MAX && d > 0)
                .fold((0u64, 0u64), |(sum, c), d| (sum + d as u64, c + 1))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    PathLengthStats {
        mean: if pairs == 0 { f64::NAN } else { sum as f64 / pairs as f64 },
        pairs,
        gcc_fraction,
        fragmented,
    }
}

/// Mean real-space distance from each node to its nearest other node, km.
pub fn avg_nearest_neighbor_distance(net: &GeneratedNetwork) -> Result<f64> {
    let n = net.n_nodes();
    if n < 2 {
        return Err(invalid("n_nodes", "need at least two nodes"));
    }
    let nodes = &net.nodes;
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            // nearest on the sphere = largest dot product
            let best = (0..n)
                .filter(|&j| j != i)
                .map(|j| nodes[i].u.dot(&nodes[j].u))
                .fold(f64::NEG_INFINITY, f64::max);
            best.clamp(-1.0, 1.0).acos() * net.scales.r_real
        })
        .sum();
    Ok(total / n as f64)
}

/// Per-realization record of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub seed: u64,
    pub n_gcc: usize,
    pub mean_degree: f64,
}

impl RealizationRecord {
    pub fn from_graph(seed: u64, g: &Graph) -> Self {
        Self {
            seed,
            n_gcc: g.giant_component_size(),
            mean_degree: g.mean_degree(),
        }
    }
}

/// Realizations sharing one density and size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStat {
    pub rho: f64,
    pub n_nodes: usize,
    pub realizations: Vec<RealizationRecord>,
}

impl EnsembleStat {
    pub fn new(rho: f64, n_nodes: usize, realizations: Vec<RealizationRecord>) -> Result<Self> {
        if realizations.is_empty() {
            return Err(Error::Empty("realizations"));
        }
        if let Some(r) = realizations.iter().find(|r| r.n_gcc > n_nodes) {
            return Err(invalid("realizations", format!("n_gcc {} exceeds N = {n_nodes}", r.n_gcc)));
        }
        Ok(Self {
            rho,
            n_nodes,
            realizations,
        })
    }

    pub fn gcc_sizes(&self) -> Vec<f64> {
        self.realizations.iter().map(|r| r.n_gcc as f64).collect()
    }

    pub fn mean_connectivity(&self) -> f64 {
        let s: f64 = self.gcc_sizes().iter().sum();
        s / (self.realizations.len() * self.n_nodes) as f64
    }

    pub fn mean_degree(&self) -> f64 {
        self.realizations.iter().map(|r| r.mean_degree).sum::<f64>() / self.realizations.len() as f64
    }

    pub fn susceptibility(&self) -> Result<f64> {
        susceptibility(&self.gcc_sizes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{NodeSeed, UnitVec3};
    use crate::netgen::{generate, ModelParams};

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)])
    }

    #[test]
    fn connectivity_examples() {
        assert!((connectivity(&Graph::from_edges(10, [])) - 0.1).abs() < 1e-15);
        assert_eq!(connectivity(&path3()), 1.0);
        assert_eq!(connectivity(&Graph::from_edges(6, [(0, 1), (1, 2), (3, 4)])), 0.5);
    }

    #[test]
    fn susceptibility_examples() {
        assert_eq!(susceptibility(&[100.0, 100.0, 100.0]).unwrap(), 0.0);
        assert!((susceptibility(&[90.0, 110.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(susceptibility(&[7.0]).unwrap(), 0.0);
        assert!(susceptibility(&[]).is_err());
        assert!(susceptibility(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn susceptibility_scales_linearly() {
        let sizes = [12.0, 40.0, 33.0, 7.0, 19.0];
        let chi = susceptibility(&sizes).unwrap();
        for c in [0.5, 3.0, 17.25] {
            let scaled: Vec<f64> = sizes.iter().map(|s| s * c).collect();
            let got = susceptibility(&scaled).unwrap();
            assert!((got - c * chi).abs() <= 1e-12 * c * chi);
        }
    }

    #[test]
    fn rho_c_is_argmax() {
        let curve: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 + 1.0, -((i as f64 - 5.0).powi(2)))).collect();
        let est = estimate_rho_c(&curve).unwrap();
        assert_eq!(est.rho_c, 6.0);
        assert!(!est.at_boundary);

        let rising: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, i as f64)).collect();
        let est = estimate_rho_c(&rising).unwrap();
        assert_eq!(est.index, 4);
        assert!(est.at_boundary);

        let tie = [(1.0, 0.0), (2.0, 3.0), (3.0, 3.0), (4.0, 1.0)];
        assert_eq!(estimate_rho_c(&tie).unwrap().rho_c, 2.0);

        assert!(estimate_rho_c(&tie[..2]).is_err());
        assert!(estimate_rho_c(&[(1.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn ccdf_of_path() {
        let c = degree_ccdf(&path3(), false).unwrap();
        assert_eq!(c.at(0), 1.0);
        assert_eq!(c.at(1), 1.0);
        assert!((c.at(2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.at(3), 0.0);
        let cn = degree_ccdf(&path3(), true).unwrap();
        assert!((cn.points[2].x - 2.0 / (4.0 / 3.0)).abs() < 1e-15);
        assert!(degree_ccdf(&Graph::from_edges(3, []), true).is_err());
    }

    #[test]
    fn ccdf_is_monotone_on_generated_network() {
        let net = generate(&ModelParams { n_nodes: 500, seed: 3, ..Default::default() }).unwrap();
        let c = degree_ccdf(net.graph(), false).unwrap();
        assert_eq!(c.at(0), 1.0);
        assert!(c.points.windows(2).all(|w| w[1].pc <= w[0].pc));
        assert!(c.points.iter().all(|p| (0.0..=1.0).contains(&p.pc)));
        assert_eq!(c.at(c.k_max() + 1), 0.0);
        assert!(c.points.last().unwrap().pc > 0.0);
    }

    #[test]
    fn path_length_examples() {
        let k5 = Graph::from_edges(5, (0..5).flat_map(|i| ((i + 1)..5).map(move |j| (i, j))));
        assert_eq!(avg_shortest_path(&k5, SourcePolicy::All).mean, 1.0);
        assert!((avg_shortest_path(&path3(), SourcePolicy::All).mean - 4.0 / 3.0).abs() < 1e-15);
        let star = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert!((avg_shortest_path(&star, SourcePolicy::All).mean - 1.6).abs() < 1e-15);
    }

    #[test]
    fn path_length_ignores_small_components() {
        let g = Graph::from_edges(7, [(0, 1), (1, 2), (2, 3), (5, 6)]);
        let s = avg_shortest_path(&g, SourcePolicy::All);
        // path of 4 nodes: (3*1 + 2*2 + 1*3) / 6
        assert!((s.mean - 10.0 / 6.0).abs() < 1e-15);
        assert!(!s.fragmented);
        let frag = avg_shortest_path(&Graph::from_edges(6, [(0, 1), (2, 3)]), SourcePolicy::All);
        assert!(frag.fragmented);
        assert_eq!(frag.mean, 1.0);
    }

    #[test]
    fn sampled_sources_are_deterministic_and_close() {
        let net = generate(&ModelParams { n_nodes: 800, seed: 5, ..Default::default() }).unwrap();
        let exact = avg_shortest_path(net.graph(), SourcePolicy::All).mean;
        let p = SourcePolicy::Sample { m: 200, seed: 9 };
        let a = avg_shortest_path(net.graph(), p);
        assert_eq!(a, avg_shortest_path(net.graph(), p));
        assert!((a.mean - exact).abs() / exact < 0.05);
        assert_eq!(SourcePolicy::for_size(2000, 1), SourcePolicy::All);
        assert!(matches!(SourcePolicy::for_size(2001, 1), SourcePolicy::Sample { m: 200, .. }));
    }

    fn two_node_net(u: UnitVec3, v: UnitVec3, r_real: f64) -> GeneratedNetwork {
        let rho = 2.0 / (4.0 * std::f64::consts::PI * r_real * r_real);
        let nodes = vec![
            NodeSeed { id: 0, u, kappa: 1.0 },
            NodeSeed { id: 1, u: v, kappa: 1.0 },
        ];
        GeneratedNetwork::from_parts(ModelParams { rho, ..Default::default() }, nodes, []).unwrap()
    }

    #[test]
    fn nearest_neighbor_examples() {
        let n = UnitVec3::new(0.0, 0.0, 1.0).unwrap();
        let s = UnitVec3::new(0.0, 0.0, -1.0).unwrap();
        let d = avg_nearest_neighbor_distance(&two_node_net(n, s, 10.0)).unwrap();
        assert!((d - 10.0 * std::f64::consts::PI).abs() < 1e-9);
        assert_eq!(avg_nearest_neighbor_distance(&two_node_net(n, n, 10.0)).unwrap(), 0.0);
    }

    #[test]
    fn ensemble_stat_validates() {
        assert!(EnsembleStat::new(1e-3, 10, vec![]).is_err());
        let rec = |n_gcc| RealizationRecord { seed: 0, n_gcc, mean_degree: 2.0 };
        assert!(EnsembleStat::new(1e-3, 10, vec![rec(11)]).is_err());
        let e = EnsembleStat::new(1e-3, 100, vec![rec(90), rec(110 - 20)]).unwrap();
        assert!((e.mean_connectivity() - 0.9).abs() < 1e-15);
        assert_eq!(e.susceptibility().unwrap(), 0.0);
    }
}
