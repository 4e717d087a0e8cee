use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GridSpec, ScanKind};
use crate::analysis::{avg_shortest_path, connectivity, estimate_rho_c, susceptibility, SourcePolicy};
use crate::error::{Error, Result};
use crate::netgen::{generate, GeneratedNetwork, ModelParams};
use crate::qkdnet::{edge_rate_summary, weigh_and_prune, ProtocolKind, ProtocolPolicy};
use crate::qkdrates::LinkRate;
use crate::routing::average_key_rate;
use crate::seed::{derive_seed, rng_from_seed, splitmix64};

/// Bumped whenever the column set or meaning changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const SCAN_COLUMNS: [&str; 17] = [
    "kind",
    "grid_index",
    "realization",
    "x",
    "policy",
    "seed",
    "N",
    "rho",
    "k_min",
    "connectivity",
    "n_gcc",
    "mean_degree",
    "avg_d",
    "avg_K",
    "dv_edge_share",
    "status",
    "wall_time_s",
];

pub const RATE_COLUMNS: [&str; 4] = ["L_km", "rate_bps", "protocol", "valid"];

/// Above this many estimated pair-probability evaluations a scan logs a warning.
pub const EVALUATION_WARN_THRESHOLD: f64 = 1e9;

const PAIR_SAMPLE_SALT: u64 = 0x6b65_795f_7261_7465;
const PATH_SOURCE_SALT: u64 = 0x7061_7468_5f73_7263;

/// One (grid point, realization, policy) measurement. Metrics are empty on
/// error rows and where the scan kind does not compute them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub kind: ScanKind,
    pub grid_index: usize,
    pub realization: usize,
    pub x: f64,
    pub policy: ProtocolKind,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n_nodes: usize,
    pub rho: f64,
    pub k_min: f64,
    pub connectivity: Option<f64>,
    pub n_gcc: Option<usize>,
    pub mean_degree: Option<f64>,
    pub avg_d: Option<f64>,
    #[serde(rename = "avg_K")]
    pub avg_k: Option<f64>,
    pub dv_edge_share: Option<f64>,
    pub status: String,
    pub wall_time_s: f64,
}

impl ScanRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// One point of a rate-versus-length curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    #[serde(rename = "L_km")]
    pub length_km: f64,
    pub rate_bps: f64,
    pub protocol: crate::qkdrates::Protocol,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub kind: ScanKind,
    pub grid: Vec<f64>,
    pub rows: Vec<ScanRow>,
    pub rate_points: Vec<RatePoint>,
}

impl ScanResult {
    pub fn error_count(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    /// Grid points where no realization succeeded.
    pub fn failed_grid_points(&self) -> Vec<usize> {
        (0..self.grid.len())
            .filter(|&g| self.rows.iter().filter(|r| r.grid_index == g).all(|r| !r.is_ok()))
            .filter(|_| self.kind != ScanKind::RateCurve)
            .collect()
    }

    /// (x, χ) per grid point for one policy, over successful rows.
    pub fn susceptibility_curve(&self, policy: ProtocolKind) -> Result<Vec<(f64, f64)>> {
        (0..self.grid.len())
            .map(|g| {
                let sizes: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.grid_index == g && r.policy == policy && r.is_ok())
                    .filter_map(|r| r.n_gcc.map(|n| n as f64))
                    .collect();
                Ok((self.grid[g], susceptibility(&sizes)?))
            })
            .collect()
    }

    /// Mean of a metric per grid point for one policy, skipping empty cells.
    pub fn mean_by_grid<F>(&self, policy: ProtocolKind, metric: F) -> Vec<(f64, f64)>
    where
        F: Fn(&ScanRow) -> Option<f64>,
    {
        (0..self.grid.len())
            .map(|g| {
                let v: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.grid_index == g && r.policy == policy)
                    .filter_map(&metric)
                    .collect();
                let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
                (self.grid[g], mean)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, cfg: &ExperimentConfig, w: W) -> Result<()> {
        if self.kind == ScanKind::RateCurve {
            let mut w = w;
            writeln!(w, "{}", header_comment(cfg))?;
            return write_rate_csv(w, &self.rate_points);
        }
        let mut out = ScanCsvWriter::new(w, cfg)?;
        out.write_rows(&self.rows)?;
        out.finish()
    }
}

fn header_comment(cfg: &ExperimentConfig) -> String {
    format!(
        "# qkdnet scan v{CSV_SCHEMA_VERSION} kind={} master_seed={} realizations={} pair_samples={} version={}",
        cfg.scan.kind.as_str(),
        cfg.master_seed,
        cfg.realizations(),
        cfg.pair_samples,
        env!("CARGO_PKG_VERSION"),
    )
}

/// Streams scan rows as CSV behind a versioned comment line.
pub struct ScanCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ScanCsvWriter<W> {
    pub fn new(mut w: W, cfg: &ExperimentConfig) -> Result<Self> {
        writeln!(w, "{}", header_comment(cfg))?;
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        inner.write_record(SCAN_COLUMNS).map_err(csv_err)?;
        Ok(Self { inner })
    }

    pub fn write_rows(&mut self, rows: &[ScanRow]) -> Result<()> {
        for r in rows {
            self.inner.serialize(CsvRow::from(r)).map_err(csv_err)?;
        }
        self.inner.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Flat CSV view; the enums go out as their lowercase names.
#[derive(Serialize)]
struct CsvRow<'a> {
    kind: &'static str,
    grid_index: usize,
    realization: usize,
    x: f64,
    policy: &'static str,
    seed: u64,
    n_nodes: usize,
    rho: f64,
    k_min: f64,
    connectivity: Option<f64>,
    n_gcc: Option<usize>,
    mean_degree: Option<f64>,
    avg_d: Option<f64>,
    avg_k: Option<f64>,
    dv_edge_share: Option<f64>,
    status: &'a str,
    wall_time_s: f64,
}

impl<'a> From<&'a ScanRow> for CsvRow<'a> {
    fn from(r: &'a ScanRow) -> Self {
        Self {
            kind: r.kind.as_str(),
            grid_index: r.grid_index,
            realization: r.realization,
            x: r.x,
            policy: r.policy.as_str(),
            seed: r.seed,
            n_nodes: r.n_nodes,
            rho: r.rho,
            k_min: r.k_min,
            connectivity: r.connectivity,
            n_gcc: r.n_gcc,
            mean_degree: r.mean_degree,
            avg_d: r.avg_d,
            avg_k: r.avg_k,
            dv_edge_share: r.dv_edge_share,
            status: &r.status,
            wall_time_s: r.wall_time_s,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn write_rate_csv<W: Write>(w: W, points: &[RatePoint]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(RATE_COLUMNS).map_err(csv_err)?;
    for p in points {
        out.serialize((p.length_km, p.rate_bps, p.protocol.as_str(), p.valid))
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Link rate at each length under one policy.
pub fn rate_curve(policy: &ProtocolPolicy, lengths_km: &[f64]) -> Vec<RatePoint> {
    lengths_km
        .iter()
        .map(|&l| {
            let LinkRate { rate_bps, protocol, valid } = policy.link_rate(l);
            RatePoint {
                length_km: l,
                rate_bps,
                protocol,
                valid,
            }
        })
        .collect()
}

/// Rough count of pair-probability evaluations the scan's first generation rounds need.
pub fn estimated_evaluations(cfg: &ExperimentConfig) -> Result<f64> {
    if cfg.scan.kind == ScanKind::RateCurve {
        return Ok(0.0);
    }
    let grid = cfg.scan.grid.values()?;
    let r = cfg.realizations() as f64;
    Ok(grid
        .iter()
        .map(|&x| {
            let n = match cfg.scan.kind {
                ScanKind::Size => x,
                _ => cfg.model.n_nodes as f64,
            };
            n * (n - 1.0) / 2.0 * r
        })
        .sum())
}

/// Runs the whole scan and returns its rows in (grid, realization, policy) order.
pub fn run_scan(cfg: &ExperimentConfig) -> Result<ScanResult> {
    run_scan_with(cfg, |_| Ok(()))
}

/// Runs the scan and streams it as CSV, one grid point at a time.
pub fn run_scan_to<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<ScanResult> {
    if cfg.scan.kind == ScanKind::RateCurve {
        let res = run_scan(cfg)?;
        res.write_csv(cfg, w)?;
        return Ok(res);
    }
    let mut out = ScanCsvWriter::new(w, cfg)?;
    let res = run_scan_with(cfg, |rows| out.write_rows(rows))?;
    out.finish()?;
    Ok(res)
}

/// Runs the scan, handing each finished grid point's sorted rows to `sink`.
pub fn run_scan_with<F>(cfg: &ExperimentConfig, mut sink: F) -> Result<ScanResult>
where
    F: FnMut(&[ScanRow]) -> Result<()>,
{
    cfg.validate()?;
    let grid = cfg.scan.grid.values()?;
    if cfg.scan.kind == ScanKind::RateCurve {
        return Ok(ScanResult {
            kind: cfg.scan.kind,
            rate_points: rate_curve(&cfg.policy, &grid),
            grid,
            rows: Vec::new(),
        });
    }
    let evals = estimated_evaluations(cfg)?;
    if evals > EVALUATION_WARN_THRESHOLD {
        log::warn!("scan implies about {evals:.2e} pair-probability evaluations; expect a long run");
    }
    let mut rows = Vec::new();
    for g in 0..grid.len() {
        let mut chunk: Vec<ScanRow> = (0..cfg.realizations())
            .into_par_iter()
            .flat_map_iter(|r| evaluate_task(cfg, &grid, g, r))
            .collect();
        chunk.sort_by_key(|row| (row.realization, row.policy as u8));
        sink(&chunk)?;
        let failed = chunk.iter().filter(|r| !r.is_ok()).count();
        log::info!(
            "{} grid point {}/{} (x = {}) done, {failed} failed rows",
            cfg.scan.kind.as_str(),
            g + 1,
            grid.len(),
            grid[g]
        );
        rows.extend(chunk);
    }
    Ok(ScanResult {
        kind: cfg.scan.kind,
        grid,
        rows,
        rate_points: Vec::new(),
    })
}

/// Recomputes the rows of one (grid point, realization) from the config alone.
pub fn replay_row(cfg: &ExperimentConfig, grid_index: usize, realization: usize) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    let grid = cfg.scan.grid.values()?;
    if cfg.scan.kind == ScanKind::RateCurve {
        return Err(Error::Config("rate curves have no realizations".into()));
    }
    if grid_index >= grid.len() || realization >= cfg.realizations() {
        return Err(Error::Config(format!(
            "no cell ({grid_index}, {realization}) in a {}x{} scan",
            grid.len(),
            cfg.realizations()
        )));
    }
    Ok(evaluate_task(cfg, &grid, grid_index, realization))
}

/// Seed of the network used at a grid point. K_min scans reuse one ensemble
/// across the whole grid.
pub fn task_seed(cfg: &ExperimentConfig, grid_index: usize, realization: usize) -> u64 {
    let network_index = match cfg.scan.kind {
        ScanKind::Kmin => 0,
        _ => grid_index,
    };
    derive_seed(cfg.master_seed, network_index as u32, realization as u32)
}

fn task_model(cfg: &ExperimentConfig, x: f64, seed: u64) -> ModelParams {
    let mut m = cfg.model.clone();
    m.seed = seed;
    match cfg.scan.kind {
        ScanKind::Density | ScanKind::Susceptibility | ScanKind::ProtocolCompare => m.rho = x,
        ScanKind::Size => m.n_nodes = x as usize,
        ScanKind::Kmin | ScanKind::RateCurve => {}
    }
    m
}

fn task_policies(cfg: &ExperimentConfig, x: f64) -> Vec<ProtocolPolicy> {
    let mut policies = cfg.policies();
    if cfg.scan.kind == ScanKind::Kmin {
        for p in &mut policies {
            p.k_min = x;
        }
    }
    policies
}

fn evaluate_task(cfg: &ExperimentConfig, grid: &[f64], g: usize, r: usize) -> Vec<ScanRow> {
    let start = Instant::now();
    let x = grid[g];
    let seed = task_seed(cfg, g, r);
    let model = task_model(cfg, x, seed);
    let policies = task_policies(cfg, x);
    let base = ScanRow {
        kind: cfg.scan.kind,
        grid_index: g,
        realization: r,
        x,
        policy: ProtocolKind::Cv,
        seed,
        n_nodes: model.n_nodes,
        rho: model.rho,
        k_min: 0.0,
        connectivity: None,
        n_gcc: None,
        mean_degree: None,
        avg_d: None,
        avg_k: None,
        dv_edge_share: None,
        status: "ok".into(),
        wall_time_s: 0.0,
    };
    let net = generate(&model);
    let gen_time = start.elapsed().as_secs_f64();
    policies
        .iter()
        .map(|p| {
            let t = Instant::now();
            let mut row = ScanRow {
                policy: p.kind,
                k_min: p.k_min,
                ..base.clone()
            };
            match &net {
                Ok(net) => measure(cfg, net, p, seed, &mut row),
                Err(e) => {
                    log::warn!("grid point {g}, realization {r}: {e}");
                    row.status = format!("error: {e}");
                }
            }
            row.wall_time_s = gen_time + t.elapsed().as_secs_f64();
            row
        })
        .collect()
}

fn measure(cfg: &ExperimentConfig, net: &GeneratedNetwork, policy: &ProtocolPolicy, seed: u64, row: &mut ScanRow) {
    let q = weigh_and_prune(net, policy);
    let topo = q.topology();
    row.connectivity = Some(connectivity(topo));
    row.n_gcc = Some(topo.giant_component_size());
    row.mean_degree = Some(topo.mean_degree());
    row.dv_edge_share = Some(edge_rate_summary(&q).dv_share);
    if cfg.scan.kind.full_metrics() {
        let sources = SourcePolicy::for_size(net.n_nodes(), splitmix64(seed ^ PATH_SOURCE_SALT));
        let d = avg_shortest_path(topo, sources).mean;
        row.avg_d = d.is_finite().then_some(d);
        let mut rng = rng_from_seed(splitmix64(seed ^ PAIR_SAMPLE_SALT));
        row.avg_k = Some(average_key_rate(q.rate_graph(), cfg.pair_samples, &mut rng));
    }
}

/// Critical density estimated at one network size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoCRow {
    #[serde(rename = "N")]
    pub n_nodes: usize,
    pub rho_c: f64,
    pub chi_max: f64,
    pub at_boundary: bool,
    pub refined: bool,
}

pub const RHOC_COLUMNS: [&str; 5] = ["N", "rho_c", "chi_max", "at_boundary", "refined"];

/// Susceptibility scan over `cfg.scan.grid` for every size in `cfg.scan.sizes`.
pub fn run_rho_c_vs_n(cfg: &ExperimentConfig) -> Result<Vec<RhoCRow>> {
    cfg.validate()?;
    let sizes = cfg
        .scan
        .sizes
        .as_ref()
        .ok_or_else(|| Error::Config("critical-density runs need scan.sizes".into()))?
        .values()?;
    sizes
        .iter()
        .enumerate()
        .map(|(s, &n)| {
            let mut sub = cfg.clone();
            sub.scan.kind = ScanKind::Susceptibility;
            sub.scan.sizes = None;
            sub.realizations = Some(cfg.realizations());
            sub.model.n_nodes = n as usize;
            sub.master_seed = derive_seed(cfg.master_seed, s as u32, u32::MAX);
            let mut est = estimate_rho_c(&run_scan(&sub)?.susceptibility_curve(cfg.policy.kind)?)?;
            let mut refined = false;
            if cfg.scan.refine {
                let points = sub.scan.grid.values()?.len().max(3);
                sub.scan.grid = GridSpec::Log {
                    min: est.rho_c / 10f64.sqrt(),
                    max: est.rho_c * 10f64.sqrt(),
                    points,
                };
                sub.master_seed = derive_seed(cfg.master_seed, s as u32, u32::MAX - 1);
                est = estimate_rho_c(&run_scan(&sub)?.susceptibility_curve(cfg.policy.kind)?)?;
                refined = true;
            }
            log::info!("N = {n}: rho_c = {:.4e} (chi = {:.3})", est.rho_c, est.chi_max);
            Ok(RhoCRow {
                n_nodes: n as usize,
                rho_c: est.rho_c,
                chi_max: est.chi_max,
                at_boundary: est.at_boundary,
                refined,
            })
        })
        .collect()
}

pub fn write_rho_c_csv<W: Write>(cfg: &ExperimentConfig, mut w: W, rows: &[RhoCRow]) -> Result<()> {
    writeln!(w, "{}", header_comment(cfg))?;
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(RHOC_COLUMNS).map_err(csv_err)?;
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
