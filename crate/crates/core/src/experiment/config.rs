use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::ModelParams;
use crate::qkdnet::{ProtocolKind, ProtocolPolicy};
use crate::routing::DEFAULT_PAIR_SAMPLES;

pub const DEFAULT_REALIZATIONS: usize = 10;
pub const DEFAULT_SUSCEPTIBILITY_REALIZATIONS: usize = 40;

/// What a scan varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    /// Density ρ, all metrics.
    Density,
    /// Density ρ, giant-component statistics only.
    Susceptibility,
    /// Network size N at fixed density.
    Size,
    /// Rate threshold K_min on shared networks.
    Kmin,
    /// Density ρ under CV, DV and hybrid policies on shared networks.
    ProtocolCompare,
    /// Link rate against fiber length; no networks.
    RateCurve,
}

impl ScanKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanKind::Density => "density",
            ScanKind::Susceptibility => "susceptibility",
            ScanKind::Size => "size",
            ScanKind::Kmin => "kmin",
            ScanKind::ProtocolCompare => "protocol-compare",
            ScanKind::RateCurve => "rate-curve",
        }
    }

    /// Whether the path-length and key-rate columns are computed.
    pub fn full_metrics(&self) -> bool {
        !matches!(self, ScanKind::Susceptibility)
    }
}

/// Grid of values for the scanned variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GridSpec {
    /// `points` values log-spaced over `[min, max]`.
    Log { min: f64, max: f64, points: usize },
    Linear { min: f64, max: f64, points: usize },
    Values(Vec<f64>),
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match *self {
            GridSpec::Log { min, max, points } => {
                if !(min > 0.0 && max > 0.0) {
                    return Err(Error::Config(format!("log grid bounds must be positive, got [{min}, {max}]")));
                }
                spaced(min.log10(), max.log10(), points)?
                    .into_iter()
                    .map(|e| 10f64.powf(e))
                    .collect()
            }
            GridSpec::Linear { min, max, points } => spaced(min, max, points)?,
            GridSpec::Values(ref v) => v.clone(),
        };
        if v.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("grid values must be finite".into()));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("grid must be strictly increasing".into()));
        }
        Ok(v)
    }
}

fn spaced(a: f64, b: f64, points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Ok(Vec::new()),
        1 => Ok(vec![a]),
        _ => {
            if !(b > a) {
                return Err(Error::Config(format!("grid needs min < max, got [{a}, {b}]")));
            }
            let step = (b - a) / (points - 1) as f64;
            Ok((0..points)
                .map(|i| if i == points - 1 { b } else { a + step * i as f64 })
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub kind: ScanKind,
    pub grid: GridSpec,
    /// Network sizes for a critical-density-versus-size run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<GridSpec>,
    /// Follow a coarse susceptibility scan with one over a decade centered on its peak.
    #[serde(default)]
    pub refine: bool,
    /// Policies applied to each network; overrides `policy.kind`. Protocol
    /// comparisons default to CV, DV and hybrid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocols: Option<Vec<ProtocolKind>>,
}

impl ScanSpec {
    pub fn new(kind: ScanKind, grid: GridSpec) -> Self {
        Self {
            kind,
            grid,
            sizes: None,
            refine: false,
            protocols: None,
        }
    }
}

/// A complete experiment description. Every field except `scan` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub policy: ProtocolPolicy,
    pub scan: ScanSpec,
    /// Defaults to 40 for susceptibility scans and 10 otherwise.
    #[serde(default)]
    pub realizations: Option<usize>,
    #[serde(default = "default_pair_samples")]
    pub pair_samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_pair_samples() -> usize {
    DEFAULT_PAIR_SAMPLES
}

impl ExperimentConfig {
    pub fn new(scan: ScanSpec) -> Self {
        Self {
            model: ModelParams::default(),
            policy: ProtocolPolicy::default(),
            scan,
            realizations: None,
            pair_samples: DEFAULT_PAIR_SAMPLES,
            master_seed: 0,
            output: None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    pub fn realizations(&self) -> usize {
        self.realizations.unwrap_or(match self.scan.kind {
            ScanKind::Susceptibility => DEFAULT_SUSCEPTIBILITY_REALIZATIONS,
            _ => DEFAULT_REALIZATIONS,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let config_err = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.model.validate().map_err(config_err)?;
        self.policy.validate().map_err(config_err)?;
        if self.realizations() == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        let grid = self.scan.grid.values()?;
        match self.scan.kind {
            ScanKind::Density | ScanKind::Susceptibility | ScanKind::ProtocolCompare => {
                if grid[0] <= 0.0 {
                    return Err(Error::Config("densities must be positive".into()));
                }
            }
            ScanKind::Size => check_sizes(&grid)?,
            ScanKind::Kmin | ScanKind::RateCurve => {
                if grid[0] < 0.0 {
                    return Err(Error::Config(format!("{} grid must be non-negative", self.scan.kind.as_str())));
                }
            }
        }
        if let Some(list) = &self.scan.protocols {
            if list.is_empty() {
                return Err(Error::Config("scan.protocols is empty".into()));
            }
            if (1..list.len()).any(|i| list[..i].contains(&list[i])) {
                return Err(Error::Config("scan.protocols has duplicates".into()));
            }
        }
        if let Some(sizes) = &self.scan.sizes {
            check_sizes(&sizes.values()?)?;
        }
        Ok(())
    }

    /// Policies applied to every network of a grid point.
    pub(crate) fn policies(&self) -> Vec<ProtocolPolicy> {
        let kinds = match (&self.scan.protocols, self.scan.kind) {
            (Some(list), _) => list.clone(),
            (None, ScanKind::ProtocolCompare) => vec![ProtocolKind::Cv, ProtocolKind::Dv, ProtocolKind::Hybrid],
            (None, _) => vec![self.policy.kind],
        };
        kinds
            .into_iter()
            .map(|kind| ProtocolPolicy { kind, ..self.policy })
            .collect()
    }
}

fn check_sizes(grid: &[f64]) -> Result<()> {
    for &n in grid {
        if n < 2.0 || n.fract() != 0.0 {
            return Err(Error::Config(format!("network sizes must be integers >= 2, got {n}")));
        }
    }
    Ok(())
}
