//! Node positions on the sphere, hidden degrees, and sphere metrics.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Pareto, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVec3 {
    /// Normalizes `(x, y, z)`. Returns `None` for the zero vector.
    pub fn new(x: f64, y: f64, z: f64) -> Option<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        Some(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn dot(&self, other: &UnitVec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Central angle to `other`, in radians.
    pub fn angle_to(&self, other: &UnitVec3) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}

impl From<[f64; 3]> for UnitVec3 {
    fn from(v: [f64; 3]) -> Self {
        Self {
            x: v[0],
            y: v[1],
            z: v[2],
        }
    }
}

impl From<UnitVec3> for [f64; 3] {
    fn from(v: UnitVec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// Hidden parameters of one node: position on the unit sphere and hidden degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSeed {
    pub id: usize,
    pub u: UnitVec3,
    pub kappa: f64,
}

/// Radii of the latent and real spheres for a given node count and density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceScales {
    pub n_nodes: usize,
    /// Radius of the latent sphere; node density there is one per unit area.
    pub r_latent: f64,
    /// Radius of the real sphere in km.
    pub r_real: f64,
    /// Node density in km⁻².
    pub rho: f64,
}

impl SpaceScales {
    /// Factor converting latent distances to km.
    pub fn latent_to_real(&self) -> f64 {
        self.r_real / self.r_latent
    }
}

pub fn latent_radius(n: usize) -> f64 {
    (n as f64 / (4.0 * PI)).sqrt()
}

/// Radii that place `n` nodes on a sphere with real-space density `rho` (km⁻²).
pub fn scales_from_density(n: usize, rho: f64) -> Result<SpaceScales> {
    if n == 0 {
        return Err(invalid("n_nodes", "must be at least 1"));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(invalid("rho", format!("must be positive and finite, got {rho}")));
    }
    Ok(SpaceScales {
        n_nodes: n,
        r_latent: latent_radius(n),
        r_real: (n as f64 / (4.0 * PI * rho)).sqrt(),
        rho,
    })
}

/// `n` points uniformly distributed on the unit sphere (normalized Gaussian triples).
pub fn sample_uniform_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<UnitVec3> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: f64 = StandardNormal.sample(rng);
        let y: f64 = StandardNormal.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        // The zero vector has probability zero; skip it if it ever shows up.
        if let Some(v) = UnitVec3::new(x, y, z) {
            out.push(v);
        }
    }
    out
}

/// `n` draws from the continuous Pareto density ∝ κ^−γ on `[kappa_min, ∞)`.
pub fn sample_hidden_degrees<R: Rng + ?Sized>(
    n: usize,
    gamma: f64,
    kappa_min: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(gamma > 1.0) {
        return Err(invalid("gamma", format!("must exceed 1, got {gamma}")));
    }
    if !(kappa_min > 0.0) || !kappa_min.is_finite() {
        return Err(invalid("kappa_min", format!("must be positive, got {kappa_min}")));
    }
    let pareto = Pareto::new(kappa_min, gamma - 1.0)
        .map_err(|e| invalid("gamma", e.to_string()))?;
    Ok((0..n).map(|_| pareto.sample(rng)).collect())
}

/// Great-circle distance between two unit vectors on a sphere of `radius`.
pub fn geodesic_distance(a: &UnitVec3, b: &UnitVec3, radius: f64) -> f64 {
    radius * a.angle_to(b)
}
