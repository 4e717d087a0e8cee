//! Per-link secret-key rates.
//!
//! All entropies are in bits, so rates come out in bits per second. Rates
//! are asymptotic Devetak-Winter bounds clamped at zero.

mod cv;
mod dv;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use cv::{
    conditional_cov_homodyne, cv_covariance, cv_key_breakdown, cv_mutual_information, cv_rate,
    excess_noise, g, holevo_bound, symplectic_eigenvalues, two_mode_omega, z_matrix, CovMode,
    CvBreakdown, Quadrature, TwoModeCov,
};
pub use dv::{dv_qber, dv_rate};

/// Which protocol carries a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "CV")]
    Cv,
    #[serde(rename = "DV")]
    Dv,
    #[serde(rename = "none")]
    None,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Cv => "CV",
            Protocol::Dv => "DV",
            Protocol::None => "none",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Key rate of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRate {
    /// bits/s, never negative
    pub rate_bps: f64,
    /// `None` exactly when the rate is zero.
    pub protocol: Protocol,
    /// False when the CV covariance matrix was unphysical (as-written mode only).
    pub valid: bool,
}

impl LinkRate {
    pub fn zero() -> Self {
        Self {
            rate_bps: 0.0,
            protocol: Protocol::None,
            valid: true,
        }
    }

    pub(crate) fn tagged(rate_bps: f64, protocol: Protocol) -> Self {
        if rate_bps > 0.0 {
            Self {
                rate_bps,
                protocol,
                valid: true,
            }
        } else {
            Self::zero()
        }
    }
}

/// Gaussian-modulated CV-QKD link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvParams {
    /// Repetition rate, Hz.
    pub nu: f64,
    /// Fiber loss, dB/km.
    pub alpha_att: f64,
    /// Baseline excess noise at the sender, shot-noise units.
    pub eps0: f64,
    /// Detector efficiency.
    pub eta: f64,
    /// Modulation variance σ_A², shot-noise units.
    pub sigma_a2: f64,
    /// 1 for homodyne, 2 for heterodyne detection.
    pub tau: f64,
}

impl Default for CvParams {
    fn default() -> Self {
        Self {
            nu: 1e9,
            alpha_att: 0.18,
            eps0: 0.005,
            eta: 0.8,
            sigma_a2: 100.0,
            tau: 1.0,
        }
    }
}

impl CvParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu", self.nu),
            ("alpha_att", self.alpha_att),
            ("eps0", self.eps0),
            ("eta", self.eta),
            ("sigma_a2", self.sigma_a2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.eta > 1.0 {
            return Err(invalid("eta", format!("must lie in (0, 1], got {}", self.eta)));
        }
        if self.tau != 1.0 && self.tau != 2.0 {
            return Err(invalid("tau", format!("must be 1 or 2, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Single-photon BB84 link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DvParams {
    /// Repetition rate, Hz.
    pub nu: f64,
    /// Fiber loss, dB/km.
    pub alpha_att: f64,
    /// Detector efficiency.
    pub p_det: f64,
    /// Source efficiency.
    pub nu_src: f64,
    /// Dark-count rate, Hz.
    pub r_dark: f64,
    /// Detection window, s.
    pub delta_d: f64,
    /// Baseline QBER.
    pub q0: f64,
}

impl Default for DvParams {
    fn default() -> Self {
        Self {
            nu: 1e9,
            alpha_att: 0.18,
            p_det: 0.95,
            nu_src: 0.1,
            r_dark: 100.0,
            delta_d: 100e-12,
            q0: 0.01,
        }
    }
}

impl DvParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(invalid("nu", "must be positive"));
        }
        if !(self.alpha_att >= 0.0) {
            return Err(invalid("alpha_att", "must be non-negative"));
        }
        for (name, v) in [("p_det", self.p_det), ("nu_src", self.nu_src), ("q0", self.q0)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(self.r_dark >= 0.0) || !(self.delta_d >= 0.0) {
            return Err(invalid("r_dark", "dark-count rate and window must be non-negative"));
        }
        let pd = self.dark_click_probability();
        if pd > 1.0 {
            return Err(invalid("r_dark", format!("R_d·δ_d = {pd} exceeds 1")));
        }
        Ok(())
    }

    /// P_d = R_d · δ_d
    pub fn dark_click_probability(&self) -> f64 {
        self.r_dark * self.delta_d
    }
}

/// Fiber transmissivity `10^(−α L / 10)`.
pub fn transmissivity(length_km: f64, alpha_att: f64) -> Result<f64> {
    if !(length_km >= 0.0) {
        return Err(invalid("length_km", format!("must be non-negative, got {length_km}")));
    }
    Ok(10f64.powf(-alpha_att * length_km / 10.0))
}

/// Shannon binary entropy in bits, with 0·log 0 = 0.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", format!("must lie in [0, 1], got {q}")));
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(q) + term(1.0 - q))
}

/// Per-link choice of the protocol with the higher rate; ties go to CV.
pub fn hybrid_rate(length_km: f64, cv: &CvParams, dv: &DvParams, mode: CovMode) -> LinkRate {
    let c = cv_rate(length_km, cv, mode);
    let d = dv_rate(length_km, dv);
    if c.rate_bps <= 0.0 && d.rate_bps <= 0.0 {
        return LinkRate {
            valid: c.valid,
            ..LinkRate::zero()
        };
    }
    if c.rate_bps >= d.rate_bps {
        c
    } else {
        d
    }
}

/// Outcome of a critical-distance search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalDistance {
    /// The rate never exceeds the threshold, not even at zero length.
    Empty,
    /// Largest length (within the bisection tolerance) with rate above threshold.
    At(f64),
    /// The rate still exceeds the threshold at the search bound.
    BeyondUpper(f64),
}

impl CriticalDistance {
    /// Distance in km; zero for [`CriticalDistance::Empty`].
    pub fn km(&self) -> f64 {
        match *self {
            CriticalDistance::Empty => 0.0,
            CriticalDistance::At(l) | CriticalDistance::BeyondUpper(l) => l,
        }
    }
}

pub const CRITICAL_DISTANCE_TOL_KM: f64 = 1e-3;

/// Bisection for the largest length at which a non-increasing `rate_fn`
/// stays strictly above `k_min`.
pub fn critical_distance<F>(rate_fn: F, k_min: f64, upper_bound_km: f64) -> CriticalDistance
where
    F: Fn(f64) -> f64,
{
    if !(rate_fn(0.0) > k_min) {
        return CriticalDistance::Empty;
    }
    if rate_fn(upper_bound_km) > k_min {
        return CriticalDistance::BeyondUpper(upper_bound_km);
    }
    let (mut lo, mut hi) = (0.0, upper_bound_km);
    while hi - lo > CRITICAL_DISTANCE_TOL_KM {
        let mid = 0.5 * (lo + hi);
        if rate_fn(mid) > k_min {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    CriticalDistance::At(lo)
}
