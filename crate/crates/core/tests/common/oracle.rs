//! Link-rate formulas evaluated in 320-bit fixed point, written out scalar by
//! scalar from the protocol definitions with no shared code.

use super::fixed::{ln10, Fx};

pub struct CvInputs {
    pub length_km: f64,
    pub nu: f64,
    pub alpha_att: f64,
    pub eps0: f64,
    pub eta: f64,
    pub sigma_a2: f64,
    pub tau: f64,
}

pub struct DvInputs {
    pub length_km: f64,
    pub nu: f64,
    pub alpha: f64,
    pub p_det: f64,
    pub nu_src: f64,
    pub r_dark: f64,
    pub delta_d: f64,
    pub q0: f64,
}

fn f(x: f64) -> Fx {
    Fx::from_f64(x)
}

/// 10^(−αL/10)
fn transmissivity(alpha: f64, length_km: f64) -> Fx {
    let exponent = -(f(alpha) * f(length_km)) / Fx::int(10);
    (exponent * ln10()).exp()
}

/// (x+1) log2(x+1) − x log2 x
fn g(x: Fx) -> Fx {
    if !x.is_positive() {
        return Fx::zero();
    }
    let xp1 = x.clone() + Fx::one();
    xp1.clone() * xp1.log2() - x.clone() * x.log2()
}

fn h2(q: Fx) -> Fx {
    let term = |p: Fx| if p.is_positive() { -(p.clone() * p.log2()) } else { Fx::zero() };
    term(q.clone()) + term(Fx::one() - q)
}

/// ν · max(0, I − χ) for the Gaussian-modulated coherent-state protocol with
/// homodyne detection and reverse reconciliation.
///
/// With V = σ² + 1, W = TV + 1 − T + εT and c² = T(V² − 1):
/// I = ½ log2(V / (V − c²/W)),
/// γ₁,₂² = (Δ ± √(Δ² − 4D)) / 2 with Δ = V² + W² − 2c², D = (VW − c²)²,
/// γ′ = √(V (V − c²/W)).
pub fn cv_rate(p: &CvInputs) -> f64 {
    let t = transmissivity(p.alpha_att, p.length_km);
    let eps = f(p.eps0) * f(p.tau) / (f(p.eta) * t.clone());
    let v = f(p.sigma_a2) + Fx::one();
    let w = t.clone() * v.clone() + Fx::one() - t.clone() + eps * t.clone();
    let c2 = t * (v.clone() * v.clone() - Fx::one());

    let v_cond = v.clone() - c2.clone() / w.clone();
    let mutual = (v.clone() / v_cond.clone()).log2() / Fx::int(2);

    let delta = v.clone() * v.clone() + w.clone() * w.clone() - c2.clone() - c2.clone();
    let det_root = v.clone() * w - c2;
    let disc = (delta.clone() * delta.clone() - Fx::int(4) * det_root.clone() * det_root).sqrt();
    let gamma1 = ((delta.clone() + disc.clone()) / Fx::int(2)).sqrt();
    let gamma2 = ((delta - disc) / Fx::int(2)).sqrt();
    let gamma3 = (v * v_cond).sqrt();

    let half_excess = |gm: Fx| (gm - Fx::one()) / Fx::int(2);
    let holevo = g(half_excess(gamma1)) + g(half_excess(gamma2)) - g(half_excess(gamma3));
    (f(p.nu) * (mutual - holevo).max(Fx::zero())).to_f64()
}

/// ν P_s max(0, 1 − 2h(Q)) for single-photon BB84 with dark counts.
pub fn dv_rate(p: &DvInputs) -> f64 {
    let t = transmissivity(p.alpha, p.length_km);
    let ps = f(p.nu_src) * f(p.p_det) * t;
    let pd = f(p.r_dark) * f(p.delta_d);
    let total = ps.clone() + pd.clone();
    let q = f(p.q0) * ps.clone() / total.clone() + pd / (Fx::int(2) * total);
    let k = (Fx::one() - Fx::int(2) * h2(q)).max(Fx::zero());
    (f(p.nu) * ps * k).to_f64()
}

/// Smallest Q with 1 − 2h(Q) ≤ 0, by bisection to `tol`.
pub fn bb84_zero_rate_qber(tol: f64) -> f64 {
    let (mut lo, mut hi) = (Fx::zero(), Fx::one() / Fx::int(2));
    let tol = f(tol);
    while hi.clone() - lo.clone() > tol {
        let mid = (lo.clone() + hi.clone()) / Fx::int(2);
        if (Fx::one() - Fx::int(2) * h2(mid.clone())).is_positive() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.to_f64()
}
