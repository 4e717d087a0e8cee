//! Single-photon BB84 with dark counts.

use super::{binary_entropy, transmissivity, DvParams, LinkRate, Protocol};
use crate::error::{invalid, Result};

/// QBER including dark counts: `Q = Q₀ P_s/P + P_d/(2P)` with
/// `P_s = ν̃ p_det T`, `P_d = R_d δ_d` and `P = P_s + P_d`.
pub fn dv_qber(t: f64, p: &DvParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid("t", format!("must lie in [0, 1], got {t}")));
    }
    let ps = p.nu_src * p.p_det * t;
    let pd = p.dark_click_probability();
    let total = ps + pd;
    if !(total > 0.0) {
        return Err(invalid("t", "no signal and no dark counts: QBER undefined"));
    }
    Ok(p.q0 * ps / total + pd / (2.0 * total))
}

/// BB84 key rate `ν P_s max(0, 1 − 2h(Q))` in bits/s.
pub fn dv_rate(length_km: f64, p: &DvParams) -> LinkRate {
    let Ok(t) = transmissivity(length_km, p.alpha_att) else {
        return LinkRate::zero();
    };
    let ps = p.nu_src * p.p_det * t;
    let Ok(q) = dv_qber(t, p) else {
        return LinkRate::zero();
    };
    let h = binary_entropy(q).unwrap_or(1.0);
    let k_dw = (1.0 - 2.0 * h).max(0.0);
    LinkRate::tagged(p.nu * ps * k_dw, Protocol::Dv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qber_limits() {
        let p = DvParams::default();
        assert_eq!(dv_qber(0.0, &p).unwrap(), 0.5);
        // P_s = 0.095, P_d = 1e-8:
        // Q = 0.01·0.095/(0.095 + 1e-8) + 1e-8/(2(0.095 + 1e-8)) = 0.0100000042105...
        let q = dv_qber(1.0, &p).unwrap();
        let expected = (0.01 * 0.095 + 0.5e-8) / (0.095 + 1e-8);
        assert!((q - expected).abs() < 1e-17);
        assert!((q - 0.010_000_05).abs() < 1e-8);
        let clean = DvParams { q0: 0.0, r_dark: 0.0, ..p };
        assert_eq!(dv_qber(0.5, &clean).unwrap(), 0.0);
        assert!(dv_qber(0.0, &clean).is_err());
        assert!(dv_qber(1.5, &p).is_err());
    }

    #[test]
    fn noiseless_rate() {
        let p = DvParams { q0: 0.0, r_dark: 0.0, ..Default::default() };
        let r = dv_rate(0.0, &p);
        assert!((r.rate_bps - 9.5e7).abs() < 1e-6);
        assert_eq!(r.protocol, Protocol::Dv);
    }

    #[test]
    fn clamps_past_threshold_qber() {
        let p = DvParams::default();
        assert_eq!(dv_rate(400.0, &p), LinkRate::zero());
        assert!(dv_qber(transmissivity(400.0, p.alpha_att).unwrap(), &p).unwrap() > 0.11);
    }

    #[test]
    fn strictly_decreasing_near_origin() {
        let p = DvParams::default();
        let a = dv_rate(0.0, &p).rate_bps;
        let b = dv_rate(0.001, &p).rate_bps;
        assert!(a > b && b > 0.0);
    }

    #[test]
    fn qber_grows_as_transmissivity_falls() {
        let p = DvParams::default();
        let pd = p.dark_click_probability();
        let mut prev = 0.0;
        for i in (0..=1000).rev() {
            let t = i as f64 / 1000.0;
            let q = dv_qber(t, &p).unwrap();
            assert!(q >= prev);
            let w = pd / (p.nu_src * p.p_det * t + pd);
            let bound = p.q0 * (1.0 - w) + w / 2.0;
            assert!((q - bound).abs() < 1e-15);
            prev = q;
        }
    }
}
