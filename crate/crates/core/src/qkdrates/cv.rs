//! Gaussian-modulated CV-QKD with homodyne detection and reverse reconciliation.
//!
//! Quadrature ordering is `(q_A, p_A, q_B, p_B)`; variances are in shot-noise units.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use super::{transmissivity, CvParams, LinkRate, Protocol};
use crate::error::{invalid, Error, Result};

/// Slack on the uncertainty relation, γ ≥ 1 − PHYSICAL_TOL.
pub const PHYSICAL_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

/// Pauli-Z, `diag(1, −1)`.
pub fn z_matrix() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

/// Two-mode symplectic form `ω ⊕ ω` with `ω = [[0, 1], [−1, 0]]`.
pub fn two_mode_omega() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

/// Covariance-matrix convention for the prepare-and-measure state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovMode {
    /// Entanglement-based equivalent with `V = σ_A² + 1`:
    /// `V_A = V·I`, `C = sqrt(T(V² − 1))·Z`, `V_B = (TV + 1 − T + εT)·I`.
    #[default]
    Physical,
    /// `V_A = σ_A²·I`, `C = sqrt(T)(1 + σ_A²)·Z`, `V_B = (Tσ_A² + 1 − T + εT)·I`,
    /// taken literally. Violates the uncertainty relation for typical σ_A².
    AsWritten,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Q,
    P,
}

/// 4×4 covariance matrix of Alice's and Bob's modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCov {
    matrix: Matrix4<f64>,
    physical: bool,
}

impl TwoModeCov {
    /// Wraps a raw matrix and records whether it describes a physical state.
    pub fn from_matrix(matrix: Matrix4<f64>) -> Self {
        let physical = is_physical(&matrix);
        Self { matrix, physical }
    }

    /// Assembles `[[V_A, C], [Cᵀ, V_B]]`.
    pub fn from_blocks(va: Matrix2<f64>, c: Matrix2<f64>, vb: Matrix2<f64>) -> Self {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&va);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&c);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&c.transpose());
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&vb);
        Self::from_matrix(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn va(&self) -> Matrix2<f64> {
        self.matrix.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn vb(&self) -> Matrix2<f64> {
        self.matrix.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn c(&self) -> Matrix2<f64> {
        self.matrix.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// Positive definite and satisfies `V + iΩ ≥ 0`.
    pub fn is_physical(&self) -> bool {
        self.physical
    }
}

fn max_asymmetry(m: &Matrix4<f64>) -> f64 {
    (m - m.transpose()).amax()
}

fn is_physical(m: &Matrix4<f64>) -> bool {
    if max_asymmetry(m) > SYMMETRY_TOL * m.amax().max(1.0) {
        return false;
    }
    if m.cholesky().is_none() {
        return false;
    }
    match symplectic_spectrum(m) {
        Some([g1, g2]) => g1 >= 1.0 - PHYSICAL_TOL && g2 >= 1.0 - PHYSICAL_TOL,
        None => false,
    }
}

fn symplectic_spectrum(m: &Matrix4<f64>) -> Option<[f64; 2]> {
    // Eigenvalues of iΩV are ±γ_k, i.e. ΩV has ±iγ_k.
    let eig = (two_mode_omega() * m).complex_eigenvalues();
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    if moduli.iter().any(|x| !x.is_finite()) {
        return None;
    }
    moduli.sort_by(|a, b| b.total_cmp(a));
    Some([0.5 * (moduli[0] + moduli[1]), 0.5 * (moduli[2] + moduli[3])])
}

/// Covariance matrix of the CV link for modulation `sigma_a2`, transmissivity
/// `t` and input-referred excess noise `eps`.
///
/// In [`CovMode::Physical`] an unphysical result is an error; in
/// [`CovMode::AsWritten`] it is reported through [`TwoModeCov::is_physical`].
pub fn cv_covariance(sigma_a2: f64, t: f64, eps: f64, mode: CovMode) -> Result<TwoModeCov> {
    if !(sigma_a2 > 0.0) {
        return Err(invalid("sigma_a2", format!("must be positive, got {sigma_a2}")));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid("t", format!("must lie in (0, 1], got {t}")));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(invalid("eps", format!("must be finite and non-negative, got {eps}")));
    }
    let id = Matrix2::identity();
    let z = z_matrix();
    let cov = match mode {
        CovMode::Physical => {
            let v = sigma_a2 + 1.0;
            let vb = t * v + 1.0 - t + eps * t;
            TwoModeCov::from_blocks(id * v, z * (t * (v * v - 1.0)).sqrt(), id * vb)
        }
        CovMode::AsWritten => {
            let vb = t * sigma_a2 + 1.0 - t + eps * t;
            TwoModeCov::from_blocks(id * sigma_a2, z * (t.sqrt() * (1.0 + sigma_a2)), id * vb)
        }
    };
    if mode == CovMode::Physical && !cov.is_physical() {
        return Err(Error::Unphysical(format!(
            "physical-mode matrix violates the uncertainty relation (σ_A² = {sigma_a2}, T = {t}, ε = {eps})"
        )));
    }
    Ok(cov)
}

/// Symplectic eigenvalues `[γ₁, γ₂]`, descending: moduli of the eigenvalues
/// of `iΩV`, one per mode.
pub fn symplectic_eigenvalues(v: &TwoModeCov) -> Result<[f64; 2]> {
    let asym = max_asymmetry(&v.matrix);
    if asym > SYMMETRY_TOL * v.matrix.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    symplectic_spectrum(&v.matrix)
        .ok_or_else(|| Error::Unphysical("non-finite symplectic spectrum".into()))
}

/// Alice's covariance conditioned on Bob's homodyne outcome on `quad`:
/// `V_A − C (Π V_B Π)⁺ Cᵀ`, where the pseudoinverse inverts the single
/// nonzero diagonal entry of the projected block.
pub fn conditional_cov_homodyne(v: &TwoModeCov, quad: Quadrature) -> Result<Matrix2<f64>> {
    let k = match quad {
        Quadrature::Q => 0,
        Quadrature::P => 1,
    };
    let vb = v.vb();
    let projected = vb[(k, k)];
    if !(projected > 0.0) {
        return Err(Error::Unphysical(format!(
            "projected variance of Bob's measured quadrature is {projected}"
        )));
    }
    let mut pinv = Matrix2::zeros();
    pinv[(k, k)] = 1.0 / projected;
    let c = v.c();
    Ok(v.va() - c * pinv * c.transpose())
}

/// Mutual information between Alice and Bob in bits per channel use,
/// averaged over the two homodyne quadratures.
pub fn cv_mutual_information(v: &TwoModeCov) -> Result<f64> {
    let va = v.va();
    let mut total = 0.0;
    for (quad, k) in [(Quadrature::Q, 0), (Quadrature::P, 1)] {
        let cond = conditional_cov_homodyne(v, quad)?[(k, k)];
        if !(cond > 0.0) || !(va[(k, k)] > 0.0) {
            return Err(Error::Unphysical(format!(
                "non-positive conditional variance {cond} on quadrature {quad:?}"
            )));
        }
        total += 0.25 * (va[(k, k)] / cond).log2();
    }
    Ok(total)
}

/// `g(x) = (x + 1) log₂(x + 1) − x log₂ x`, with `g(0) = 0`.
pub fn g(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (x + 1.0) * (x + 1.0).log2() - x * x.log2()
}

/// Holevo bound χ(B:E) in bits per channel use, reverse reconciliation,
/// conditioning on Bob's homodyne of `quad`.
pub fn holevo_bound(v: &TwoModeCov, quad: Quadrature) -> Result<f64> {
    let [g1, g2] = symplectic_eigenvalues(v)?;
    let cond = conditional_cov_homodyne(v, quad)?;
    let det = cond.determinant();
    if !(det > 0.0) {
        return Err(Error::Unphysical(format!("conditional determinant {det}")));
    }
    let g3 = det.sqrt();
    for (name, gamma) in [("γ1", g1), ("γ2", g2), ("γ'", g3)] {
        if gamma < 1.0 - PHYSICAL_TOL {
            return Err(Error::Unphysical(format!("{name} = {gamma} < 1")));
        }
    }
    Ok(g((g1 - 1.0) / 2.0) + g((g2 - 1.0) / 2.0) - g((g3 - 1.0) / 2.0))
}

/// Input-referred excess noise `ε = ε₀ τ / (η T)`.
pub fn excess_noise(t: f64, p: &CvParams) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid("t", format!("must lie in (0, 1], got {t}")));
    }
    Ok(p.eps0 * p.tau / (p.eta * t))
}

/// Intermediate quantities of a CV rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvBreakdown {
    pub transmissivity: f64,
    pub excess_noise: f64,
    /// bits per channel use
    pub mutual_information: f64,
    /// bits per channel use
    pub holevo: f64,
    pub physical: bool,
}

impl CvBreakdown {
    /// Devetak-Winter bound `I − χ` per channel use, clamped at zero.
    pub fn key_per_use(&self) -> f64 {
        (self.mutual_information - self.holevo).max(0.0)
    }
}

/// Full evaluation of the CV rate stack at one length. Returns `Ok(None)`
/// when the channel is so lossy that `T` underflows.
pub fn cv_key_breakdown(length_km: f64, p: &CvParams, mode: CovMode) -> Result<Option<CvBreakdown>> {
    let t = transmissivity(length_km, p.alpha_att)?;
    if !(t > f64::MIN_POSITIVE) {
        return Ok(None);
    }
    let eps = excess_noise(t, p)?;
    if !eps.is_finite() {
        return Ok(None);
    }
    let cov = cv_covariance(p.sigma_a2, t, eps, mode)?;
    if !cov.is_physical() {
        return Ok(Some(CvBreakdown {
            transmissivity: t,
            excess_noise: eps,
            mutual_information: f64::NAN,
            holevo: f64::NAN,
            physical: false,
        }));
    }
    Ok(Some(CvBreakdown {
        transmissivity: t,
        excess_noise: eps,
        mutual_information: cv_mutual_information(&cov)?,
        holevo: holevo_bound(&cov, Quadrature::Q)?,
        physical: true,
    }))
}

/// CV key rate `ν · max(0, I − χ)` in bits/s.
pub fn cv_rate(length_km: f64, p: &CvParams, mode: CovMode) -> LinkRate {
    match cv_key_breakdown(length_km, p, mode) {
        Ok(Some(b)) if b.physical => LinkRate::tagged(p.nu * b.key_per_use(), Protocol::Cv),
        Ok(None) => LinkRate::zero(),
        Ok(Some(_)) | Err(_) => LinkRate {
            valid: false,
            ..LinkRate::zero()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qkdrates::CRITICAL_DISTANCE_TOL_KM;
    use crate::qkdrates::critical_distance;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    /// Closed-form two-mode symplectic spectrum:
    /// γ² = (Δ ± sqrt(Δ² − 4 det V)) / 2, Δ = det V_A + det V_B + 2 det C.
    fn closed_form_symplectic(v: &TwoModeCov) -> [f64; 2] {
        let delta = v.va().determinant() + v.vb().determinant() + 2.0 * v.c().determinant();
        let det = v.matrix().determinant();
        let root = (delta * delta - 4.0 * det).max(0.0).sqrt();
        [((delta + root) / 2.0).sqrt(), ((delta - root) / 2.0).max(0.0).sqrt()]
    }

    #[test]
    fn vacuum_and_thermal() {
        let v = TwoModeCov::from_matrix(Matrix4::identity());
        let [a, b] = symplectic_eigenvalues(&v).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        let v = TwoModeCov::from_matrix(Matrix4::from_diagonal(&nalgebra::Vector4::new(3.0, 3.0, 2.0, 2.0)));
        let [a, b] = symplectic_eigenvalues(&v).unwrap();
        assert!((a - 3.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = Matrix4::identity();
        m[(0, 2)] = 0.5;
        assert!(matches!(
            symplectic_eigenvalues(&TwoModeCov::from_matrix(m)),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn pure_state_at_unit_transmission() {
        let v = cv_covariance(100.0, 1.0, 0.0, CovMode::Physical).unwrap();
        let [a, b] = symplectic_eigenvalues(&v).unwrap();
        assert!((a - 1.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-9, "{a} {b}");
        assert!(holevo_bound(&v, Quadrature::Q).unwrap().abs() < 1e-7);
    }

    #[test]
    fn physical_determinant_is_one_only_without_loss() {
        // det V_AB = (V V_B − c²)² = (V(1 − T + εT) + T)²; with ε = 0 this is
        // (V(1 − T) + T)², which equals 1 only at T = 1.
        for &t in &[1.0, 0.9, 0.5, 0.1] {
            let v = cv_covariance(100.0, t, 0.0, CovMode::Physical).unwrap();
            let det = v.matrix().determinant();
            let expected = (101.0 * (1.0 - t) + t).powi(2);
            assert!((det - expected).abs() <= 1e-9 * expected, "t={t}");
            assert_eq!((det - 1.0).abs() < 1e-6, t == 1.0);
        }
    }

    #[test]
    fn as_written_matrix_is_flagged() {
        let v = cv_covariance(100.0, 0.5, 0.0125, CovMode::AsWritten).unwrap();
        let c = v.c()[(0, 0)];
        let prod = v.va()[(0, 0)] * v.vb()[(0, 0)];
        assert!((c * c - 5100.5).abs() < 1e-9);
        assert!((prod - 5050.625).abs() < 1e-9);
        assert!(!v.is_physical());
        assert_eq!(cv_rate(10.0, &CvParams::default(), CovMode::AsWritten).valid, false);
    }

    #[test]
    fn conditional_cases() {
        let id = Matrix2::identity();
        let v = TwoModeCov::from_blocks(id * 5.0, Matrix2::zeros(), id * 3.0);
        assert_eq!(conditional_cov_homodyne(&v, Quadrature::Q).unwrap(), id * 5.0);
        assert_eq!(cv_mutual_information(&v).unwrap(), 0.0);

        let (a, b, c) = (7.0, 4.0, 3.0);
        let v = TwoModeCov::from_blocks(id * a, z_matrix() * c, id * b);
        let q = conditional_cov_homodyne(&v, Quadrature::Q).unwrap();
        assert!((q[(0, 0)] - (a - c * c / b)).abs() < 1e-14);
        assert_eq!(q[(1, 1)], a);
        let p = conditional_cov_homodyne(&v, Quadrature::P).unwrap();
        assert_eq!(p[(0, 0)], q[(1, 1)]);
        assert_eq!(p[(1, 1)], q[(0, 0)]);
        // symmetric state: I = (1/2) log2(V_A / V_{A|q})
        let i = cv_mutual_information(&v).unwrap();
        assert!((i - 0.5 * (a / (a - c * c / b)).log2()).abs() < 1e-14);
    }

    #[test]
    fn conditional_requires_positive_projection() {
        let id = Matrix2::identity();
        let v = TwoModeCov::from_blocks(id, Matrix2::zeros(), Matrix2::new(0.0, 0.0, 0.0, 1.0));
        assert!(conditional_cov_homodyne(&v, Quadrature::Q).is_err());
        assert!(conditional_cov_homodyne(&v, Quadrature::P).is_ok());
    }

    #[test]
    fn g_values() {
        assert_eq!(g(0.0), 0.0);
        assert!((g(1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn excess_noise_values() {
        let p = CvParams { eta: 1.0, ..Default::default() };
        assert_eq!(excess_noise(1.0, &p).unwrap(), p.eps0);
        let p = CvParams::default();
        assert!((excess_noise(1.0, &p).unwrap() - 0.00625).abs() < 1e-17);
        assert!((excess_noise(0.1, &p).unwrap() - 0.0625).abs() < 1e-16);
        assert!(excess_noise(0.0, &p).is_err());
    }

    #[test]
    fn noise_times_transmissivity_is_constant() {
        let p = CvParams::default();
        let c = p.eps0 * p.tau / p.eta;
        for i in 0..200 {
            let t = 10f64.powf(-0.018 * i as f64);
            let prod = excess_noise(t, &p).unwrap() * t;
            assert!(((prod - c) / c).abs() < 1e-15, "t={t}");
        }
    }

    #[test]
    fn closed_form_matches_eigendecomposition() {
        let v = cv_covariance(100.0, 0.6607, 0.00946, CovMode::Physical).unwrap();
        let a = symplectic_eigenvalues(&v).unwrap();
        let b = closed_form_symplectic(&v);
        assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9, "{a:?} {b:?}");

        let mut rng = rng_from_seed(11);
        for _ in 0..1000 {
            let s2 = rng.random_range(0.5..500.0);
            let t = rng.random_range(1e-4..1.0);
            let eps = rng.random_range(0.0..0.5);
            let v = cv_covariance(s2, t, eps, CovMode::Physical).unwrap();
            let a = symplectic_eigenvalues(&v).unwrap();
            let b = closed_form_symplectic(&v);
            for k in 0..2 {
                assert!((a[k] - b[k]).abs() < 1e-9, "σ²={s2} t={t} ε={eps}: {a:?} vs {b:?}");
                assert!(a[k] >= 1.0 - PHYSICAL_TOL);
            }
        }
    }

    #[test]
    fn quadrature_choice_is_immaterial() {
        let v = cv_covariance(100.0, 0.3, 0.02, CovMode::Physical).unwrap();
        let hq = holevo_bound(&v, Quadrature::Q).unwrap();
        let hp = holevo_bound(&v, Quadrature::P).unwrap();
        assert!((hq - hp).abs() < 1e-12);
    }

    #[test]
    fn rate_is_decreasing_then_zero() {
        let p = CvParams::default();
        let mut prev = f64::INFINITY;
        let mut hit_zero = false;
        for i in 0..=3000 {
            let r = cv_rate(i as f64 * 0.1, &p, CovMode::Physical).rate_bps;
            if hit_zero {
                assert_eq!(r, 0.0);
            } else if r == 0.0 {
                hit_zero = true;
            } else {
                assert!(r < prev, "not decreasing at {} km", i as f64 * 0.1);
            }
            prev = r;
        }
        assert!(hit_zero);
    }

    #[test]
    fn opaque_channel_gives_zero() {
        let p = CvParams::default();
        assert_eq!(cv_rate(1e6, &p, CovMode::Physical), LinkRate::zero());
        assert_eq!(cv_rate(1e6, &p, CovMode::AsWritten).rate_bps, 0.0);
    }

    #[test]
    fn critical_distance_regression() {
        let p = CvParams::default();
        let l = critical_distance(|l| cv_rate(l, &p, CovMode::Physical).rate_bps, 0.0, 1000.0).km();
        // 0.1 km scan for the first zero, then compare with the bisection.
        let first_zero = (0..10_000)
            .map(|i| i as f64 * 0.1)
            .find(|&l| cv_rate(l, &p, CovMode::Physical).rate_bps == 0.0)
            .unwrap();
        assert!(l < first_zero && first_zero - l <= 0.1 + CRITICAL_DISTANCE_TOL_KM);
        assert!((l - CV_CRITICAL_KM).abs() < 2e-3, "{l}");
    }

    /// Root of I − χ at default parameters, from a 40-digit evaluation.
    const CV_CRITICAL_KM: f64 = 92.570_899;
}
