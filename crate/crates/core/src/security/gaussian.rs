//! Gaussian covariance-matrix model of the time-frequency entangled state.
//!
//! The biphoton is treated as a two-mode Gaussian state whose quadratures
//! are arrival time and frequency, in units where the coherence time is 1
//! and r = δ_cor/δ_coh. Alice's and Bob's time variances are r² + ¼ with
//! covariance r² − ¼; the frequency block is ¼ + 1/(16r²) with covariance
//! 1/(16r²) − ¼, so the noiseless state is pure. Eve's intervention appears
//! as added classical noise on Bob's mode: ζ_t in time and ζ_ω/(4r²) in
//! frequency, which reproduces the broadened correlation widths
//! (1 + ζ)·(noiseless width²). Her information is the Holevo quantity
//! S(AB) − S(B | Alice's time outcome), and I(A;B) is the Gaussian mutual
//! information of the time quadratures, capped at log₂ d.

use crate::error::{domain, Result};
use crate::keyrate::SecurityQuantities;

use super::{SecurityModel, SecurityPoint};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GaussianModel;

/// Covariance blocks for a given r and noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceBlocks {
    pub v_t: f64,
    pub c_t: f64,
    pub v_w: f64,
    pub c_w: f64,
    /// Added noise on Bob's time quadrature.
    pub n_t: f64,
    /// Added noise on Bob's frequency quadrature.
    pub n_w: f64,
}

impl CovarianceBlocks {
    pub fn new(r: f64, zeta_t: f64, zeta_w: f64) -> Self {
        let r2 = r * r;
        let inv = 1.0 / (16.0 * r2);
        CovarianceBlocks {
            v_t: r2 + 0.25,
            c_t: r2 - 0.25,
            v_w: 0.25 + inv,
            c_w: inv - 0.25,
            n_t: zeta_t,
            n_w: zeta_w / (4.0 * r2),
        }
    }
}

/// Excesses ν² − ¼ of the two symplectic eigenvalues of the joint state and
/// of Bob's state conditioned on Alice's time outcome.
///
/// Everything is written in terms of the noise so that the pure-state limit
/// is exact: with the blocks above, the joint symplectic spectrum is the
/// spectrum of [[¼, C_t·n_ω], [n_t·C_ω, ¼ + s]].
pub fn symplectic_excess(b: &CovarianceBlocks, r: f64) -> (f64, f64, f64) {
    let (n_t, n_w) = (b.n_t, b.n_w);
    let s = b.v_t * n_w + n_t * b.v_w + n_t * n_w;
    let cross = b.c_t * b.c_w * n_t * n_w;
    let root = (s * s + 4.0 * cross).max(0.0).sqrt();
    let plus = 0.5 * (s + root);
    let minus = if s + root > 0.0 { 2.0 * cross.abs() / (s + root) } else { 0.0 };
    let cond = n_t * b.v_w + (r * r / b.v_t) * n_w + n_t * n_w;
    (plus, minus, cond)
}

/// Von Neumann entropy (bits) of a single-mode thermal state whose symplectic
/// eigenvalue satisfies ν² = ¼ + excess.
pub fn entropy_from_excess(excess: f64) -> f64 {
    if !(excess > 0.0) {
        return 0.0;
    }
    let nu = (0.25 + excess).sqrt();
    let hi = nu + 0.5;
    let lo = excess / hi;
    hi * hi.log2() - lo * lo.log2()
}

impl GaussianModel {
    pub fn quantities(&self, p: &SecurityPoint) -> Result<SecurityQuantities> {
        if p.schmidt_d < 2 {
            return domain(format!("Schmidt number must be >= 2, got {}", p.schmidt_d));
        }
        if !(p.delta_coh > 0.0 && p.delta_cor > 0.0) || !p.delta_coh.is_finite() || !p.delta_cor.is_finite() {
            return domain("coherence and correlation times must be positive and finite");
        }
        if !(p.zeta_t >= 0.0 && p.zeta_w >= 0.0) || !p.zeta_t.is_finite() || !p.zeta_w.is_finite() {
            return domain(format!(
                "excess-noise factors must be finite and >= 0 (zeta_t = {}, zeta_w = {})",
                p.zeta_t, p.zeta_w
            ));
        }
        let r = p.delta_cor / p.delta_coh;
        let b = CovarianceBlocks::new(r, p.zeta_t, p.zeta_w);
        let (plus, minus, cond) = symplectic_excess(&b, r);
        let phi = entropy_from_excess(plus) + entropy_from_excess(minus) - entropy_from_excess(cond);
        let i_r = f64::from(p.schmidt_d).log2();
        let i_ab = 0.5 * ((b.v_t + b.n_t) / (r * r / b.v_t + b.n_t)).log2();
        Ok(SecurityQuantities { i_ab: i_ab.clamp(0.0, i_r), phi_ub: phi.max(0.0), i_r })
    }
}

impl SecurityModel for GaussianModel {
    fn evaluate(&self, point: &SecurityPoint) -> Result<SecurityQuantities> {
        self.quantities(point)
    }
}
