//! Secure-key capacity: the asymptotic-style rate R_HD and its finite-size
//! counterpart ΔI, both in bits per coincidence (bpc).

use crate::decoy::DecoyBounds;
use crate::error::{domain, Error, Result};
use crate::finite::{EpsilonBudget, PulseCount};

/// What a security model reports at one excess-noise point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityQuantities {
    /// Mutual information I(A;B) between Alice and Bob (bits).
    pub i_ab: f64,
    /// Upper bound on Eve's Holevo information (bits).
    pub phi_ub: f64,
    /// Shared random bits I_R = log₂ d.
    pub i_r: f64,
}

/// The individual contributions to ΔI. The first three are the
/// R_HD pieces as signed magnitudes; the last three are the finite-key
/// penalties.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KeyTerms {
    pub beta_iab: f64,
    pub leak_ir: f64,
    pub holevo: f64,
    pub ec_term: f64,
    pub pa_term: f64,
    pub smooth_term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateResult {
    pub r_hd: f64,
    pub delta_i: f64,
    pub terms: KeyTerms,
    pub positive: bool,
    /// Why no key can be extracted, if the decoy analysis said so.
    pub no_key: Option<String>,
}

/// Protocol-level inputs to ΔI that are not decoy bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateInputs {
    /// Reconciliation efficiency β.
    pub beta: f64,
    pub p_mu: f64,
    pub p_t: f64,
    pub n_pulses: PulseCount,
    pub schmidt_d: u32,
    pub budget: EpsilonBudget,
}

/// R_HD = β·I(A;B) − (1 − K_μ)·I_R − K_μ·φ.
pub fn r_hd(beta: f64, sq: &SecurityQuantities, kmu: f64) -> f64 {
    beta * sq.i_ab - (1.0 - kmu) * sq.i_r - kmu * sq.phi_ub
}

/// Finite-key penalties (ec, pa, smooth), all zero when N = ∞.
pub fn finite_key_terms(
    p_mu: f64,
    p_t: f64,
    n_pulses: PulseCount,
    schmidt_d: u32,
    budget: &EpsilonBudget,
) -> Result<(f64, f64, f64)> {
    let n = match n_pulses {
        PulseCount::Infinite => return Ok((0.0, 0.0, 0.0)),
        PulseCount::Finite(n) => n,
    };
    let m = p_mu * p_t * p_t * n;
    if !(m > 0.0) {
        return Err(Error::EstimationImpossible(format!(
            "no key frames (p_mu·p_T²·N = {m})"
        )));
    }
    let ec = (2.0 / budget.eps_ec).log2() / m;
    let pa = 2.0 * (1.0 / budget.eps_pa).log2() / m;
    let smooth = (2.0 * f64::from(schmidt_d) + 3.0) * ((2.0 / budget.eps_bar).log2() / m).sqrt();
    Ok((ec, pa, smooth))
}

/// Assembles ΔI = R_HD − ec − pa − smooth, with R_HD evaluated at the
/// certified K_μ lower bound and the security quantities at ζ^UB.
///
/// A "no key" condition from the decoy analysis yields ΔI = R_HD = −∞.
pub fn delta_i(inputs: &KeyRateInputs, bounds: &DecoyBounds, sq: &SecurityQuantities) -> Result<KeyRateResult> {
    if !(inputs.beta > 0.0 && inputs.beta <= 1.0) {
        return domain(format!("beta must lie in (0, 1], got {}", inputs.beta));
    }
    let (ec, pa, smooth) =
        finite_key_terms(inputs.p_mu, inputs.p_t, inputs.n_pulses, inputs.schmidt_d, &inputs.budget)?;
    let k = bounds.kmu_lb;
    let mut terms = KeyTerms {
        beta_iab: inputs.beta * sq.i_ab,
        leak_ir: (1.0 - k) * sq.i_r,
        holevo: k * sq.phi_ub,
        ec_term: ec,
        pa_term: pa,
        smooth_term: smooth,
    };
    if let Some(reason) = &bounds.no_key {
        terms.beta_iab = 0.0;
        terms.leak_ir = 0.0;
        terms.holevo = 0.0;
        return Ok(no_key_result(terms, reason.clone()));
    }
    let rate = r_hd(inputs.beta, sq, k);
    let delta = rate - ec - pa - smooth;
    Ok(KeyRateResult { r_hd: rate, delta_i: delta, terms, positive: delta > 0.0, no_key: None })
}

/// A result carrying the −∞ "no key" sentinel.
pub fn no_key_result(terms: KeyTerms, reason: String) -> KeyRateResult {
    KeyRateResult {
        r_hd: f64::NEG_INFINITY,
        delta_i: f64::NEG_INFINITY,
        terms,
        positive: false,
        no_key: Some(reason),
    }
}
