//! Source, detector and channel model: transmittance, Poisson pair
//! statistics, the n-pair coincidence probability γ_n and the
//! postselection probability P_λ of a measurement frame.

use crate::error::{domain, Error, Result};

/// Fiber loss used by every preset (dB/km).
pub const DEFAULT_ALPHA_DB_PER_KM: f64 = 0.2;
/// Detector efficiency shared by Alice and Bob.
pub const DEFAULT_DETECTOR_EFFICIENCY: f64 = 0.93;
/// Dark-count rate (counts/s).
pub const DEFAULT_DARK_COUNT_RATE: f64 = 1000.0;
/// Detector timing jitter (s).
pub const DEFAULT_TIMING_JITTER: f64 = 20e-12;
/// Coherence time (s).
pub const DEFAULT_COHERENCE_TIME: f64 = 30e-12;
/// Eve-induced change of the correlation time (s).
pub const DEFAULT_CORRELATION_SHIFT: f64 = 10e-12;

/// Truncation bound on the remaining Poisson tail mass of the series form.
pub const SERIES_TOLERANCE: f64 = 1e-15;
/// Hard cap on the number of series terms before giving up.
pub const MAX_SERIES_TERMS: u32 = 100_000;

/// Source, detector and channel constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Fiber loss in dB/km.
    pub alpha: f64,
    pub eta_alice: f64,
    pub eta_bob: f64,
    /// Dark-count rate in counts per second.
    pub r_dc: f64,
    /// Timing jitter in seconds. Carried for completeness; no formula uses it.
    pub delta_j: f64,
    /// Coherence time in seconds.
    pub delta_coh: f64,
    /// Schmidt number, i.e. the dimensionality of the encoding.
    pub schmidt_d: u32,
    /// Change in correlation time caused by Eve, in seconds.
    pub delta_delta: f64,
}

impl PhysicalParams {
    /// The fiber-based system used throughout the evaluation, for a given
    /// Schmidt number.
    pub fn standard(schmidt_d: u32) -> Self {
        PhysicalParams {
            alpha: DEFAULT_ALPHA_DB_PER_KM,
            eta_alice: DEFAULT_DETECTOR_EFFICIENCY,
            eta_bob: DEFAULT_DETECTOR_EFFICIENCY,
            r_dc: DEFAULT_DARK_COUNT_RATE,
            delta_j: DEFAULT_TIMING_JITTER,
            delta_coh: DEFAULT_COHERENCE_TIME,
            schmidt_d,
            delta_delta: DEFAULT_CORRELATION_SHIFT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Invalid { key: key.into(), msg: msg.into() })
            }
        };
        check(self.alpha.is_finite() && self.alpha >= 0.0, "alpha", "must be >= 0")?;
        check(in_unit(self.eta_alice), "eta_alice", "must lie in [0, 1]")?;
        check(in_unit(self.eta_bob), "eta_bob", "must lie in [0, 1]")?;
        check(self.r_dc.is_finite() && self.r_dc >= 0.0, "r_dc", "must be >= 0")?;
        check(self.delta_j.is_finite() && self.delta_j >= 0.0, "delta_j", "must be >= 0")?;
        check(self.delta_coh.is_finite() && self.delta_coh > 0.0, "delta_coh", "must be > 0")?;
        check(self.schmidt_d >= 2, "d", "Schmidt number must be >= 2")?;
        check(
            self.delta_delta.is_finite() && self.delta_delta >= 0.0,
            "delta_delta",
            "must be >= 0",
        )
    }

    pub fn frame(&self) -> FrameParams {
        FrameParams::derive(self)
    }
}

/// Quantities derived from [`PhysicalParams`] that describe one measurement
/// frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameParams {
    /// Frame duration T_f = 2·√(2 ln 2)·δ_coh (s).
    pub t_f: f64,
    /// Correlation time δ_cor = d·δ_coh (s).
    pub delta_cor: f64,
    /// Dark-count probability per frame, min(1, R_dc·T_f).
    pub p_d: f64,
    /// True excess-noise factor implied by δ_Δ.
    pub zeta: f64,
}

impl FrameParams {
    pub fn derive(phys: &PhysicalParams) -> Self {
        let t_f = 2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * phys.delta_coh;
        let delta_cor = f64::from(phys.schmidt_d) * phys.delta_coh;
        let p_d = (phys.r_dc * t_f).min(1.0);
        let ratio = phys.delta_delta / delta_cor;
        // (1 + r)² − 1 written without cancellation
        let zeta = ratio * (2.0 + ratio);
        FrameParams { t_f, delta_cor, p_d, zeta }
    }
}

/// A point on the fiber link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    pub length_km: f64,
    pub eta_t: f64,
}

impl ChannelPoint {
    pub fn new(alpha: f64, length_km: f64) -> Result<Self> {
        Ok(ChannelPoint { length_km, eta_t: transmittance(alpha, length_km)? })
    }
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Channel transmittance 10^(−α·L/10).
pub fn transmittance(alpha: f64, length_km: f64) -> Result<f64> {
    if !(alpha >= 0.0 && length_km >= 0.0) || !alpha.is_finite() || !length_km.is_finite() {
        return domain(format!("transmittance needs alpha >= 0 and L >= 0 (got {alpha}, {length_km})"));
    }
    Ok(10f64.powf(-alpha * length_km / 10.0))
}

/// Probability of emitting `n` photon pairs from a source of mean pair
/// number `lambda`.
pub fn poisson_pmf(n: u32, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("poisson mean must be finite and >= 0 (got {lambda})"));
    }
    if lambda == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let ln_fact: f64 = (2..=n).map(|k| f64::from(k).ln()).sum();
    Ok((f64::from(n) * lambda.ln() - lambda - ln_fact).exp())
}

/// Probability that one party registers at least one click given `n`
/// pairs: p_d + (1 − p_d)·(1 − (1 − eff)ⁿ).
fn arm_click(n: u32, eff: f64, p_d: f64) -> f64 {
    let photon = if n == 0 {
        0.0
    } else if eff >= 1.0 {
        1.0
    } else {
        -(f64::from(n) * (-eff).ln_1p()).exp_m1()
    };
    p_d + (1.0 - p_d) * photon
}

fn check_detection_inputs(eta_alice: f64, eta_bob: f64, eta_t: f64, p_d: f64) -> Result<()> {
    for (name, v) in [("eta_alice", eta_alice), ("eta_bob", eta_bob), ("eta_t", eta_t), ("p_d", p_d)] {
        if !in_unit(v) {
            return domain(format!("{name} must lie in [0, 1] (got {v})"));
        }
    }
    Ok(())
}

/// Conditional coincidence probability γ_n given `n` emitted pairs.
pub fn gamma_n(n: u32, eta_alice: f64, eta_bob: f64, eta_t: f64, p_d: f64) -> Result<f64> {
    check_detection_inputs(eta_alice, eta_bob, eta_t, p_d)?;
    Ok(arm_click(n, eta_alice, p_d) * arm_click(n, eta_bob * eta_t, p_d))
}

/// Postselection probability as the truncated series Σ Pr_n·γ_n.
///
/// Summation stops once the remaining Poisson tail mass is provably below
/// `tolerance`. Used as a cross-check of [`postselect_prob_closed`].
pub fn postselect_prob_series(
    lambda: f64,
    eta_alice: f64,
    eta_bob: f64,
    eta_t: f64,
    p_d: f64,
    tolerance: f64,
) -> Result<f64> {
    check_detection_inputs(eta_alice, eta_bob, eta_t, p_d)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("intensity must be finite and >= 0 (got {lambda})"));
    }
    if !(tolerance > 0.0) {
        return domain("series tolerance must be > 0");
    }
    let eta_b = eta_bob * eta_t;
    let mut pmf = (-lambda).exp();
    let mut sum = 0.0;
    for n in 0..MAX_SERIES_TERMS {
        sum += pmf * arm_click(n, eta_alice, p_d) * arm_click(n, eta_b, p_d);
        let next = pmf * lambda / f64::from(n + 1);
        // tail after n is at most next / (1 − λ/(n+2)) once n + 2 > λ
        let ratio = lambda / f64::from(n + 2);
        if ratio < 1.0 && next / (1.0 - ratio) < tolerance {
            return Ok(sum);
        }
        pmf = next;
    }
    Err(Error::NonConvergence(format!(
        "postselection series for lambda = {lambda} exceeded {MAX_SERIES_TERMS} terms"
    )))
}

/// Postselection probability P_λ in closed form.
///
/// Resums the series with Σ Pr_n·xⁿ = e^(−λ(1−x)), arranged as a sum of
/// non-negative terms so it keeps full relative precision when P_λ ≪ 1.
pub fn postselect_prob_closed(lambda: f64, eta_alice: f64, eta_bob: f64, eta_t: f64, p_d: f64) -> Result<f64> {
    check_detection_inputs(eta_alice, eta_bob, eta_t, p_d)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("intensity must be finite and >= 0 (got {lambda})"));
    }
    let q = 1.0 - p_d;
    let a = lambda * eta_alice;
    let b = lambda * eta_bob * eta_t;
    let c = a * eta_bob * eta_t;
    let alice = p_d - q * (-a).exp_m1();
    let bob = p_d - q * (-b).exp_m1();
    Ok(alice * bob + q * q * (-a - b).exp() * c.exp_m1())
}

/// Excess-noise factor ζ implied by a broadening δ_Δ of the correlation
/// time: (1 + δ_Δ/δ_cor)² − 1.
pub fn excess_noise_from_delta(delta_delta: f64, delta_cor: f64) -> Result<f64> {
    if !(delta_cor > 0.0) {
        return domain(format!("correlation time must be > 0 (got {delta_cor})"));
    }
    if !(delta_delta >= 0.0) {
        return domain(format!("correlation-time shift must be >= 0 (got {delta_delta})"));
    }
    let r = delta_delta / delta_cor;
    Ok(r * (2.0 + r))
}

/// Fraction of postselected events at intensity λ that come from a single
/// pair: K_λ = λ·e^(−λ)·γ₁ / P_λ.
pub fn single_pair_fraction(lambda: f64, gamma1: f64, p_lambda: f64) -> f64 {
    if p_lambda <= 0.0 {
        return 0.0;
    }
    (lambda * (-lambda).exp() * gamma1 / p_lambda).clamp(0.0, 1.0)
}
