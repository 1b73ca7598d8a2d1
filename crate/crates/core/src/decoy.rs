//! Decoy-state parameter estimation.
//!
//! From fluctuation-adjusted postselection probabilities P_λ± and measured
//! correlation multipliers Φ_{x,λ}, bound the vacuum and single-pair yields
//! γ₀ and γ₁, the single-pair fraction K_μ of postselected signal events
//! and the timing/frequency excess-noise factors ζ_t and ζ_ω. Both the
//! two-decoy ({v₁, v₂}) and single-decoy ({v}) variants are provided.

use std::fmt;

use crate::error::{domain, Error, Result};

/// Excess-noise upper bounds beyond this value are reported as "no key".
pub const ZETA_CAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoyMode {
    TwoDecoy,
    SingleDecoy,
}

impl fmt::Display for DecoyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoyMode::TwoDecoy => "two-decoy",
            DecoyMode::SingleDecoy => "single-decoy",
        })
    }
}

/// The three intensity slots of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Signal,
    Decoy1,
    Decoy2,
}

impl Level {
    pub fn label(&self) -> &'static str {
        match self {
            Level::Signal => "mu",
            Level::Decoy1 => "v1",
            Level::Decoy2 => "v2",
        }
    }
}

/// Source intensities and how often each one is selected.
///
/// In single-decoy mode the decoy lives in `v1` and `v2` is unused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityConfig {
    pub mode: DecoyMode,
    pub mu: f64,
    pub v1: f64,
    pub v2: f64,
    pub p_mu: f64,
    pub p_v1: f64,
}

impl IntensityConfig {
    pub fn two_decoy(mu: f64, v1: f64, v2: f64, p_mu: f64, p_v1: f64) -> Result<Self> {
        let cfg = IntensityConfig { mode: DecoyMode::TwoDecoy, mu, v1, v2, p_mu, p_v1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn single_decoy(mu: f64, v: f64, p_mu: f64) -> Result<Self> {
        let cfg = IntensityConfig { mode: DecoyMode::SingleDecoy, mu, v1: v, v2: 0.0, p_mu, p_v1: 1.0 - p_mu };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Invalid { key: key.into(), msg });
        let (mu, v1, v2) = (self.mu, self.v1, self.v2);
        if ![mu, v1, v2, self.p_mu, self.p_v1].iter().all(|x| x.is_finite()) {
            return bad("mu", "intensities and probabilities must be finite".into());
        }
        match self.mode {
            DecoyMode::TwoDecoy => {
                if !(v2 >= 0.0) {
                    return bad("v2", format!("must be >= 0, got {v2}"));
                }
                if !(v1 > v2) {
                    return bad("v1", format!("need v1 > v2 (got v1 = {v1}, v2 = {v2})"));
                }
                if !(mu > v1 + v2) {
                    return bad("mu", format!("need mu > v1 + v2 (got mu = {mu}, v1 + v2 = {})", v1 + v2));
                }
            }
            DecoyMode::SingleDecoy => {
                if !(v1 > 0.0) {
                    return bad("v", format!("must be > 0, got {v1}"));
                }
                if !(mu > v1) {
                    return bad("mu", format!("need mu > v (got mu = {mu}, v = {v1})"));
                }
            }
        }
        if !(self.p_mu > 0.0) {
            return bad("p_mu", format!("must be > 0, got {}", self.p_mu));
        }
        if !(self.p_v1 > 0.0) {
            return bad("p_v1", format!("must be > 0, got {}", self.p_v1));
        }
        let rest = 1.0 - self.p_mu - self.p_v1;
        match self.mode {
            DecoyMode::TwoDecoy if !(rest > 1e-12) => {
                bad("p_v1", format!("p_mu + p_v1 must be < 1 so that v2 is selected (got {})", self.p_mu + self.p_v1))
            }
            DecoyMode::SingleDecoy if rest.abs() > 1e-12 => bad("p_mu", "p_mu + p_v must equal 1".into()),
            _ => Ok(()),
        }
    }

    pub fn p_v2(&self) -> f64 {
        match self.mode {
            DecoyMode::TwoDecoy => 1.0 - self.p_mu - self.p_v1,
            DecoyMode::SingleDecoy => 0.0,
        }
    }

    /// The intensities in use, as (slot, λ, selection probability).
    pub fn levels(&self) -> Vec<(Level, f64, f64)> {
        let mut out = vec![(Level::Signal, self.mu, self.p_mu), (Level::Decoy1, self.v1, self.p_v1)];
        if self.mode == DecoyMode::TwoDecoy {
            out.push((Level::Decoy2, self.v2, self.p_v2()));
        }
        out
    }
}

/// Statistics measured at one intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityStats {
    pub p_post: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    /// Average timing-correlation multiplier Φ_{t,λ}.
    pub phi_t: f64,
    /// Average frequency-correlation multiplier Φ_{ω,λ}.
    pub phi_w: f64,
}

impl IntensityStats {
    /// Stats without any fluctuation allowance.
    pub fn exact(p: f64, phi_t: f64, phi_w: f64) -> Self {
        IntensityStats { p_post: p, p_minus: p, p_plus: p, phi_t, phi_w }
    }

    fn phi(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Time => self.phi_t,
            Basis::Frequency => self.phi_w,
        }
    }
}

/// Measured statistics of a session. `decoy2` is `None` in single-decoy mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredStats {
    pub signal: IntensityStats,
    pub decoy1: IntensityStats,
    pub decoy2: Option<IntensityStats>,
}

impl MeasuredStats {
    pub fn get(&self, level: Level) -> Option<&IntensityStats> {
        match level {
            Level::Signal => Some(&self.signal),
            Level::Decoy1 => Some(&self.decoy1),
            Level::Decoy2 => self.decoy2.as_ref(),
        }
    }

    fn decoy2(&self) -> Result<&IntensityStats> {
        self.decoy2.as_ref().ok_or_else(|| Error::Domain("two-decoy bound needs v2 statistics".into()))
    }
}

/// Interval on the vacuum yield γ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma0Interval {
    pub lower: f64,
    pub upper: f64,
    /// The estimated lower bound exceeded the upper one and was collapsed.
    pub degenerate: bool,
}

/// Everything the decoy analysis certifies about a session.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoyBounds {
    pub gamma0_lb: f64,
    pub gamma0_ub: f64,
    pub gamma0_degenerate: bool,
    pub gamma1_lb: f64,
    pub kmu_lb: f64,
    pub zeta_t_ub: f64,
    pub zeta_w_ub: f64,
    /// Set when no key can be extracted (K_μ bound of zero, or excess noise
    /// beyond [`ZETA_CAP`]).
    pub no_key: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Basis {
    Time,
    Frequency,
}

/// Measured multiplier from the single-pair fraction K_λ, the true excess
/// noise ζ_x and the multiplier ΔΦ_x of frames without a usable pair:
/// K_λ(1 + ζ_x) + (1 − K_λ)ΔΦ_x.
pub fn phi_multiplier_forward(k_lambda: f64, zeta_x: f64, delta_phi_x: f64) -> f64 {
    k_lambda * (1.0 + zeta_x) + (1.0 - k_lambda) * delta_phi_x
}

/// Bounds on γ₀ from the two decoy intensities. The upper bound is p_d.
pub fn gamma0_bounds(stats: &MeasuredStats, v1: f64, v2: f64, p_d: f64) -> Result<Gamma0Interval> {
    if v1 == v2 {
        return domain("gamma0 bound needs two distinct decoy intensities");
    }
    let d2 = stats.decoy2()?;
    let linear = (v1 * d2.p_minus * v2.exp() - v2 * stats.decoy1.p_plus * v1.exp()) / (v1 - v2);
    let upper = p_d.clamp(0.0, 1.0);
    let lower = linear.max(p_d * p_d).clamp(0.0, 1.0);
    if lower > upper {
        return Ok(Gamma0Interval { lower: upper, upper, degenerate: true });
    }
    Ok(Gamma0Interval { lower, upper, degenerate: false })
}

/// Lower bound on the single-pair yield γ₁ from two decoys.
pub fn gamma1_lower(stats: &MeasuredStats, mu: f64, v1: f64, v2: f64, gamma0_lb: f64) -> Result<f64> {
    let den = mu * v1 - mu * v2 - v1 * v1 + v2 * v2;
    if !(den > 0.0) {
        return domain(format!("intensities violate mu > v1 + v2, v1 > v2 (denominator {den})"));
    }
    let d2 = stats.decoy2()?;
    let bracket = stats.decoy1.p_minus * v1.exp()
        - d2.p_plus * v2.exp()
        - (v1 * v1 - v2 * v2) / (mu * mu) * (stats.signal.p_plus * mu.exp() - gamma0_lb);
    Ok((mu / den * bracket).clamp(0.0, 1.0))
}

/// Lower bound on γ₁ from a single decoy `v`, using the vacuum upper bound.
pub fn gamma1_lower_single(stats: &MeasuredStats, mu: f64, v: f64, gamma0_ub: f64) -> Result<f64> {
    if !(v > 0.0 && v < mu) {
        return domain(format!("single-decoy bound needs 0 < v < mu (got v = {v}, mu = {mu})"));
    }
    let num = mu * mu * stats.decoy1.p_minus * v.exp()
        - v * v * stats.signal.p_plus * mu.exp()
        - (mu * mu - v * v) * gamma0_ub;
    Ok((num / (mu * v * (mu - v))).clamp(0.0, 1.0))
}

/// K_μ bound using one decoy λ and the vacuum upper bound (unclamped).
fn kmu_one_decoy(signal: &IntensityStats, decoy: &IntensityStats, mu: f64, lambda: f64, gamma0_ub: f64) -> Option<f64> {
    let den = mu * lambda - lambda * lambda;
    if !(den > 0.0) || !(signal.p_plus > 0.0) {
        return None;
    }
    let ratio = lambda * lambda / (mu * mu);
    let bracket = decoy.p_minus / signal.p_plus * (lambda - mu).exp()
        - ratio
        - (1.0 - ratio) * gamma0_ub * (-mu).exp() / signal.p_plus;
    Some(mu * mu / den * bracket)
}

/// K_μ bound from both decoys and the vacuum lower bound (unclamped).
fn kmu_two_decoy_branch(stats: &MeasuredStats, d2: &IntensityStats, mu: f64, v1: f64, v2: f64, gamma0_lb: f64) -> Option<f64> {
    let den = mu * v1 - mu * v2 - v1 * v1 + v2 * v2;
    let pmu = stats.signal.p_plus;
    if !(den > 0.0) || !(pmu > 0.0) {
        return None;
    }
    let bracket = stats.decoy1.p_minus / pmu * (v1 - mu).exp()
        - d2.p_plus / pmu * (v2 - mu).exp()
        - (v1 * v1 - v2 * v2) / (mu * mu) * (1.0 - gamma0_lb * (-mu).exp() / pmu);
    Some(mu * mu / den * bracket)
}

/// Two-decoy lower bound on K_μ: the larger of the joint {v₁, v₂} bound and
/// the best single-intensity bound (λ ∈ {v₁, v₂}, or only v₁ when v₂ = 0).
pub fn kmu_lower_two(stats: &MeasuredStats, mu: f64, v1: f64, v2: f64, gamma0_lb: f64, gamma0_ub: f64) -> Result<f64> {
    let d2 = stats.decoy2()?;
    let mut candidates = vec![kmu_two_decoy_branch(stats, d2, mu, v1, v2, gamma0_lb)];
    candidates.push(kmu_one_decoy(&stats.signal, &stats.decoy1, mu, v1, gamma0_ub));
    if v2 != 0.0 {
        candidates.push(kmu_one_decoy(&stats.signal, d2, mu, v2, gamma0_ub));
    }
    candidates
        .into_iter()
        .flatten()
        .filter(|k| !k.is_nan())
        .reduce(f64::max)
        .map(|k| k.clamp(0.0, 1.0))
        .ok_or_else(|| Error::Computation("every K_mu branch is undefined (P_mu+ = 0?)".into()))
}

/// Single-decoy lower bound on K_μ.
pub fn kmu_lower_single(stats: &MeasuredStats, mu: f64, v: f64, gamma0_ub: f64) -> Result<f64> {
    if !(v > 0.0 && v < mu) {
        return domain(format!("single-decoy bound needs 0 < v < mu (got v = {v}, mu = {mu})"));
    }
    kmu_one_decoy(&stats.signal, &stats.decoy1, mu, v, gamma0_ub)
        .map(|k| k.clamp(0.0, 1.0))
        .ok_or_else(|| Error::Computation("K_mu bound undefined: no postselected signal events".into()))
}

/// e^{λ−μ}·(μ P_λ⁺)/(λ P_μ⁺)·Φ_{x,λ}/K_μ^{LB}; `None` when λ = 0.
fn zeta_single_level(signal: &IntensityStats, level: &IntensityStats, mu: f64, lambda: f64, phi: f64, kmu_lb: f64) -> Option<f64> {
    if !(lambda > 0.0) {
        return None;
    }
    Some((lambda - mu).exp() * (mu * level.p_plus) / (lambda * signal.p_plus) * phi / kmu_lb)
}

/// Pairwise candidate μe^{−μ}/((λ₁−λ₂)K)·(Φ₁P₁⁺e^{λ₁} − Φ₂P₂⁻e^{λ₂})/P_μ⁺.
#[allow(clippy::too_many_arguments)]
fn zeta_pair(
    signal: &IntensityStats,
    hi: (&IntensityStats, f64, f64),
    lo: (&IntensityStats, f64, f64),
    mu: f64,
    kmu_lb: f64,
) -> Option<f64> {
    let (s1, l1, phi1) = hi;
    let (s2, l2, phi2) = lo;
    if !(l1 > l2) {
        return None;
    }
    let diff = phi1 * s1.p_plus / signal.p_plus * l1.exp() - phi2 * s2.p_minus / signal.p_plus * l2.exp();
    Some(mu * (-mu).exp() / ((l1 - l2) * kmu_lb) * diff)
}

fn check_kmu(kmu_lb: f64, signal: &IntensityStats) -> Result<()> {
    if !(kmu_lb > 0.0) {
        return Err(Error::NoKey("K_mu lower bound is zero".into()));
    }
    if !(signal.p_plus > 0.0) {
        return Err(Error::NoKey("no postselected signal events".into()));
    }
    Ok(())
}

fn finish_zeta(candidates: impl Iterator<Item = Option<f64>>) -> f64 {
    let best = candidates.flatten().filter(|z| !z.is_nan()).fold(f64::INFINITY, f64::min);
    (best - 1.0).max(0.0)
}

/// Two-decoy upper bounds (ζ_t, ζ_ω) on the excess-noise factors.
pub fn zeta_upper_two(stats: &MeasuredStats, mu: f64, v1: f64, v2: f64, kmu_lb: f64) -> Result<(f64, f64)> {
    check_kmu(kmu_lb, &stats.signal)?;
    let d2 = stats.decoy2()?;
    let levels = [(&stats.signal, mu), (&stats.decoy1, v1), (d2, v2)];
    let per_basis = |basis: Basis| {
        let mut candidates = Vec::with_capacity(6);
        for (i, &(s1, l1)) in levels.iter().enumerate() {
            for &(s2, l2) in &levels[i + 1..] {
                let (hi, lo) = if l1 > l2 { ((s1, l1), (s2, l2)) } else { ((s2, l2), (s1, l1)) };
                candidates.push(zeta_pair(
                    &stats.signal,
                    (hi.0, hi.1, hi.0.phi(basis)),
                    (lo.0, lo.1, lo.0.phi(basis)),
                    mu,
                    kmu_lb,
                ));
            }
        }
        for &(s, l) in &levels {
            candidates.push(zeta_single_level(&stats.signal, s, mu, l, s.phi(basis), kmu_lb));
        }
        finish_zeta(candidates.into_iter())
    };
    Ok((per_basis(Basis::Time), per_basis(Basis::Frequency)))
}

/// Single-decoy upper bounds (ζ_t, ζ_ω) on the excess-noise factors.
pub fn zeta_upper_single(stats: &MeasuredStats, mu: f64, v: f64, kmu_lb: f64) -> Result<(f64, f64)> {
    if !(v > 0.0 && v < mu) {
        return domain(format!("single-decoy bound needs 0 < v < mu (got v = {v}, mu = {mu})"));
    }
    check_kmu(kmu_lb, &stats.signal)?;
    let (sig, dec) = (&stats.signal, &stats.decoy1);
    let per_basis = |basis: Basis| {
        let joint = mu / ((mu - v) * kmu_lb)
            * (sig.phi(basis) - dec.phi(basis) * dec.p_minus / sig.p_plus * (v - mu).exp());
        finish_zeta(
            [
                Some(joint),
                zeta_single_level(sig, sig, mu, mu, sig.phi(basis), kmu_lb),
                zeta_single_level(sig, dec, mu, v, dec.phi(basis), kmu_lb),
            ]
            .into_iter(),
        )
    };
    Ok((per_basis(Basis::Time), per_basis(Basis::Frequency)))
}

/// Runs the full decoy analysis for the configured mode.
///
/// Conditions under which no key can be extracted are reported through
/// [`DecoyBounds::no_key`]; only malformed inputs produce an error.
pub fn estimate(cfg: &IntensityConfig, stats: &MeasuredStats, p_d: f64) -> Result<DecoyBounds> {
    let (mu, v1, v2) = (cfg.mu, cfg.v1, cfg.v2);
    let (g0, gamma1_lb) = match cfg.mode {
        DecoyMode::TwoDecoy => {
            let g0 = gamma0_bounds(stats, v1, v2, p_d)?;
            let g1 = gamma1_lower(stats, mu, v1, v2, g0.lower)?;
            (g0, g1)
        }
        DecoyMode::SingleDecoy => {
            let upper = p_d.clamp(0.0, 1.0);
            let g0 = Gamma0Interval { lower: 0.0, upper, degenerate: false };
            (g0, gamma1_lower_single(stats, mu, v1, upper)?)
        }
    };
    let mut bounds = DecoyBounds {
        gamma0_lb: g0.lower,
        gamma0_ub: g0.upper,
        gamma0_degenerate: g0.degenerate,
        gamma1_lb,
        kmu_lb: 0.0,
        zeta_t_ub: f64::INFINITY,
        zeta_w_ub: f64::INFINITY,
        no_key: None,
    };
    if !(stats.signal.p_plus > 0.0) {
        bounds.no_key = Some("no postselected signal events".into());
        return Ok(bounds);
    }
    bounds.kmu_lb = match cfg.mode {
        DecoyMode::TwoDecoy => kmu_lower_two(stats, mu, v1, v2, g0.lower, g0.upper)?,
        DecoyMode::SingleDecoy => kmu_lower_single(stats, mu, v1, g0.upper)?,
    };
    let zeta = match cfg.mode {
        DecoyMode::TwoDecoy => zeta_upper_two(stats, mu, v1, v2, bounds.kmu_lb),
        DecoyMode::SingleDecoy => zeta_upper_single(stats, mu, v1, bounds.kmu_lb),
    };
    match zeta {
        Ok((zt, zw)) => {
            bounds.zeta_t_ub = zt;
            bounds.zeta_w_ub = zw;
            if zt > ZETA_CAP || zw > ZETA_CAP {
                bounds.no_key = Some(format!("excess-noise bound above cap {ZETA_CAP:e} (zeta_t = {zt:e}, zeta_w = {zw:e})"));
            }
        }
        Err(Error::NoKey(reason)) => bounds.no_key = Some(reason),
        Err(e) => return Err(e),
    }
    Ok(bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::{gamma_n, postselect_prob_closed, single_pair_fraction, transmittance};
    use proptest::prelude::*;

    /// Ground truth of the analytic channel model at one operating point.
    struct Truth {
        stats: MeasuredStats,
        gamma1: f64,
        kmu: f64,
        zeta: f64,
    }

    fn truth(mu: f64, v1: f64, v2: f64, length_km: f64, p_d: f64, zeta: f64, delta_phi: f64) -> Truth {
        let eta_t = transmittance(0.2, length_km).unwrap();
        let gamma1 = gamma_n(1, 0.93, 0.93, eta_t, p_d).unwrap();
        let level = |l: f64| {
            let p = postselect_prob_closed(l, 0.93, 0.93, eta_t, p_d).unwrap();
            let phi = phi_multiplier_forward(single_pair_fraction(l, gamma1, p), zeta, delta_phi);
            IntensityStats::exact(p, phi, phi)
        };
        let stats = MeasuredStats { signal: level(mu), decoy1: level(v1), decoy2: Some(level(v2)) };
        let kmu = single_pair_fraction(mu, gamma1, stats.signal.p_post);
        Truth { stats, gamma1, kmu, zeta }
    }

    fn widen(stats: &MeasuredStats, delta: f64) -> MeasuredStats {
        let w = |s: &IntensityStats| IntensityStats {
            p_minus: (s.p_post - delta).max(0.0),
            p_plus: (s.p_post + delta).min(1.0),
            ..*s
        };
        MeasuredStats { signal: w(&stats.signal), decoy1: w(&stats.decoy1), decoy2: stats.decoy2.as_ref().map(w) }
    }

    const PD: f64 = 7.06e-8;

    #[test]
    fn phi_forward_examples() {
        assert_eq!(phi_multiplier_forward(1.0, 0.3, 9.0), 1.3);
        assert_eq!(phi_multiplier_forward(0.0, 0.3, 0.7), 0.7);
        assert!((phi_multiplier_forward(0.5, 0.08, 0.0) - 0.54).abs() < 1e-15);
    }

    #[test]
    fn gamma0_examples() {
        let t = truth(0.1, 0.05, 0.005, 0.0, 0.01, 0.0, 0.0);
        let g0 = gamma0_bounds(&t.stats, 0.05, 0.005, 0.01).unwrap();
        assert_eq!(g0.lower, 1e-4);
        assert_eq!(g0.upper, 0.01);
        assert!(!g0.degenerate);

        // v2 = 0 and P_{v2} = γ₀ exactly: the linear term reduces to P₀
        let t = truth(0.1, 0.05, 0.0, 30.0, 0.01, 0.0, 0.0);
        let g0 = gamma0_bounds(&t.stats, 0.05, 0.0, 0.01).unwrap();
        assert!((g0.lower - 1e-4).abs() < 1e-18);

        assert!(gamma0_bounds(&t.stats, 0.05, 0.05, 0.01).is_err());

        // Inflated decoy-2 statistics push the estimate above p_d.
        let mut s = t.stats;
        s.decoy2 = Some(IntensityStats::exact(0.5, 1.0, 1.0));
        let g0 = gamma0_bounds(&s, 0.05, 0.0, 0.01).unwrap();
        assert!(g0.degenerate && g0.lower == g0.upper && g0.upper == 0.01);
    }

    #[test]
    fn gamma1_examples() {
        let t = truth(0.1, 0.05, 0.005, 0.0, 0.0, 0.0, 0.0);
        let g1 = gamma1_lower(&t.stats, 0.1, 0.05, 0.005, 0.0).unwrap();
        assert!(g1 <= 0.93 * 0.93 && g1 > 0.85, "{g1}");

        let zero = IntensityStats::exact(0.0, 0.0, 0.0);
        let empty = MeasuredStats { signal: zero, decoy1: zero, decoy2: Some(zero) };
        assert_eq!(gamma1_lower(&empty, 0.1, 0.05, 0.005, 0.0).unwrap(), 0.0);

        let mut last = g1;
        for delta in [1e-6, 1e-4, 1e-3, 1e-2, 1e-1] {
            let g = gamma1_lower(&widen(&t.stats, delta), 0.1, 0.05, 0.005, 0.0).unwrap();
            assert!(g <= last);
            last = g;
        }
        assert_eq!(last, 0.0);
        assert!(gamma1_lower(&t.stats, 0.05, 0.04, 0.02, 0.0).is_err());
    }

    #[test]
    fn kmu_two_examples() {
        let t = truth(0.1, 0.05, 0.005, 40.0, 0.0, 0.0, 0.0);
        let g0 = gamma0_bounds(&t.stats, 0.05, 0.005, 0.0).unwrap();
        let k = kmu_lower_two(&t.stats, 0.1, 0.05, 0.005, g0.lower, g0.upper).unwrap();
        assert!(k <= t.kmu && k > 0.9, "{k} vs {}", t.kmu);

        // v2 = 0 restricts the single-intensity branch to v1
        let t0 = truth(0.1, 0.05, 0.0, 40.0, PD, 0.0, 0.0);
        let g0 = gamma0_bounds(&t0.stats, 0.05, 0.0, PD).unwrap();
        let k0 = kmu_lower_two(&t0.stats, 0.1, 0.05, 0.0, g0.lower, g0.upper).unwrap();
        let d2 = t0.stats.decoy2.unwrap();
        let joint = kmu_two_decoy_branch(&t0.stats, &d2, 0.1, 0.05, 0.0, g0.lower).unwrap();
        let via_v1 = kmu_one_decoy(&t0.stats.signal, &t0.stats.decoy1, 0.1, 0.05, g0.upper).unwrap();
        assert_eq!(k0, joint.max(via_v1).clamp(0.0, 1.0));

        let wide = widen(&t.stats, 10.0);
        assert_eq!(kmu_lower_two(&wide, 0.1, 0.05, 0.005, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn kmu_single_examples() {
        let t = truth(0.1, 0.05, 0.005, 60.0, 0.0, 0.0, 0.0);
        let k1 = kmu_lower_single(&t.stats, 0.1, 0.05, 0.0).unwrap();
        assert!(k1 <= t.kmu && k1 > 0.8);

        let mut s = t.stats;
        s.decoy1.p_minus = 0.0;
        assert_eq!(kmu_lower_single(&s, 0.1, 0.05, 0.0).unwrap(), 0.0);

        let t = truth(0.1, 0.05, 0.005, 150.0, PD, 0.0, 0.0);
        let g0 = gamma0_bounds(&t.stats, 0.05, 0.005, PD).unwrap();
        let two = kmu_lower_two(&t.stats, 0.1, 0.05, 0.005, g0.lower, g0.upper).unwrap();
        let one = kmu_lower_single(&t.stats, 0.1, 0.05, PD).unwrap();
        assert!(one <= two);
        assert!(kmu_lower_single(&t.stats, 0.1, 0.1, PD).is_err());
        assert!(kmu_lower_single(&t.stats, 0.1, 0.0, PD).is_err());
    }

    #[test]
    fn zeta_two_examples() {
        let zeta = 49.0 / 576.0;
        let t = truth(0.1, 0.05, 0.005, 50.0, PD, zeta, 0.0);
        let g0 = gamma0_bounds(&t.stats, 0.05, 0.005, PD).unwrap();
        let k = kmu_lower_two(&t.stats, 0.1, 0.05, 0.005, g0.lower, g0.upper).unwrap();
        let (zt, zw) = zeta_upper_two(&t.stats, 0.1, 0.05, 0.005, k).unwrap();
        assert!(zt >= zeta && zw >= zeta);
        assert_eq!(zt, zw);

        // noiseless and exact K: bound collapses to zero
        let clean = truth(0.1, 0.05, 0.005, 50.0, PD, 0.0, 0.0);
        let (zt, zw) = zeta_upper_two(&clean.stats, 0.1, 0.05, 0.005, clean.kmu).unwrap();
        assert!(zt.abs() < 1e-12 && zw.abs() < 1e-12, "{zt} {zw}");

        assert!(matches!(zeta_upper_two(&t.stats, 0.1, 0.05, 0.005, 0.0), Err(Error::NoKey(_))));
    }

    #[test]
    fn zeta_signal_branch_grows_with_phi() {
        let t = truth(0.25, 0.125, 0.0125, 20.0, PD, 0.1, 0.0);
        let mut last = 0.0;
        for bump in [0.0, 0.1, 0.2, 0.5] {
            let phi = t.stats.signal.phi_t + bump;
            let b = zeta_single_level(&t.stats.signal, &t.stats.signal, 0.25, 0.25, phi, 0.8).unwrap();
            assert!(b > last);
            last = b;
        }
    }

    #[test]
    fn zeta_single_examples() {
        let clean = truth(0.1, 0.05, 0.005, 30.0, PD, 0.0, 0.0);
        let (zt, _) = zeta_upper_single(&clean.stats, 0.1, 0.05, clean.kmu).unwrap();
        assert!(zt.abs() < 1e-12);

        let zeta = 49.0 / 576.0;
        let t = truth(0.1, 0.05, 0.005, 90.0, PD, zeta, 0.0);
        let g0 = gamma0_bounds(&t.stats, 0.05, 0.005, PD).unwrap();
        let k2 = kmu_lower_two(&t.stats, 0.1, 0.05, 0.005, g0.lower, g0.upper).unwrap();
        let k1 = kmu_lower_single(&t.stats, 0.1, 0.05, PD).unwrap();
        let (two, _) = zeta_upper_two(&t.stats, 0.1, 0.05, 0.005, k2).unwrap();
        let (one, _) = zeta_upper_single(&t.stats, 0.1, 0.05, k1).unwrap();
        assert!(one >= two && two >= zeta);

        // huge fluctuation → unbounded noise → reported as no key
        let cfg = IntensityConfig::single_decoy(0.1, 0.05, 0.8).unwrap();
        let mut wide = widen(&t.stats, 1e-3);
        wide.decoy1.p_minus = wide.decoy1.p_post * 1e-4;
        let b = estimate(&cfg, &wide, PD).unwrap();
        assert!(b.no_key.is_some());
    }

    #[test]
    fn intensity_guards() {
        assert!(IntensityConfig::two_decoy(0.04, 0.03, 0.02, 0.7, 0.2).is_err());
        assert!(IntensityConfig::two_decoy(0.1, 0.02, 0.03, 0.7, 0.2).is_err());
        assert!(IntensityConfig::two_decoy(0.1, 0.05, -0.01, 0.7, 0.2).is_err());
        assert!(IntensityConfig::two_decoy(0.1, 0.05, 0.005, 0.7, 0.3).is_err());
        assert!(IntensityConfig::single_decoy(0.1, 0.1, 0.8).is_err());
        let ok = IntensityConfig::two_decoy(0.1, 0.05, 0.0, 0.7, 0.2).unwrap();
        assert!((ok.p_v2() - 0.1).abs() < 1e-15);
        assert_eq!(ok.levels().len(), 3);
        let single = IntensityConfig::single_decoy(0.1, 0.05, 0.8).unwrap();
        assert_eq!(single.levels().len(), 2);
    }

    fn two_decoy_bounds(s: &MeasuredStats, mu: f64, v1: f64, v2: f64) -> DecoyBounds {
        let cfg = IntensityConfig::two_decoy(mu, v1, v2, 0.7, 0.2).unwrap();
        estimate(&cfg, s, PD).unwrap()
    }

    proptest! {
        #[test]
        fn zero_fluctuation_bounds_are_sound(
            mu_idx in 0usize..3,
            length in 0.0f64..200.0,
            zeta in 0.0f64..0.5,
            delta_phi in 0.0f64..2.0,
        ) {
            let mu = [0.01, 0.1, 0.25][mu_idx];
            let (v1, v2) = (mu / 2.0, mu / 20.0);
            let t = truth(mu, v1, v2, length, PD, zeta, delta_phi);
            let b = two_decoy_bounds(&t.stats, mu, v1, v2);
            prop_assert!(b.gamma1_lb <= t.gamma1);
            prop_assert!(b.kmu_lb <= t.kmu);
            prop_assert!(b.gamma0_lb <= PD * PD && PD * PD <= b.gamma0_ub);
            if b.no_key.is_none() {
                prop_assert!(b.zeta_t_ub >= t.zeta && b.zeta_w_ub >= t.zeta);
            }
            let single = IntensityConfig::single_decoy(mu, v1, 0.8).unwrap();
            let one_stats = MeasuredStats { decoy2: None, ..t.stats };
            let s = estimate(&single, &one_stats, PD).unwrap();
            prop_assert!(s.gamma1_lb <= t.gamma1);
            prop_assert!(s.kmu_lb <= b.kmu_lb);
            if s.no_key.is_none() {
                prop_assert!(s.zeta_t_ub >= t.zeta);
            }
        }

        #[test]
        fn widening_never_helps(
            mu_idx in 0usize..3,
            length in 0.0f64..150.0,
            d1 in 0.0f64..1e-4,
            extra in 0.0f64..1e-4,
        ) {
            let mu = [0.01, 0.1, 0.25][mu_idx];
            let (v1, v2) = (mu / 2.0, mu / 20.0);
            let t = truth(mu, v1, v2, length, PD, 0.085, 0.0);
            let narrow = two_decoy_bounds(&widen(&t.stats, d1), mu, v1, v2);
            let wide = two_decoy_bounds(&widen(&t.stats, d1 + extra), mu, v1, v2);
            prop_assert!(wide.kmu_lb <= narrow.kmu_lb);
            if narrow.kmu_lb > 0.0 && wide.kmu_lb > 0.0 {
                prop_assert!(wide.zeta_t_ub >= narrow.zeta_t_ub);
            }
        }

        #[test]
        fn combined_bound_dominates_branches(mu_idx in 0usize..3, length in 0.0f64..200.0, delta in 0.0f64..1e-5) {
            let mu = [0.01, 0.1, 0.25][mu_idx];
            let (v1, v2) = (mu / 2.0, mu / 20.0);
            let t = truth(mu, v1, v2, length, PD, 0.0, 0.0);
            let s = widen(&t.stats, delta);
            let g0 = gamma0_bounds(&s, v1, v2, PD).unwrap();
            let k = kmu_lower_two(&s, mu, v1, v2, g0.lower, g0.upper).unwrap();
            let d2 = s.decoy2.unwrap();
            for branch in [
                kmu_two_decoy_branch(&s, &d2, mu, v1, v2, g0.lower),
                kmu_one_decoy(&s.signal, &s.decoy1, mu, v1, g0.upper),
                kmu_one_decoy(&s.signal, &d2, mu, v2, g0.upper),
            ].into_iter().flatten() {
                prop_assert!(k >= branch.min(1.0));
            }
        }
    }
}
