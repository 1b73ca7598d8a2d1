//! Finite-size statistics: the ε-security budget and the fluctuation range
//! Δ(N, ε_PE) of a measured postselection probability, by Hoeffding's
//! inequality or by the multiplicative Chernoff bound.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

/// Number of pulses sent in a session. `Infinite` selects the asymptotic
/// regime where every fluctuation and finite-key penalty vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseCount {
    Finite(f64),
    Infinite,
}

impl PulseCount {
    pub fn finite(n: f64) -> Result<Self> {
        if n.is_finite() && n >= 0.0 {
            Ok(PulseCount::Finite(n))
        } else {
            domain(format!("pulse count must be finite and >= 0 (got {n})"))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, PulseCount::Infinite)
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            PulseCount::Finite(n) => n,
            PulseCount::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for PulseCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseCount::Finite(n) => write!(f, "{n:e}"),
            PulseCount::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for PulseCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
            return Ok(PulseCount::Infinite);
        }
        let n: f64 = t
            .parse()
            .map_err(|_| Error::Invalid { key: "n_pulses".into(), msg: format!("not a number: {t:?}") })?;
        if n.is_infinite() && n > 0.0 {
            return Ok(PulseCount::Infinite);
        }
        PulseCount::finite(n).map_err(|e| Error::Invalid { key: "n_pulses".into(), msg: e.to_string() })
    }
}

/// How the fluctuation range of a postselection probability is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Hoeffding,
    Chernoff,
    /// No fluctuation: the asymptotic (N = ∞) interval.
    Exact,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Hoeffding => "hoeffding",
            Method::Chernoff => "chernoff",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hoeffding" => Ok(Method::Hoeffding),
            "chernoff" => Ok(Method::Chernoff),
            "exact" => Ok(Method::Exact),
            other => Err(Error::Invalid {
                key: "method".into(),
                msg: format!("expected hoeffding, chernoff or exact, got {other:?}"),
            }),
        }
    }
}

/// Failure probabilities of parameter estimation, error correction,
/// smoothing and privacy amplification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonBudget {
    pub eps_pe: f64,
    pub eps_ec: f64,
    pub eps_bar: f64,
    pub eps_pa: f64,
}

impl EpsilonBudget {
    pub fn new(eps_pe: f64, eps_ec: f64, eps_bar: f64, eps_pa: f64) -> Result<Self> {
        let b = EpsilonBudget { eps_pe, eps_ec, eps_bar, eps_pa };
        for (key, v) in [("eps_pe", eps_pe), ("eps_ec", eps_ec), ("eps_bar", eps_bar), ("eps_pa", eps_pa)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Invalid { key: key.into(), msg: format!("must lie in (0, 1), got {v}") });
            }
        }
        epsilon_total(&b)?;
        Ok(b)
    }

    /// All four components at 10⁻¹⁰.
    pub fn standard() -> Self {
        EpsilonBudget { eps_pe: 1e-10, eps_ec: 1e-10, eps_bar: 1e-10, eps_pa: 1e-10 }
    }
}

/// Overall failure probability ε = ε_PE + ε_EC + ε̄ + ε_PA.
pub fn epsilon_total(budget: &EpsilonBudget) -> Result<f64> {
    let total = budget.eps_pe + budget.eps_ec + budget.eps_bar + budget.eps_pa;
    if !(total < 1.0) {
        return domain(format!("epsilon budget sums to {total}, must be < 1"));
    }
    Ok(total)
}

/// Interval [P⁻, P⁺] around a measured postselection probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationInterval {
    pub p_center: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    pub method: Method,
    /// Sample size N_λ used for the estimate (∞ for the exact interval).
    pub n_frames: f64,
}

impl FluctuationInterval {
    pub fn exact(p: f64) -> Self {
        FluctuationInterval { p_center: p, p_minus: p, p_plus: p, method: Method::Exact, n_frames: f64::INFINITY }
    }

    /// The uninformative interval [0, 1]. Used when a method cannot certify
    /// anything about the sample.
    pub fn vacuous(p: f64, method: Method, n_frames: f64) -> Self {
        FluctuationInterval { p_center: p, p_minus: 0.0, p_plus: 1.0, method, n_frames }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.p_minus <= p && p <= self.p_plus
    }

    pub(crate) fn clamped(p: f64, minus: f64, plus: f64, method: Method, n_frames: f64) -> Self {
        FluctuationInterval {
            p_center: p,
            p_minus: (p - minus).clamp(0.0, p),
            p_plus: (p + plus).clamp(p, 1.0),
            method,
            n_frames,
        }
    }
}

/// Outcome of the multiplicative-Chernoff applicability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffDiagnostics {
    pub beta: f64,
    pub n_frames: f64,
    /// α_L = β − √(N/2 · ln ε⁻¹).
    pub alpha_l: f64,
    /// (9/32) − ln(2/ε_C)/α_L; must be ≥ 0.
    pub lower_margin: f64,
    /// 1/3 − ln(1/ε̂_C)/α_L; must be > 0.
    pub upper_margin: f64,
    pub passed: bool,
}

impl fmt::Display for ChernoffDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alpha_l <= 0.0 {
            write!(f, "sample too small (beta = {:e}, N = {:e}, alpha_L = {:e})", self.beta, self.n_frames, self.alpha_l)
        } else {
            write!(
                f,
                "beta = {:e}, N = {:e}, alpha_L = {:e}, margins {:e} / {:e}",
                self.beta, self.n_frames, self.alpha_l, self.lower_margin, self.upper_margin
            )
        }
    }
}

fn check_eps(eps_pe: f64) -> Result<()> {
    if eps_pe > 0.0 && eps_pe < 1.0 {
        Ok(())
    } else {
        domain(format!("eps_pe must lie in (0, 1), got {eps_pe}"))
    }
}

fn check_frames(n_frames: f64) -> Result<()> {
    if n_frames > 0.0 {
        Ok(())
    } else {
        Err(Error::EstimationImpossible(format!("no frames available for estimation (N = {n_frames})")))
    }
}

/// Expected number of 𝔻𝔻 frames at intensity λ: p_λ·(1 − p_T)²·N.
pub fn frames_for_estimation(p_lambda: f64, p_t: f64, n_pulses: PulseCount) -> f64 {
    let share = p_lambda * (1.0 - p_t) * (1.0 - p_t);
    if share <= 0.0 {
        return 0.0;
    }
    share * n_pulses.as_f64()
}

/// Symmetric Hoeffding width √(ln(2/ε_PE) / (2·N_λ)), with ε_PE split
/// evenly between the two tails.
pub fn hoeffding_delta(n_frames: f64, eps_pe: f64) -> Result<f64> {
    check_eps(eps_pe)?;
    check_frames(n_frames)?;
    if n_frames.is_infinite() {
        return Ok(0.0);
    }
    Ok(((2.0 / eps_pe).ln() / (2.0 * n_frames)).sqrt())
}

/// Multiplicative-Chernoff widths (Δ⁺, Δ⁻) with ε_PE split in thirds.
pub fn chernoff_deltas(p_center: f64, n_frames: f64, eps_pe: f64) -> Result<(f64, f64)> {
    check_eps(eps_pe)?;
    check_frames(n_frames)?;
    if !(0.0..=1.0).contains(&p_center) {
        return domain(format!("probability must lie in [0, 1], got {p_center}"));
    }
    if n_frames.is_infinite() {
        return Ok((0.0, 0.0));
    }
    let ln_inv_eps = -(eps_pe / 3.0).ln();
    let scale = 2.0 * p_center / n_frames;
    let plus = (scale * (16f64.ln() + 4.0 * ln_inv_eps)).sqrt();
    let minus = (scale * 1.5 * ln_inv_eps).sqrt();
    Ok((plus, minus))
}

/// Checks the preconditions of the multiplicative Chernoff bound for an
/// observed count `beta` out of `n_frames` trials.
pub fn chernoff_applicable(beta: f64, n_frames: f64, eps_pe: f64) -> ChernoffDiagnostics {
    let eps = eps_pe / 3.0;
    let alpha_l = if n_frames.is_infinite() {
        f64::INFINITY
    } else {
        beta - (n_frames / 2.0 * (1.0 / eps).ln()).sqrt()
    };
    if !(alpha_l > 0.0) || !(eps > 0.0 && eps < 1.0) {
        return ChernoffDiagnostics {
            beta,
            n_frames,
            alpha_l,
            lower_margin: f64::NEG_INFINITY,
            upper_margin: f64::NEG_INFINITY,
            passed: false,
        };
    }
    let limit_lower = {
        let c = 3.0 / (4.0 * std::f64::consts::SQRT_2);
        c * c
    };
    let lower_margin = limit_lower - (2.0 / eps).ln() / alpha_l;
    let upper_margin = 1.0 / 3.0 - (1.0 / eps).ln() / alpha_l;
    ChernoffDiagnostics {
        beta,
        n_frames,
        alpha_l,
        lower_margin,
        upper_margin,
        passed: lower_margin >= 0.0 && upper_margin > 0.0,
    }
}

/// Fluctuation interval for a measured postselection probability.
///
/// `p_lambda` is the selection probability of the intensity and `p_t` the
/// 𝕋-basis probability; together with `n_pulses` they fix the sample size
/// N_λ. An infinite pulse count yields the exact interval regardless of
/// `method`.
pub fn interval(
    p_center: f64,
    p_lambda: f64,
    p_t: f64,
    n_pulses: PulseCount,
    eps_pe: f64,
    method: Method,
) -> Result<FluctuationInterval> {
    if !(0.0..=1.0).contains(&p_center) {
        return domain(format!("probability must lie in [0, 1], got {p_center}"));
    }
    if method == Method::Exact || n_pulses.is_infinite() {
        return Ok(FluctuationInterval::exact(p_center));
    }
    interval_from_frames(p_center, frames_for_estimation(p_lambda, p_t, n_pulses), eps_pe, method)
}

/// Fluctuation interval when the sample size N_λ is known directly, as for a
/// simulated session.
pub fn interval_from_frames(p_center: f64, n_frames: f64, eps_pe: f64, method: Method) -> Result<FluctuationInterval> {
    if !(0.0..=1.0).contains(&p_center) {
        return domain(format!("probability must lie in [0, 1], got {p_center}"));
    }
    if method == Method::Exact || n_frames.is_infinite() {
        return Ok(FluctuationInterval::exact(p_center));
    }
    match method {
        Method::Hoeffding => {
            let d = hoeffding_delta(n_frames, eps_pe)?;
            Ok(FluctuationInterval::clamped(p_center, d, d, method, n_frames))
        }
        Method::Chernoff => {
            check_eps(eps_pe)?;
            check_frames(n_frames)?;
            let diag = chernoff_applicable(p_center * n_frames, n_frames, eps_pe);
            if !diag.passed {
                return Err(Error::ChernoffInapplicable(diag));
            }
            let (plus, minus) = chernoff_deltas(p_center, n_frames, eps_pe)?;
            Ok(FluctuationInterval::clamped(p_center, minus, plus, method, n_frames))
        }
        Method::Exact => unreachable!(),
    }
}
