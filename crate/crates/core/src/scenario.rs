//! A fully specified evaluation scenario and the end-to-end evaluation of
//! the key capacity at one fiber length.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use crate::decoy::{self, phi_multiplier_forward, DecoyMode, IntensityConfig, IntensityStats, Level, MeasuredStats};
use crate::error::{Error, Result};
use crate::finite::{chernoff_deltas, interval, EpsilonBudget, FluctuationInterval, Method, PulseCount};
use crate::keyrate::{self, KeyRateInputs, KeyTerms, SecurityQuantities};
use crate::phys::{gamma_n, postselect_prob_closed, single_pair_fraction, ChannelPoint, PhysicalParams};
use crate::security::{builtin_table, GaussianModel, SecurityModel, SecurityPoint, SecurityTable};

/// Which security model supplies I(A;B) and the Holevo bound.
#[derive(Debug, Clone, PartialEq)]
pub enum SecurityModelSpec {
    Table(Arc<SecurityTable>),
    Gaussian,
}

impl SecurityModelSpec {
    pub fn builtin_table() -> Self {
        SecurityModelSpec::Table(builtin_table())
    }

    fn model(&self) -> &dyn SecurityModel {
        match self {
            SecurityModelSpec::Table(t) => t.as_ref(),
            SecurityModelSpec::Gaussian => &GaussianModel,
        }
    }
}

/// What to do when the Chernoff preconditions fail for some intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChernoffPolicy {
    /// Use the uninformative interval [0, 1] for that intensity.
    #[default]
    Vacuous,
    /// Abort the evaluation with [`Error::ChernoffInapplicable`].
    Error,
    /// Use the Hoeffding interval for that intensity.
    Hoeffding,
    /// Apply the Chernoff widths without the applicability check. This is
    /// how the published curves were drawn; the intervals it produces for
    /// very small counts carry no coverage guarantee.
    AsPublished,
}

impl ChernoffPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChernoffPolicy::Vacuous => "vacuous",
            ChernoffPolicy::Error => "error",
            ChernoffPolicy::Hoeffding => "hoeffding",
            ChernoffPolicy::AsPublished => "as-published",
        }
    }
}

impl fmt::Display for ChernoffPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChernoffPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "vacuous" => Ok(ChernoffPolicy::Vacuous),
            "error" => Ok(ChernoffPolicy::Error),
            "hoeffding" => Ok(ChernoffPolicy::Hoeffding),
            "as-published" => Ok(ChernoffPolicy::AsPublished),
            other => Err(Error::Invalid {
                key: "chernoff_inapplicable".into(),
                msg: format!("expected vacuous, error, hoeffding or as-published, got {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub phys: PhysicalParams,
    pub intensities: IntensityConfig,
    pub p_t: f64,
    pub budget: EpsilonBudget,
    pub method: Method,
    pub n_pulses: PulseCount,
    pub security: SecurityModelSpec,
    /// Reconciliation efficiency β.
    pub beta: f64,
    /// Multiplier ΔΦ of frames without a usable pair.
    pub delta_phi: f64,
    pub chernoff_policy: ChernoffPolicy,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.phys.validate()?;
        self.intensities.validate()?;
        let bad = |key: &str, msg: String| Err(Error::Invalid { key: key.into(), msg });
        if !(self.p_t > 0.0 && self.p_t < 1.0) {
            return bad("p_t", format!("must lie in (0, 1), got {}", self.p_t));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta", format!("must lie in (0, 1], got {}", self.beta));
        }
        if !(self.delta_phi.is_finite() && self.delta_phi >= 0.0) {
            return bad("delta_phi", format!("must be finite and >= 0, got {}", self.delta_phi));
        }
        if let PulseCount::Finite(n) = self.n_pulses {
            if !(n >= 1.0) {
                return bad("n_pulses", format!("must be >= 1 or inf, got {n}"));
            }
        }
        Ok(())
    }

    pub fn with_n_pulses(&self, n: PulseCount) -> Self {
        Scenario { n_pulses: n, ..self.clone() }
    }

    pub fn with_method(&self, method: Method) -> Self {
        Scenario { method, ..self.clone() }
    }

    pub fn with_chernoff_policy(&self, chernoff_policy: ChernoffPolicy) -> Self {
        Scenario { chernoff_policy, ..self.clone() }
    }
}

/// One evaluated point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub length_km: f64,
    pub n_pulses: PulseCount,
    pub method: Method,
    pub delta_i: f64,
    pub r_hd: f64,
    pub terms: KeyTerms,
    pub kmu_lb: f64,
    pub zeta_t_ub: f64,
    pub zeta_w_ub: f64,
    pub positive: bool,
    pub no_key: Option<String>,
}

/// Model-expected statistics with fluctuation allowances at one channel
/// point, together with the true K_μ and γ₁.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub stats: MeasuredStats,
    pub intervals: Vec<(Level, FluctuationInterval)>,
    pub gamma1: f64,
    pub kmu: f64,
    pub zeta: f64,
}

/// The statistics the analytic evaluation feeds to the decoy bounds:
/// P_λ from the closed form, its fluctuation interval, and Φ from the
/// forward model with the true ζ.
pub fn point_stats(s: &Scenario, channel: &ChannelPoint) -> Result<PointStats> {
    let frame = s.phys.frame();
    let (ea, eb, et) = (s.phys.eta_alice, s.phys.eta_bob, channel.eta_t);
    let gamma1 = gamma_n(1, ea, eb, et, frame.p_d)?;
    let mut intervals = Vec::with_capacity(3);
    let mut level_stats = Vec::with_capacity(3);
    for (level, lambda, p_lambda) in s.intensities.levels() {
        let p = postselect_prob_closed(lambda, ea, eb, et, frame.p_d)?;
        let iv = match interval(p, p_lambda, s.p_t, s.n_pulses, s.budget.eps_pe, s.method) {
            Ok(iv) => iv,
            Err(Error::ChernoffInapplicable(diag)) if s.chernoff_policy == ChernoffPolicy::Vacuous => {
                FluctuationInterval::vacuous(p, s.method, diag.n_frames)
            }
            Err(Error::ChernoffInapplicable(diag)) if s.chernoff_policy == ChernoffPolicy::AsPublished => {
                let (plus, minus) = chernoff_deltas(p, diag.n_frames, s.budget.eps_pe)?;
                FluctuationInterval::clamped(p, minus, plus, Method::Chernoff, diag.n_frames)
            }
            Err(Error::ChernoffInapplicable(_)) if s.chernoff_policy == ChernoffPolicy::Hoeffding => {
                interval(p, p_lambda, s.p_t, s.n_pulses, s.budget.eps_pe, Method::Hoeffding)?
            }
            Err(e) => return Err(e),
        };
        let phi = phi_multiplier_forward(single_pair_fraction(lambda, gamma1, p), frame.zeta, s.delta_phi);
        level_stats.push(IntensityStats { p_post: p, p_minus: iv.p_minus, p_plus: iv.p_plus, phi_t: phi, phi_w: phi });
        intervals.push((level, iv));
    }
    let stats = MeasuredStats {
        signal: level_stats[0],
        decoy1: level_stats[1],
        decoy2: level_stats.get(2).copied(),
    };
    let kmu = single_pair_fraction(s.intensities.mu, gamma1, stats.signal.p_post);
    Ok(PointStats { stats, intervals, gamma1, kmu, zeta: frame.zeta })
}

/// Evaluates ΔI at fiber length `length_km`.
pub fn run_point(s: &Scenario, length_km: f64) -> Result<ResultRow> {
    s.validate()?;
    let channel = ChannelPoint::new(s.phys.alpha, length_km)?;
    let frame = s.phys.frame();
    let ps = point_stats(s, &channel)?;
    let bounds = decoy::estimate(&s.intensities, &ps.stats, frame.p_d)?;
    let i_r = f64::from(s.phys.schmidt_d).log2();
    let sq = if bounds.no_key.is_some() {
        SecurityQuantities { i_ab: 0.0, phi_ub: 0.0, i_r }
    } else {
        s.security.model().evaluate(&SecurityPoint {
            schmidt_d: s.phys.schmidt_d,
            delta_coh: s.phys.delta_coh,
            delta_cor: frame.delta_cor,
            zeta_t: bounds.zeta_t_ub,
            zeta_w: bounds.zeta_w_ub,
        })?
    };
    let inputs = KeyRateInputs {
        beta: s.beta,
        p_mu: s.intensities.p_mu,
        p_t: s.p_t,
        n_pulses: s.n_pulses,
        schmidt_d: s.phys.schmidt_d,
        budget: s.budget,
    };
    let k = keyrate::delta_i(&inputs, &bounds, &sq)?;
    Ok(ResultRow {
        length_km,
        n_pulses: s.n_pulses,
        method: s.method,
        delta_i: k.delta_i,
        r_hd: k.r_hd,
        terms: k.terms,
        kmu_lb: bounds.kmu_lb,
        zeta_t_ub: bounds.zeta_t_ub,
        zeta_w_ub: bounds.zeta_w_ub,
        positive: k.positive,
        no_key: k.no_key,
    })
}

/// Partially specified scenario. Presets and configuration files fill in
/// fields; [`ScenarioSpec::build`] applies defaults and validates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioSpec {
    pub name: Option<String>,
    pub alpha: Option<f64>,
    pub eta_alice: Option<f64>,
    pub eta_bob: Option<f64>,
    pub r_dc: Option<f64>,
    pub delta_j: Option<f64>,
    pub delta_coh: Option<f64>,
    pub delta_delta: Option<f64>,
    pub schmidt_d: Option<u32>,
    pub mode: Option<DecoyMode>,
    pub mu: Option<f64>,
    pub v1: Option<f64>,
    pub v2: Option<f64>,
    /// Selection ratios, normalised at build time.
    pub ratios: Option<Vec<f64>>,
    pub p_mu: Option<f64>,
    pub p_v1: Option<f64>,
    pub p_t: Option<f64>,
    pub beta: Option<f64>,
    pub method: Option<Method>,
    pub n_pulses: Option<PulseCount>,
    pub delta_phi: Option<f64>,
    pub chernoff_policy: Option<ChernoffPolicy>,
    pub eps_pe: Option<f64>,
    pub eps_ec: Option<f64>,
    pub eps_bar: Option<f64>,
    pub eps_pa: Option<f64>,
    pub security_kind: Option<SecurityKind>,
    pub table_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecurityKind {
    Table,
    Gaussian,
}

impl fmt::Display for SecurityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SecurityKind::Table => "table",
            SecurityKind::Gaussian => "gaussian",
        })
    }
}

fn missing(key: &str) -> Error {
    Error::Invalid { key: key.into(), msg: "required (no preset supplies it)".into() }
}

impl ScenarioSpec {
    /// Overlays every field set in `other` onto `self`.
    pub fn merge(mut self, other: ScenarioSpec) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            name, alpha, eta_alice, eta_bob, r_dc, delta_j, delta_coh, delta_delta, schmidt_d, mode, mu, v1, v2,
            ratios, p_mu, p_v1, p_t, beta, method, n_pulses, delta_phi, chernoff_policy, eps_pe, eps_ec, eps_bar,
            eps_pa, security_kind, table_path
        );
        self
    }

    pub fn build(&self) -> Result<Scenario> {
        let d = self.schmidt_d.ok_or_else(|| missing("d"))?;
        let std = PhysicalParams::standard(d);
        let phys = PhysicalParams {
            alpha: self.alpha.unwrap_or(std.alpha),
            eta_alice: self.eta_alice.unwrap_or(std.eta_alice),
            eta_bob: self.eta_bob.unwrap_or(std.eta_bob),
            r_dc: self.r_dc.unwrap_or(std.r_dc),
            delta_j: self.delta_j.unwrap_or(std.delta_j),
            delta_coh: self.delta_coh.unwrap_or(std.delta_coh),
            schmidt_d: d,
            delta_delta: self.delta_delta.unwrap_or(std.delta_delta),
        };
        let mode = self.mode.unwrap_or(DecoyMode::TwoDecoy);
        let mu = self.mu.ok_or_else(|| missing("mu"))?;
        let v1 = self.v1.unwrap_or(mu / 2.0);
        let (p_mu, p_v1) = self.selection_probabilities(mode)?;
        let intensities = match mode {
            DecoyMode::TwoDecoy => IntensityConfig::two_decoy(mu, v1, self.v2.unwrap_or(v1 / 10.0), p_mu, p_v1)?,
            DecoyMode::SingleDecoy => {
                if self.v2.is_some() {
                    return Err(Error::Invalid { key: "v2".into(), msg: "not used in single-decoy mode".into() });
                }
                IntensityConfig::single_decoy(mu, v1, p_mu)?
            }
        };
        let budget = EpsilonBudget::new(
            self.eps_pe.unwrap_or(1e-10),
            self.eps_ec.unwrap_or(1e-10),
            self.eps_bar.unwrap_or(1e-10),
            self.eps_pa.unwrap_or(1e-10),
        )?;
        let security = match (self.security_kind.unwrap_or(SecurityKind::Table), &self.table_path) {
            (SecurityKind::Table, None) => SecurityModelSpec::builtin_table(),
            (SecurityKind::Table, Some(path)) => SecurityModelSpec::Table(Arc::new(SecurityTable::load(path)?)),
            (SecurityKind::Gaussian, None) => SecurityModelSpec::Gaussian,
            (SecurityKind::Gaussian, Some(_)) => {
                return Err(Error::Invalid { key: "table".into(), msg: "a table path needs kind = table".into() })
            }
        };
        let scenario = Scenario {
            name: self.name.clone(),
            phys,
            intensities,
            p_t: self.p_t.unwrap_or(0.5),
            budget,
            method: self.method.unwrap_or(Method::Hoeffding),
            n_pulses: self.n_pulses.unwrap_or(PulseCount::Infinite),
            security,
            beta: self.beta.unwrap_or(0.9),
            delta_phi: self.delta_phi.unwrap_or(0.0),
            chernoff_policy: self.chernoff_policy.unwrap_or_default(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn selection_probabilities(&self, mode: DecoyMode) -> Result<(f64, f64)> {
        let parts = match mode {
            DecoyMode::TwoDecoy => 3,
            DecoyMode::SingleDecoy => 2,
        };
        if let Some(r) = &self.ratios {
            if self.p_mu.is_some() || self.p_v1.is_some() {
                return Err(Error::Invalid { key: "ratios".into(), msg: "give either ratios or p_mu/p_v1, not both".into() });
            }
            if r.len() != parts {
                return Err(Error::Invalid {
                    key: "ratios".into(),
                    msg: format!("{mode} mode needs {parts} ratio parts, got {}", r.len()),
                });
            }
            if r.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::Invalid { key: "ratios".into(), msg: "parts must be positive".into() });
            }
            let total: f64 = r.iter().sum();
            return Ok((r[0] / total, r[1] / total));
        }
        match (mode, self.p_mu, self.p_v1) {
            (_, None, None) => Ok(match mode {
                DecoyMode::TwoDecoy => (0.7, 0.2),
                DecoyMode::SingleDecoy => (0.8, 0.2),
            }),
            (DecoyMode::TwoDecoy, Some(a), Some(b)) => Ok((a, b)),
            (DecoyMode::SingleDecoy, Some(a), None) => Ok((a, 1.0 - a)),
            (DecoyMode::SingleDecoy, None, Some(b)) => Ok((1.0 - b, b)),
            (DecoyMode::SingleDecoy, Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Invalid { key: "p_v1".into(), msg: "two-decoy mode needs both p_mu and p_v1".into() }),
        }
    }
}

/// Parses a ratio such as `7:2:1`.
pub fn parse_ratios(text: &str) -> Result<Vec<f64>> {
    text.split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid { key: "ratios".into(), msg: format!("bad ratio part {:?} in {text:?}", p.trim()) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mode: DecoyMode, mu: f64) -> ScenarioSpec {
        ScenarioSpec { schmidt_d: Some(8), mode: Some(mode), mu: Some(mu), ..Default::default() }
    }

    #[test]
    fn defaults_follow_the_evaluation_setup() {
        let s = spec(DecoyMode::TwoDecoy, 0.1).build().unwrap();
        assert_eq!(s.intensities.v1, 0.05);
        assert_eq!(s.intensities.v2, 0.005);
        assert!((s.intensities.p_mu - 0.7).abs() < 1e-15);
        assert!((s.intensities.p_v2() - 0.1).abs() < 1e-12);
        assert_eq!((s.p_t, s.beta, s.delta_phi), (0.5, 0.9, 0.0));
        assert_eq!(s.budget, EpsilonBudget::standard());
        let single = spec(DecoyMode::SingleDecoy, 0.1).build().unwrap();
        assert_eq!(single.intensities.v1, 0.05);
        assert!((single.intensities.p_mu - 0.8).abs() < 1e-15);
    }

    #[test]
    fn ratios() {
        assert_eq!(parse_ratios("7:2:1").unwrap(), vec![7.0, 2.0, 1.0]);
        assert!(parse_ratios("7:x").is_err());
        let mut sp = spec(DecoyMode::TwoDecoy, 0.1);
        sp.ratios = Some(vec![7.0, 2.0, 1.0]);
        let s = sp.build().unwrap();
        assert_eq!((s.intensities.p_mu, s.intensities.p_v1), (0.7, 0.2));
        sp.ratios = Some(vec![4.0, 1.0]);
        assert!(sp.build().is_err());
    }

    #[test]
    fn missing_required_keys() {
        let e = ScenarioSpec { mu: Some(0.1), ..Default::default() }.build().unwrap_err();
        assert!(matches!(e, Error::Invalid { ref key, .. } if key == "d"));
        let e = ScenarioSpec { schmidt_d: Some(8), ..Default::default() }.build().unwrap_err();
        assert!(matches!(e, Error::Invalid { ref key, .. } if key == "mu"));
    }

    #[test]
    fn asymptotic_point_has_no_penalty() {
        let s = spec(DecoyMode::TwoDecoy, 0.1).build().unwrap();
        let r = run_point(&s, 0.0).unwrap();
        assert_eq!(r.delta_i, r.r_hd);
        assert!(r.positive);
        assert!(r.zeta_t_ub >= s.phys.frame().zeta);
    }

    #[test]
    fn capacity_falls_with_distance() {
        let s = spec(DecoyMode::TwoDecoy, 0.1).build().unwrap().with_n_pulses(PulseCount::Finite(1e11));
        let mut last = f64::INFINITY;
        for l in (0..=300).step_by(10) {
            let r = run_point(&s, f64::from(l)).unwrap();
            assert!(r.delta_i <= last, "L = {l}");
            last = r.delta_i;
        }
    }

    #[test]
    fn strict_chernoff_policy() {
        let mut s = spec(DecoyMode::TwoDecoy, 0.01).build().unwrap();
        s.method = Method::Chernoff;
        s.n_pulses = PulseCount::Finite(1e9);
        assert!(run_point(&s, 0.0).is_ok());
        s.chernoff_policy = ChernoffPolicy::Error;
        assert!(matches!(run_point(&s, 0.0), Err(Error::ChernoffInapplicable(_))));
    }

    #[test]
    fn inapplicable_policies_order() {
        // v2 = 5e-4 fails the Chernoff preconditions at this length.
        let s = spec(DecoyMode::TwoDecoy, 0.01)
            .build()
            .unwrap()
            .with_method(Method::Chernoff)
            .with_n_pulses(PulseCount::Finite(1e12));
        let at = |policy: ChernoffPolicy| run_point(&s.with_chernoff_policy(policy), 150.0);
        assert!(matches!(at(ChernoffPolicy::Error), Err(Error::ChernoffInapplicable(_))));
        let vacuous = at(ChernoffPolicy::Vacuous).unwrap().kmu_lb;
        let hoeffding = at(ChernoffPolicy::Hoeffding).unwrap().kmu_lb;
        let published = at(ChernoffPolicy::AsPublished).unwrap().kmu_lb;
        assert!(vacuous <= hoeffding && hoeffding <= published && vacuous < published);
        for name in ["vacuous", "error", "hoeffding", "as-published"] {
            assert_eq!(name.parse::<ChernoffPolicy>().unwrap().as_str(), name);
        }
        assert!("ignore".parse::<ChernoffPolicy>().is_err());
    }
}
