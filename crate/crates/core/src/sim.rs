//! Frame-level Monte Carlo of a protocol session.
//!
//! Each frame picks an intensity, a pair number n ~ Poisson(λ), a basis for
//! each party, and then independent detections for Alice and Bob with the
//! per-arm probabilities of the analytic model. Timing is not simulated: the
//! correlation multipliers are synthesized from ground truth.
//!
//! The generator is ChaCha8 seeded with `seed_from_u64`; coverage trials use
//! `seed ^ trial_index`, so results do not depend on scheduling.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decoy::{phi_multiplier_forward, IntensityConfig, IntensityStats, Level, MeasuredStats};
use crate::error::{Error, Result};
use crate::finite::{interval_from_frames, ChernoffDiagnostics, FluctuationInterval, Method};
use crate::phys::{gamma_n, postselect_prob_closed, single_pair_fraction, ChannelPoint, FrameParams, PhysicalParams};

/// Which bases the two parties chose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisPair {
    /// Both in the arrival-time basis (key generation).
    TT,
    /// Both in the dispersed basis (parameter estimation).
    DD,
    /// Different bases; tallied but not used.
    Mismatched,
}

impl BasisPair {
    pub const ALL: [BasisPair; 3] = [BasisPair::TT, BasisPair::DD, BasisPair::Mismatched];

    pub fn label(&self) -> &'static str {
        match self {
            BasisPair::TT => "TT",
            BasisPair::DD => "DD",
            BasisPair::Mismatched => "TD",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub phys: PhysicalParams,
    pub channel: ChannelPoint,
    pub intensities: IntensityConfig,
    pub p_t: f64,
    pub n_pulses: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn frame(&self) -> FrameParams {
        self.phys.frame()
    }

    pub fn validate(&self) -> Result<()> {
        self.phys.validate()?;
        self.intensities.validate()?;
        if !(0.0..=1.0).contains(&self.p_t) {
            return Err(Error::Invalid { key: "p_t".into(), msg: format!("must lie in [0, 1], got {}", self.p_t) });
        }
        if self.n_pulses == 0 {
            return Err(Error::Invalid { key: "n_pulses".into(), msg: "a session needs at least one pulse".into() });
        }
        Ok(())
    }

    /// Analytic postselection probability of an intensity at this channel.
    pub fn analytic_p(&self, lambda: f64) -> Result<f64> {
        postselect_prob_closed(lambda, self.phys.eta_alice, self.phys.eta_bob, self.channel.eta_t, self.frame().p_d)
    }

    /// True single-pair fraction K_λ = λe^{−λ}γ₁/P_λ.
    pub fn true_k(&self, lambda: f64) -> Result<f64> {
        let p_d = self.frame().p_d;
        let gamma1 = gamma_n(1, self.phys.eta_alice, self.phys.eta_bob, self.channel.eta_t, p_d)?;
        Ok(single_pair_fraction(lambda, gamma1, self.analytic_p(lambda)?))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Cell {
    pub frames: u64,
    pub coincidences: u64,
}

/// Frame and coincidence counts per intensity and basis pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionTally {
    levels: Vec<(Level, u64)>,
    cells: Vec<[Cell; 3]>,
}

impl SessionTally {
    fn new(cfg: &IntensityConfig) -> Self {
        let levels: Vec<(Level, u64)> = cfg.levels().iter().map(|&(l, lambda, _)| (l, lambda.to_bits())).collect();
        let cells = vec![[Cell::default(); 3]; levels.len()];
        SessionTally { levels, cells }
    }

    fn slot(&self, level: Level) -> Option<usize> {
        self.levels.iter().position(|&(l, _)| l == level)
    }

    pub fn cell(&self, level: Level, pair: BasisPair) -> Cell {
        self.slot(level).map(|i| self.cells[i][pair.index()]).unwrap_or_default()
    }

    pub fn levels(&self) -> impl Iterator<Item = (Level, f64)> + '_ {
        self.levels.iter().map(|&(l, bits)| (l, f64::from_bits(bits)))
    }

    pub fn total_frames(&self) -> u64 {
        self.cells.iter().flatten().map(|c| c.frames).sum()
    }

    /// Empirical postselection probability from the 𝔻𝔻 frames of a level.
    pub fn p_hat(&self, level: Level) -> Result<f64> {
        let c = self.cell(level, BasisPair::DD);
        if c.frames == 0 {
            return Err(Error::EstimationImpossible(format!("no DD frames at intensity {}", level.label())));
        }
        Ok(c.coincidences as f64 / c.frames as f64)
    }

    /// Text dump, one `lambda basis_pair frames coincidences` line per cell.
    pub fn dump(&self) -> String {
        let mut out = String::from("# lambda basis_pair frames coincidences\n");
        for (i, (_, lambda)) in self.levels().enumerate() {
            for pair in BasisPair::ALL {
                let c = self.cells[i][pair.index()];
                writeln!(out, "{lambda} {} {} {}", pair.label(), c.frames, c.coincidences).expect("write to String");
            }
        }
        out
    }
}

/// Precomputed per-intensity sampling tables.
struct LevelSampler {
    /// Cumulative Poisson probabilities Pr[n ≤ k].
    cdf: Vec<f64>,
    lambda: f64,
}

impl LevelSampler {
    fn new(lambda: f64) -> Self {
        let mut cdf = Vec::new();
        let mut pmf = (-lambda).exp();
        let mut acc = 0.0;
        let mut n = 0u32;
        loop {
            acc += pmf;
            cdf.push(acc);
            n += 1;
            pmf *= lambda / f64::from(n);
            if pmf < 1e-18 && f64::from(n) > lambda || n > 10_000 {
                break;
            }
        }
        LevelSampler { cdf, lambda }
    }

    fn draw(&self, u: f64) -> u32 {
        if let Some(k) = self.cdf.iter().position(|&c| u < c) {
            return k as u32;
        }
        // beyond the table: continue the recurrence
        let mut n = self.cdf.len() as u32 - 1;
        let mut acc = *self.cdf.last().expect("nonempty");
        let mut pmf = crate::phys::poisson_pmf(n, self.lambda).unwrap_or(0.0);
        loop {
            n += 1;
            pmf *= self.lambda / f64::from(n);
            acc += pmf;
            if u < acc || pmf == 0.0 {
                return n;
            }
        }
    }
}

fn click_prob(n: u32, eff: f64, p_d: f64) -> f64 {
    1.0 - (1.0 - eff).powi(n as i32) * (1.0 - p_d)
}

/// Runs one session of `n_pulses` frames.
pub fn simulate_session(cfg: &SimConfig) -> Result<SessionTally> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p_d = cfg.frame().p_d;
    let eta_a = cfg.phys.eta_alice;
    let eta_b = cfg.phys.eta_bob * cfg.channel.eta_t;
    let levels = cfg.intensities.levels();
    let samplers: Vec<LevelSampler> = levels.iter().map(|&(_, l, _)| LevelSampler::new(l)).collect();
    let mut level_cdf = Vec::with_capacity(levels.len());
    let mut acc = 0.0;
    for &(_, _, p) in &levels {
        acc += p;
        level_cdf.push(acc);
    }
    let max_n = samplers.iter().map(|s| s.cdf.len()).max().unwrap_or(1) as u32 + 1;
    let clicks: Vec<(f64, f64)> = (0..=max_n).map(|n| (click_prob(n, eta_a, p_d), click_prob(n, eta_b, p_d))).collect();

    let mut tally = SessionTally::new(&cfg.intensities);
    for _ in 0..cfg.n_pulses {
        let u: f64 = rng.random();
        let li = level_cdf.iter().position(|&c| u < c).unwrap_or(levels.len() - 1);
        let n = samplers[li].draw(rng.random());
        let alice_t = rng.random::<f64>() < cfg.p_t;
        let bob_t = rng.random::<f64>() < cfg.p_t;
        let (pa, pb) = clicks
            .get(n as usize)
            .copied()
            .unwrap_or_else(|| (click_prob(n, eta_a, p_d), click_prob(n, eta_b, p_d)));
        let alice = rng.random::<f64>() < pa;
        let bob = rng.random::<f64>() < pb;
        let pair = match (alice_t, bob_t) {
            (true, true) => BasisPair::TT,
            (false, false) => BasisPair::DD,
            _ => BasisPair::Mismatched,
        };
        let cell = &mut tally.cells[li][pair.index()];
        cell.frames += 1;
        cell.coincidences += u64::from(alice && bob);
    }
    Ok(tally)
}

/// Packages a tally for the decoy analysis. P̂_λ comes from the 𝔻𝔻 cells
/// (with P± = P̂); the multipliers are synthesized from the true K_λ.
pub fn empirical_stats(cfg: &SimConfig, tally: &SessionTally, eve_zeta: f64, delta_phi: f64) -> Result<MeasuredStats> {
    let stats_for = |level: Level, lambda: f64| -> Result<IntensityStats> {
        let p = tally.p_hat(level)?;
        let phi = phi_multiplier_forward(cfg.true_k(lambda)?, eve_zeta, delta_phi);
        Ok(IntensityStats::exact(p, phi, phi))
    };
    let ic = &cfg.intensities;
    let decoy2 = match ic.mode {
        crate::decoy::DecoyMode::TwoDecoy => Some(stats_for(Level::Decoy2, ic.v2)?),
        crate::decoy::DecoyMode::SingleDecoy => None,
    };
    Ok(MeasuredStats { signal: stats_for(Level::Signal, ic.mu)?, decoy1: stats_for(Level::Decoy1, ic.v1)?, decoy2 })
}

/// Fluctuation interval around P̂_λ for every level, sized by the actual
/// number of 𝔻𝔻 frames.
pub fn empirical_intervals(tally: &SessionTally, eps_pe: f64, method: Method) -> Result<Vec<(Level, FluctuationInterval)>> {
    tally
        .levels()
        .map(|(level, _)| {
            let frames = tally.cell(level, BasisPair::DD).frames as f64;
            Ok((level, interval_from_frames(tally.p_hat(level)?, frames, eps_pe, method)?))
        })
        .collect()
}

/// Result of a coverage experiment for one interval method.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub method: Method,
    pub trials: usize,
    /// Trials in which every level's interval contained the analytic P_λ.
    pub covered: usize,
    /// Trials where the Chernoff preconditions failed (counted as not covered).
    pub inapplicable: usize,
    pub fraction: f64,
}

/// Whether all intervals of a trial cover the truth; the inner `Err` carries
/// the diagnostics of a level where Chernoff could not be applied.
fn trial_covers(tally: &SessionTally, truth: &[(Level, f64)], eps_pe: f64, method: Method) -> Result<std::result::Result<bool, ChernoffDiagnostics>> {
    for &(level, p_true) in truth {
        let iv = if method == Method::Exact {
            // the asymptotic interval is centred on the model value itself
            FluctuationInterval::exact(p_true)
        } else {
            let frames = tally.cell(level, BasisPair::DD).frames as f64;
            match interval_from_frames(tally.p_hat(level)?, frames, eps_pe, method) {
                Ok(iv) => iv,
                Err(Error::ChernoffInapplicable(d)) => return Ok(Err(d)),
                Err(e) => return Err(e),
            }
        };
        if !iv.contains(p_true) {
            return Ok(Ok(false));
        }
    }
    Ok(Ok(true))
}

/// Runs `trials` sessions (seed ⊕ trial index) and reports, per method, how
/// often the intervals contain the analytic P_λ. Sessions are shared between
/// methods.
pub fn coverage_experiments(cfg: &SimConfig, eps_pe: f64, methods: &[Method], trials: usize) -> Result<Vec<CoverageReport>> {
    if trials < 100 {
        return Err(Error::Invalid { key: "trials".into(), msg: format!("need at least 100 trials, got {trials}") });
    }
    cfg.validate()?;
    let truth: Vec<(Level, f64)> = cfg
        .intensities
        .levels()
        .iter()
        .map(|&(l, lambda, _)| Ok((l, cfg.analytic_p(lambda)?)))
        .collect::<Result<_>>()?;
    let outcomes: Vec<Vec<std::result::Result<bool, ChernoffDiagnostics>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial = SimConfig { seed: cfg.seed ^ t as u64, ..cfg.clone() };
            let tally = simulate_session(&trial)?;
            methods.iter().map(|&m| trial_covers(&tally, &truth, eps_pe, m)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let covered = outcomes.iter().filter(|o| o[i] == Ok(true)).count();
            let inapplicable = outcomes.iter().filter(|o| o[i].is_err()).count();
            CoverageReport { method, trials, covered, inapplicable, fraction: covered as f64 / trials as f64 }
        })
        .collect())
}

pub fn coverage_experiment(cfg: &SimConfig, eps_pe: f64, method: Method, trials: usize) -> Result<CoverageReport> {
    Ok(coverage_experiments(cfg, eps_pe, &[method], trials)?.remove(0))
}
