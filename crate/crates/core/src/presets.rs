//! Named scenarios matching the published evaluation.
//!
//! All presets use the standard fiber system (0.2 dB/km, η = 0.93,
//! 1000 dark counts/s, δ_coh = 30 ps, δ_Δ = 10 ps), p_T = 0.5, β = 0.9,
//! every ε at 10⁻¹⁰, v₁ = μ/2, v₂ = v₁/10 (two-decoy) or v = μ/2
//! (single-decoy), and selection ratios 7:2:1 or 4:1.

use crate::decoy::DecoyMode;
use crate::finite::{Method, PulseCount};
use crate::scenario::ScenarioSpec;

/// Pulse counts the figures are drawn for.
pub const N_GRID: [PulseCount; 7] = [
    PulseCount::Finite(1e8),
    PulseCount::Finite(1e9),
    PulseCount::Finite(1e10),
    PulseCount::Finite(1e11),
    PulseCount::Finite(1e12),
    PulseCount::Finite(1e13),
    PulseCount::Infinite,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub d: u32,
    pub mode: DecoyMode,
    pub mu: f64,
    pub method: Method,
    pub n_pulses: PulseCount,
}

use DecoyMode::{SingleDecoy as Single, TwoDecoy as Two};
use Method::{Chernoff, Hoeffding};
use PulseCount::{Finite, Infinite};

const fn p(name: &'static str, description: &'static str, d: u32, mode: DecoyMode, mu: f64, method: Method, n: PulseCount) -> Preset {
    Preset { name, description, d, mode, mu, method, n_pulses: n }
}

pub const PRESETS: [Preset; 17] = [
    p("fig2a", "two-decoy, d=8, mu=0.01, Hoeffding", 8, Two, 0.01, Hoeffding, Infinite),
    p("fig2b", "two-decoy, d=8, mu=0.10, Hoeffding", 8, Two, 0.10, Hoeffding, Infinite),
    p("fig2c", "two-decoy, d=8, mu=0.25, Hoeffding", 8, Two, 0.25, Hoeffding, Infinite),
    p("fig2d", "single-decoy, d=8, mu=0.01, Hoeffding", 8, Single, 0.01, Hoeffding, Infinite),
    p("fig2e", "single-decoy, d=8, mu=0.10, Hoeffding", 8, Single, 0.10, Hoeffding, Infinite),
    p("fig2f", "single-decoy, d=8, mu=0.25, Hoeffding", 8, Single, 0.25, Hoeffding, Infinite),
    p("fig3a", "two-decoy, d=8, mu=0.01, Chernoff", 8, Two, 0.01, Chernoff, Infinite),
    p("fig3b", "two-decoy, d=8, mu=0.10, Chernoff", 8, Two, 0.10, Chernoff, Infinite),
    p("fig3c", "two-decoy, d=8, mu=0.25, Chernoff", 8, Two, 0.25, Chernoff, Infinite),
    p("fig3d", "single-decoy, d=8, mu=0.01, Chernoff", 8, Single, 0.01, Chernoff, Infinite),
    p("fig3e", "single-decoy, d=8, mu=0.10, Chernoff", 8, Single, 0.10, Chernoff, Infinite),
    p("fig3f", "single-decoy, d=8, mu=0.25, Chernoff", 8, Single, 0.25, Chernoff, Infinite),
    p("fig4a", "single-decoy, d=8, mu=0.10, N=1e12, Hoeffding vs Chernoff", 8, Single, 0.10, Chernoff, Finite(1e12)),
    p("fig4b", "single-decoy, d=8, mu=0.25, N=1e11, Hoeffding vs Chernoff", 8, Single, 0.25, Chernoff, Finite(1e11)),
    p("fig5", "single-decoy, d=32, mu=0.01, Chernoff", 32, Single, 0.01, Chernoff, Infinite),
    p("fig6a", "two-decoy, d=32, mu=0.10, Chernoff", 32, Two, 0.10, Chernoff, Infinite),
    p("fig6b", "two-decoy, d=32, mu=0.25, Chernoff", 32, Two, 0.25, Chernoff, Infinite),
];

impl Preset {
    pub fn spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            name: Some(self.name.to_string()),
            schmidt_d: Some(self.d),
            mode: Some(self.mode),
            mu: Some(self.mu),
            ratios: Some(match self.mode {
                Two => vec![7.0, 2.0, 1.0],
                Single => vec![4.0, 1.0],
            }),
            p_t: Some(0.5),
            beta: Some(0.9),
            method: Some(self.method),
            n_pulses: Some(self.n_pulses),
            eps_pe: Some(1e-10),
            eps_ec: Some(1e-10),
            eps_bar: Some(1e-10),
            eps_pa: Some(1e-10),
            ..Default::default()
        }
    }
}

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name.eq_ignore_ascii_case(name.trim()))
}
