//! Distance sweeps, maximum-distance search and a small decoy-intensity
//! optimiser.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::scenario::{run_point, ResultRow, Scenario};

/// Longest fiber considered by [`max_distance`].
pub const MAX_SEARCH_KM: f64 = 2000.0;
/// Resolution of the maximum-distance search.
pub const DISTANCE_TOLERANCE_KM: f64 = 0.1;

/// The evenly spaced lengths l_min, l_min + step, … ≤ l_max.
pub fn length_grid(l_min: f64, l_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(l_min.is_finite() && l_max.is_finite() && l_min >= 0.0) {
        return domain(format!("lengths must be finite and >= 0 (got {l_min}..{l_max})"));
    }
    if !(l_min <= l_max) {
        return domain(format!("need l_min <= l_max (got {l_min} > {l_max})"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return domain(format!("step must be > 0, got {step}"));
    }
    let count = ((l_max - l_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| l_min + i as f64 * step).collect())
}

/// Evaluates the scenario at each length. Points run in parallel on the
/// current rayon pool; rows come back in input order.
pub fn sweep_lengths(s: &Scenario, lengths: &[f64]) -> Result<Vec<ResultRow>> {
    lengths.par_iter().map(|&l| run_point(s, l)).collect()
}

pub fn sweep_distance(s: &Scenario, l_min: f64, l_max: f64, step: f64) -> Result<Vec<ResultRow>> {
    sweep_lengths(s, &length_grid(l_min, l_max, step)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    /// ΔI was zero or negative already at L = 0.
    NoKeyAtZero,
    Bisection,
    /// A non-monotone ΔI was detected and the fine grid scan was used.
    GridScan,
    /// ΔI was still positive at [`MAX_SEARCH_KM`].
    Capped,
}

impl SearchMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SearchMethod::NoKeyAtZero => "no-key-at-zero",
            SearchMethod::Bisection => "bisection",
            SearchMethod::GridScan => "grid-scan",
            SearchMethod::Capped => "capped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDistance {
    pub km: f64,
    pub method: SearchMethod,
}

/// Largest fiber length with ΔI > 0, to [`DISTANCE_TOLERANCE_KM`].
///
/// Assumes ΔI is nonincreasing in L. A coarse scan checks this first; if it
/// fails, the answer comes from a scan on the tolerance grid instead.
pub fn max_distance(s: &Scenario) -> Result<MaxDistance> {
    let f = |l: f64| run_point(s, l).map(|r| r.delta_i);
    if !(f(0.0)? > 0.0) {
        return Ok(MaxDistance { km: 0.0, method: SearchMethod::NoKeyAtZero });
    }
    let mut hi = 50.0;
    while f(hi)? > 0.0 {
        if hi >= MAX_SEARCH_KM {
            return Ok(MaxDistance { km: MAX_SEARCH_KM, method: SearchMethod::Capped });
        }
        hi = (hi * 2.0).min(MAX_SEARCH_KM);
    }
    let coarse: Vec<f64> = (0..=40).map(|i| hi * f64::from(i) / 40.0).collect();
    let values = coarse.iter().map(|&l| f(l)).collect::<Result<Vec<_>>>()?;
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    if !monotone {
        let grid = length_grid(0.0, hi, DISTANCE_TOLERANCE_KM)?;
        let rows = sweep_lengths(s, &grid)?;
        let last = rows.iter().take_while(|r| r.delta_i > 0.0).last().map_or(0.0, |r| r.length_km);
        return Ok(MaxDistance { km: last, method: SearchMethod::GridScan });
    }
    let k = values.iter().position(|&v| !(v > 0.0)).expect("ΔI(hi) <= 0");
    let (mut lo, mut hi) = (coarse[k - 1], coarse[k]);
    while hi - lo > DISTANCE_TOLERANCE_KM {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MaxDistance { km: lo, method: SearchMethod::Bisection })
}

/// Best (v₁, v₂) on a grid for a two-decoy scenario at one length, by ΔI.
/// Candidates violating the intensity constraints are skipped.
pub fn optimise_decoys(s: &Scenario, length_km: f64, v1_grid: &[f64], v2_grid: &[f64]) -> Result<Option<(f64, f64, ResultRow)>> {
    let candidates: Vec<(f64, f64)> = v1_grid
        .iter()
        .flat_map(|&a| v2_grid.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| a > b && b >= 0.0 && s.intensities.mu > a + b)
        .collect();
    let rows = candidates
        .par_iter()
        .map(|&(v1, v2)| {
            let mut t = s.clone();
            t.intensities.v1 = v1;
            t.intensities.v2 = v2;
            run_point(&t, length_km).map(|r| (v1, v2, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().fold(None, |best, cand| match best {
        Some(b) if b.2.delta_i >= cand.2.delta_i => Some(b),
        _ => Some(cand),
    }))
}
