//! Tabulated security quantities with bilinear interpolation in (ζ_t, ζ_ω).
//!
//! File format: one entry per line, `d zeta_t zeta_w i_ab phi_ub`,
//! whitespace separated, `#` starting a comment. For each d the entries must
//! form a full tensor grid.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::keyrate::SecurityQuantities;

use super::{SecurityModel, SecurityPoint};

#[derive(Debug, Clone, PartialEq)]
struct Grid {
    zeta_t: Vec<f64>,
    zeta_w: Vec<f64>,
    /// (i_ab, phi_ub), row-major over (zeta_t, zeta_w).
    values: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecurityTable {
    grids: BTreeMap<u32, Grid>,
}

fn sorted_unique(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = xs.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Bracketing index pair and weight of the upper neighbour. Exact grid hits
/// use a single index with zero weight.
fn bracket(grid: &[f64], x: f64, name: &str, d: u32) -> Result<(usize, usize, f64)> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(x >= lo) {
        return Err(Error::Table(format!("{name} = {x} is below the table minimum {lo} for d = {d}")));
    }
    if !(x <= hi) {
        return Err(Error::Table(format!("{name} = {x} is above the table maximum {hi} for d = {d}")));
    }
    let i = grid.partition_point(|&g| g < x);
    if grid[i] == x {
        return Ok((i, i, 0.0));
    }
    let (x0, x1) = (grid[i - 1], grid[i]);
    Ok((i - 1, i, (x - x0) / (x1 - x0)))
}

impl SecurityTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw: BTreeMap<u32, Vec<(f64, f64, f64, f64)>> = BTreeMap::new();
        let mut seen: HashMap<(u32, u64, u64), usize> = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(Error::Parse { line: lineno, msg: format!("expected 5 fields, found {}", fields.len()) });
            }
            let d: u32 = fields[0]
                .parse()
                .map_err(|_| Error::Parse { line: lineno, msg: format!("bad dimension {:?}", fields[0]) })?;
            let mut nums = [0.0; 4];
            for (slot, (name, text)) in nums.iter_mut().zip(["zeta_t", "zeta_w", "i_ab", "phi_ub"].iter().zip(&fields[1..])) {
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Parse { line: lineno, msg: format!("bad {name} {text:?}") })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Parse { line: lineno, msg: format!("{name} must be finite and >= 0, got {v}") });
                }
                *slot = v;
            }
            let [zt, zw, i_ab, phi] = nums;
            if let Some(prev) = seen.insert((d, zt.to_bits(), zw.to_bits()), lineno) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("duplicate grid point (d = {d}, zeta_t = {zt}, zeta_w = {zw}), first on line {prev}"),
                });
            }
            raw.entry(d).or_default().push((zt, zw, i_ab, phi));
        }
        if raw.is_empty() {
            return Err(Error::Table("no entries".into()));
        }
        let mut grids = BTreeMap::new();
        for (d, entries) in raw {
            let zeta_t = sorted_unique(entries.iter().map(|e| e.0));
            let zeta_w = sorted_unique(entries.iter().map(|e| e.1));
            if entries.len() != zeta_t.len() * zeta_w.len() {
                return Err(Error::Table(format!(
                    "d = {d}: {} entries do not form a full {}x{} grid",
                    entries.len(),
                    zeta_t.len(),
                    zeta_w.len()
                )));
            }
            let mut values = vec![(0.0, 0.0); entries.len()];
            for (zt, zw, i_ab, phi) in entries {
                let i = zeta_t.binary_search_by(|g| g.total_cmp(&zt)).expect("grid value present");
                let j = zeta_w.binary_search_by(|g| g.total_cmp(&zw)).expect("grid value present");
                values[i * zeta_w.len() + j] = (i_ab, phi);
            }
            grids.insert(d, Grid { zeta_t, zeta_w, values });
        }
        Ok(SecurityTable { grids })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Table(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn dimensions(&self) -> impl Iterator<Item = u32> + '_ {
        self.grids.keys().copied()
    }

    /// The (ζ_t, ζ_ω) grid for dimension d.
    pub fn grid(&self, d: u32) -> Option<(&[f64], &[f64])> {
        self.grids.get(&d).map(|g| (g.zeta_t.as_slice(), g.zeta_w.as_slice()))
    }

    /// Bilinear interpolation of (i_ab, phi_ub); no extrapolation.
    pub fn lookup(&self, d: u32, zeta_t: f64, zeta_w: f64) -> Result<(f64, f64)> {
        let g = self
            .grids
            .get(&d)
            .ok_or_else(|| Error::Table(format!("d = {d} is not tabulated")))?;
        let (i0, i1, wt) = bracket(&g.zeta_t, zeta_t, "zeta_t", d)?;
        let (j0, j1, ww) = bracket(&g.zeta_w, zeta_w, "zeta_w", d)?;
        let at = |i: usize, j: usize| g.values[i * g.zeta_w.len() + j];
        if wt == 0.0 && ww == 0.0 {
            return Ok(at(i0, j0));
        }
        let mix = |a: (f64, f64), b: (f64, f64), w: f64| {
            if w == 0.0 {
                a
            } else {
                (a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1))
            }
        };
        let lo = mix(at(i0, j0), at(i0, j1), ww);
        let hi = mix(at(i1, j0), at(i1, j1), ww);
        Ok(mix(lo, hi, wt))
    }
}

impl SecurityModel for SecurityTable {
    fn evaluate(&self, p: &SecurityPoint) -> Result<SecurityQuantities> {
        let (i_ab, phi_ub) = self.lookup(p.schmidt_d, p.zeta_t, p.zeta_w)?;
        Ok(SecurityQuantities { i_ab, phi_ub, i_r: f64::from(p.schmidt_d).log2() })
    }
}
