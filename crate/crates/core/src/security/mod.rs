//! Models that supply I(A;B) and Eve's Holevo bound at a given excess-noise
//! point. Two are provided: a pinned lookup [`table`] and the analytic
//! [`gaussian`] covariance-matrix model the table is generated from.

pub mod gaussian;
pub mod table;

use std::sync::{Arc, OnceLock};

pub use gaussian::GaussianModel;
pub use table::SecurityTable;

use crate::error::Result;
use crate::keyrate::SecurityQuantities;

/// Where a security model is queried.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityPoint {
    pub schmidt_d: u32,
    /// Coherence time (s).
    pub delta_coh: f64,
    /// Correlation time (s).
    pub delta_cor: f64,
    pub zeta_t: f64,
    pub zeta_w: f64,
}

pub trait SecurityModel: Send + Sync {
    fn evaluate(&self, point: &SecurityPoint) -> Result<SecurityQuantities>;
}

const BUILTIN_TABLE: &str = include_str!("../../data/security_table.txt");

/// The table shipped with the crate, parsed once.
pub fn builtin_table() -> Arc<SecurityTable> {
    static TABLE: OnceLock<Arc<SecurityTable>> = OnceLock::new();
    TABLE
        .get_or_init(|| Arc::new(SecurityTable::parse(BUILTIN_TABLE).expect("built-in security table is valid")))
        .clone()
}

/// The text of the shipped table.
pub fn builtin_table_text() -> &'static str {
    BUILTIN_TABLE
}

/// Schmidt numbers covered by the shipped table.
pub const TABLE_DIMENSIONS: [u32; 2] = [8, 32];

/// ζ grid of the shipped table: 0, the 1-2-5 series from 10⁻³ to 10³, and
/// 0.08.
pub fn table_zeta_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    for exp in -3..=3 {
        for m in [1.0, 2.0, 5.0] {
            let z: f64 = format!("{m}e{exp}").parse().expect("literal");
            if z <= 1e3 {
                grid.push(z);
            }
        }
    }
    grid.push(0.08);
    grid.sort_by(f64::total_cmp);
    grid
}

/// Renders the shipped table from the Gaussian model, with δ_cor = d·δ_coh.
pub fn generate_table_text() -> Result<String> {
    use std::fmt::Write;
    let delta_coh = crate::phys::DEFAULT_COHERENCE_TIME;
    let grid = table_zeta_grid();
    let mut out = String::from(
        "# Security quantities from the Gaussian time-frequency model, delta_cor = d * delta_coh.\n\
         # Regenerate with: cargo run -p hdqkd-core --example gen_security_table\n\
         # d zeta_t zeta_w i_ab phi_ub\n",
    );
    for d in TABLE_DIMENSIONS {
        for &zt in &grid {
            for &zw in &grid {
                let q = GaussianModel.quantities(&SecurityPoint {
                    schmidt_d: d,
                    delta_coh,
                    delta_cor: f64::from(d) * delta_coh,
                    zeta_t: zt,
                    zeta_w: zw,
                })?;
                writeln!(out, "{d} {zt} {zw} {} {}", q.i_ab, q.phi_ub).expect("write to String");
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_table_is_current() {
        assert_eq!(builtin_table_text(), generate_table_text().unwrap());
    }

    #[test]
    fn shipped_table_hits_grid_verbatim() {
        let t = builtin_table();
        let p = SecurityPoint { schmidt_d: 8, delta_coh: 30e-12, delta_cor: 8.0 * 30e-12, zeta_t: 0.08, zeta_w: 0.08 };
        let direct = GaussianModel.quantities(&p).unwrap();
        let looked = t.evaluate(&p).unwrap();
        assert_eq!(direct, looked);
        assert_eq!(table_zeta_grid().len(), 21);
    }
}
