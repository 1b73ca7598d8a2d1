//! CSV and plot-data rendering of sweep results.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::ResultRow;

pub const CSV_HEADER: &str =
    "length_km,n_pulses,method,delta_i_bpc,r_hd_bpc,kmu_lb,zeta_t_ub,zeta_w_ub,ec_term,pa_term,smooth_term,positive";

/// 15 significant digits in scientific notation; infinities as `inf`/`-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.14e}")
    }
}

/// Rows must be grouped into blocks of equal (n_pulses, method), each in
/// strictly ascending length.
pub fn check_order(rows: &[ResultRow]) -> Result<()> {
    for (i, w) in rows.windows(2).enumerate() {
        let same_block = w[0].n_pulses == w[1].n_pulses && w[0].method == w[1].method;
        if same_block && !(w[1].length_km > w[0].length_km) {
            return Err(Error::Invalid {
                key: "rows".into(),
                msg: format!(
                    "row {} (L = {} km) does not follow row {} (L = {} km) in ascending order",
                    i + 2,
                    w[1].length_km,
                    i + 1,
                    w[0].length_km
                ),
            });
        }
    }
    Ok(())
}

pub fn render_csv(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Invalid { key: "rows".into(), msg: "nothing to write".into() });
    }
    check_order(rows)?;
    let mut out = String::with_capacity(64 + rows.len() * 240);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let t = &r.terms;
        let fields = [
            fmt_num(r.length_km),
            r.n_pulses.to_string(),
            r.method.to_string(),
            fmt_num(r.delta_i),
            fmt_num(r.r_hd),
            fmt_num(r.kmu_lb),
            fmt_num(r.zeta_t_ub),
            fmt_num(r.zeta_w_ub),
            fmt_num(t.ec_term),
            fmt_num(t.pa_term),
            fmt_num(t.smooth_term),
            r.positive.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Two columns `length delta_i` per block, blocks separated by a blank line;
/// non-finite values are written as `NaN` so plotting tools skip them.
pub fn render_plotdata(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Invalid { key: "rows".into(), msg: "nothing to write".into() });
    }
    check_order(rows)?;
    let mut out = String::new();
    let mut current = None;
    for r in rows {
        let key = (r.n_pulses, r.method);
        if current != Some(key) {
            if current.is_some() {
                out.push('\n');
            }
            writeln!(out, "# n_pulses={} method={}", r.n_pulses, r.method).expect("write to String");
            current = Some(key);
        }
        let y = if r.delta_i.is_finite() { format!("{:.14e}", r.delta_i) } else { "NaN".into() };
        writeln!(out, "{} {y}", fmt_num(r.length_km)).expect("write to String");
    }
    Ok(out)
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::{Method, PulseCount};
    use crate::keyrate::KeyTerms;

    fn row(l: f64, n: PulseCount) -> ResultRow {
        ResultRow {
            length_km: l,
            n_pulses: n,
            method: Method::Hoeffding,
            delta_i: 1.25,
            r_hd: 1.5,
            terms: KeyTerms::default(),
            kmu_lb: 0.9,
            zeta_t_ub: 0.1,
            zeta_w_ub: 0.1,
            positive: true,
            no_key: None,
        }
    }

    #[test]
    fn one_row() {
        let csv = render_csv(&[row(10.0, PulseCount::Finite(1e12))]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("1.00000000000000e1,1e12,hoeffding,1.25000000000000e0,"));
        assert!(lines[1].ends_with(",true"));
    }

    #[test]
    fn deterministic_and_ordered() {
        let rows = vec![row(0.0, PulseCount::Infinite), row(5.0, PulseCount::Infinite), row(0.0, PulseCount::Finite(1e9))];
        assert_eq!(render_csv(&rows).unwrap(), render_csv(&rows).unwrap());
        let bad = vec![row(5.0, PulseCount::Infinite), row(0.0, PulseCount::Infinite)];
        assert!(render_csv(&bad).is_err());
        assert!(render_csv(&[]).is_err());
        let plot = render_plotdata(&rows).unwrap();
        assert_eq!(plot.matches("# n_pulses").count(), 2);
        assert!(plot.contains("\n\n# n_pulses=1e9"));
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_num(0.1), "1.00000000000000e-1");
    }
}
