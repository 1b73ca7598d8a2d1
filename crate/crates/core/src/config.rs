//! Scenario configuration files.
//!
//! ```text
//! preset = fig2a          # optional, must precede any section
//!
//! [physical]
//! d = 8
//! alpha = 0.2             # dB/km
//!
//! [protocol]
//! mu = 0.1
//! ratios = 7:2:1
//! method = chernoff
//! chernoff_inapplicable = vacuous   # or error, hoeffding, as-published
//! n_pulses = 1e11
//!
//! [epsilons]
//! eps_pe = 1e-10
//!
//! [security_model]
//! kind = table
//! table = my_table.txt    # relative to the config file
//! ```
//!
//! Times are in seconds. Unknown sections and keys are rejected.

use std::collections::HashSet;
use std::path::Path;

use crate::decoy::DecoyMode;
use crate::error::{Error, Result};
use crate::finite::{Method, PulseCount};
use crate::presets;
use crate::scenario::{parse_ratios, Scenario, ScenarioSpec, SecurityKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Section {
    Top,
    Physical,
    Protocol,
    Epsilons,
    SecurityModel,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::Top => "top level",
            Section::Physical => "[physical]",
            Section::Protocol => "[protocol]",
            Section::Epsilons => "[epsilons]",
            Section::SecurityModel => "[security_model]",
        }
    }
}

/// A configuration document: the fields it sets plus an optional preset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDoc {
    pub preset: Option<String>,
    pub spec: ScenarioSpec,
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::Parse { line, msg: format!("`{key}`: not a number: {v:?}") })?;
    if !x.is_finite() {
        return Err(Error::Parse { line, msg: format!("`{key}` must be finite") });
    }
    Ok(x)
}

/// Parses a document into the fields it sets. Relative table paths are
/// resolved against `base_dir`.
pub fn parse_document(text: &str, base_dir: Option<&Path>) -> Result<ConfigDoc> {
    let mut doc = ConfigDoc::default();
    let mut section = Section::Top;
    let mut seen: HashSet<(Section, String)> = HashSet::new();
    let spec = &mut doc.spec;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line, msg: format!("malformed section header {body:?}") })?;
            section = match name.trim() {
                "physical" => Section::Physical,
                "protocol" => Section::Protocol,
                "epsilons" => Section::Epsilons,
                "security_model" => Section::SecurityModel,
                other => return Err(Error::Parse { line, msg: format!("unknown section [{other}]") }),
            };
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got {body:?}") })?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(Error::Parse { line, msg: format!("`{key}` has no value") });
        }
        if !seen.insert((section, key.to_string())) {
            return Err(Error::Parse { line, msg: format!("`{key}` given twice in {}", section.name()) });
        }
        let num = |k: &str| parse_f64(line, k, value);
        let invalid = |e: Error| match e {
            Error::Invalid { key, msg } => Error::Parse { line, msg: format!("`{key}`: {msg}") },
            other => other,
        };
        match (section, key) {
            (Section::Top, "preset") => {
                if presets::find(value).is_none() {
                    return Err(Error::Parse { line, msg: format!("unknown preset {value:?}") });
                }
                doc.preset = Some(value.to_string());
            }
            (Section::Physical, "alpha") => spec.alpha = Some(num(key)?),
            (Section::Physical, "eta") => {
                let e = num(key)?;
                spec.eta_alice = Some(e);
                spec.eta_bob = Some(e);
            }
            (Section::Physical, "eta_alice") => spec.eta_alice = Some(num(key)?),
            (Section::Physical, "eta_bob") => spec.eta_bob = Some(num(key)?),
            (Section::Physical, "r_dc") => spec.r_dc = Some(num(key)?),
            (Section::Physical, "delta_j") => spec.delta_j = Some(num(key)?),
            (Section::Physical, "delta_coh") => spec.delta_coh = Some(num(key)?),
            (Section::Physical, "delta_delta") => spec.delta_delta = Some(num(key)?),
            (Section::Physical, "d") => {
                spec.schmidt_d =
                    Some(value.parse().map_err(|_| Error::Parse { line, msg: format!("`d`: not an integer: {value:?}") })?)
            }
            (Section::Protocol, "mode") => {
                spec.mode = Some(match value {
                    "two-decoy" | "two_decoy" => DecoyMode::TwoDecoy,
                    "single-decoy" | "single_decoy" => DecoyMode::SingleDecoy,
                    other => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("`mode`: expected two-decoy or single-decoy, got {other:?}"),
                        })
                    }
                })
            }
            (Section::Protocol, "mu") => spec.mu = Some(num(key)?),
            (Section::Protocol, "v1" | "v") => {
                if spec.v1.is_some() {
                    return Err(Error::Parse { line, msg: "give only one of `v` and `v1`".into() });
                }
                spec.v1 = Some(num(key)?)
            }
            (Section::Protocol, "v2") => spec.v2 = Some(num(key)?),
            (Section::Protocol, "ratios") => spec.ratios = Some(parse_ratios(value).map_err(invalid)?),
            (Section::Protocol, "p_mu") => spec.p_mu = Some(num(key)?),
            (Section::Protocol, "p_v1" | "p_v") => spec.p_v1 = Some(num(key)?),
            (Section::Protocol, "p_t") => spec.p_t = Some(num(key)?),
            (Section::Protocol, "beta") => spec.beta = Some(num(key)?),
            (Section::Protocol, "method") => spec.method = Some(value.parse::<Method>().map_err(invalid)?),
            (Section::Protocol, "n_pulses") => spec.n_pulses = Some(value.parse::<PulseCount>().map_err(invalid)?),
            (Section::Protocol, "delta_phi") => spec.delta_phi = Some(num(key)?),
            (Section::Protocol, "chernoff_inapplicable") => spec.chernoff_policy = Some(value.parse().map_err(invalid)?),
            (Section::Epsilons, "eps_pe") => spec.eps_pe = Some(num(key)?),
            (Section::Epsilons, "eps_ec") => spec.eps_ec = Some(num(key)?),
            (Section::Epsilons, "eps_bar") => spec.eps_bar = Some(num(key)?),
            (Section::Epsilons, "eps_pa") => spec.eps_pa = Some(num(key)?),
            (Section::SecurityModel, "kind") => {
                spec.security_kind = Some(match value {
                    "table" => SecurityKind::Table,
                    "gaussian" => SecurityKind::Gaussian,
                    other => {
                        return Err(Error::Parse { line, msg: format!("`kind`: expected table or gaussian, got {other:?}") })
                    }
                })
            }
            (Section::SecurityModel, "table") => {
                let p = Path::new(value);
                spec.table_path = Some(match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.to_path_buf(),
                });
            }
            (s, k) => return Err(Error::Parse { line, msg: format!("unknown key `{k}` in {}", s.name()) }),
        }
    }
    Ok(doc)
}

/// Resolves a document, optionally on top of a preset, into a validated
/// scenario. A preset named both here and in the document must agree.
pub fn resolve(doc: ConfigDoc, preset: Option<&str>) -> Result<Scenario> {
    let name = match (preset, doc.preset.as_deref()) {
        (Some(a), Some(b)) if !a.eq_ignore_ascii_case(b) => {
            return Err(Error::Invalid {
                key: "preset".into(),
                msg: format!("command line asks for {a:?} but the config file names {b:?}"),
            })
        }
        (Some(a), _) => Some(a),
        (None, b) => b,
    };
    let base = match name {
        Some(n) => presets::find(n)
            .ok_or_else(|| Error::Invalid { key: "preset".into(), msg: format!("unknown preset {n:?}") })?
            .spec(),
        None => ScenarioSpec::default(),
    };
    let mut overlay = doc.spec;
    // explicit probabilities replace a preset's ratios
    let mut base = base;
    if overlay.p_mu.is_some() || overlay.p_v1.is_some() {
        base.ratios = None;
    }
    if overlay.ratios.is_some() {
        base.p_mu = None;
        base.p_v1 = None;
    }
    if overlay.name.is_none() {
        overlay.name = base.name.clone();
    }
    base.merge(overlay).build()
}

pub fn parse_config(text: &str, preset: Option<&str>) -> Result<Scenario> {
    resolve(parse_document(text, None)?, preset)
}

pub fn load_config(path: &Path, preset: Option<&str>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid { key: "config".into(), msg: format!("cannot read {}: {e}", path.display()) })?;
    resolve(parse_document(&text, path.parent())?, preset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SecurityModelSpec;

    #[test]
    fn preset_only() {
        let s = parse_config("", Some("fig2a")).unwrap();
        assert_eq!(s.phys.schmidt_d, 8);
        assert_eq!((s.intensities.mu, s.intensities.v1, s.intensities.v2), (0.01, 0.005, 0.0005));
        assert_eq!(s.intensities.mode, DecoyMode::TwoDecoy);
        assert_eq!(s.method, Method::Hoeffding);
        let s = parse_config("preset = fig3d\n", None).unwrap();
        assert_eq!(s.intensities.mode, DecoyMode::SingleDecoy);
    }

    #[test]
    fn intensity_constraint_is_enforced() {
        let doc = "[physical]\nd = 8\n[protocol]\nmu = 0.04\nv1 = 0.03\nv2 = 0.02\n";
        let e = parse_config(doc, None).unwrap_err();
        assert!(matches!(e, Error::Invalid { ref key, .. } if key == "mu"), "{e}");
    }

    #[test]
    fn ratios_and_overrides() {
        let doc = "[physical]\nd = 8\n[protocol]\nmu = 0.1\np_t = 0.5\nratios = 7:2:1\n";
        let s = parse_config(doc, None).unwrap();
        assert_eq!((s.intensities.p_mu, s.intensities.p_v1), (0.7, 0.2));
        assert!((s.intensities.p_v2() - 0.1).abs() < 1e-12);

        let doc = "[protocol]\nmu = 0.2\np_mu = 0.6\np_v1 = 0.3\nn_pulses = 1e11\n[epsilons]\neps_pe = 1e-8\n";
        let s = parse_config(doc, Some("fig2b")).unwrap();
        assert_eq!(s.intensities.v1, 0.1);
        assert_eq!(s.intensities.p_mu, 0.6);
        assert_eq!(s.n_pulses, PulseCount::Finite(1e11));
        assert_eq!(s.budget.eps_pe, 1e-8);
        assert_eq!(s.name.as_deref(), Some("fig2b"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("[physical]\nd = 8\nfoo = 1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_config("[nowhere]\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_config("[protocol]\nmu = abc\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_config("[protocol]\nmu = 0.1\nmu = 0.2\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_config("[protocol]\nmethod = magic\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(parse_config("mu = 0.1\n", None).is_err());
        assert!(parse_config("preset = fig2a\n", Some("fig3a")).is_err());
    }

    #[test]
    fn security_model_selection() {
        let s = parse_config("[security_model]\nkind = gaussian\n", Some("fig2a")).unwrap();
        assert_eq!(s.security, SecurityModelSpec::Gaussian);
        let dir = tempdir_with_table();
        let cfg = dir.join("c.conf");
        std::fs::write(&cfg, "preset = fig2a\n[security_model]\nkind = table\ntable = t.txt\n").unwrap();
        let s = load_config(&cfg, None).unwrap();
        assert!(matches!(s.security, SecurityModelSpec::Table(_)));
        std::fs::remove_dir_all(dir).unwrap();
    }

    fn tempdir_with_table() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("hdqkd-config-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("t.txt"), "8 0 0 3 0\n8 0 1 3 1\n8 1 0 2 1\n8 1 1 2 2\n").unwrap();
        dir
    }
}
