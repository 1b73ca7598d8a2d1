use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hdqkd::config::{parse_document, resolve};
use hdqkd::error::Error;
use hdqkd::finite::{Method, PulseCount};
use hdqkd::output::{fmt_num, render_csv, render_plotdata, write_output};
use hdqkd::phys::ChannelPoint;
use hdqkd::presets::PRESETS;
use hdqkd::scenario::{run_point, ChernoffPolicy, ResultRow, Scenario};
use hdqkd::sim::{coverage_experiments, simulate_session, SimConfig};
use hdqkd::sweep::{length_grid, max_distance, sweep_lengths};

#[derive(Parser)]
#[command(name = "hdqkd", version, about = "Finite-key secure-key capacity of decoy-state HD-QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the capacity at one fiber length.
    Point {
        #[command(flatten)]
        common: Common,
        /// Fiber length in km.
        #[arg(long, default_value_t = 0.0)]
        length: f64,
    },
    /// Evaluate the capacity over a grid of fiber lengths.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        l_min: f64,
        #[arg(long, default_value_t = 300.0)]
        l_max: f64,
        #[arg(long, default_value_t = 5.0)]
        step: f64,
        /// Write the two-column plot format instead of CSV.
        #[arg(long)]
        plotdata: bool,
    },
    /// Longest fiber with a positive capacity.
    Maxdist {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate one session frame by frame and tally the detections.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        length: f64,
    },
    /// Repeat simulated sessions and report how often the intervals cover the model value.
    Coverage {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        length: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Failure probability used for the intervals (defaults to the scenario's eps_pe).
        #[arg(long)]
        eps_pe: Option<f64>,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated list of hoeffding, chernoff, exact.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// Comma-separated pulse counts; `inf` for the asymptotic limit.
    #[arg(long, value_delimiter = ',')]
    n_pulses: Vec<PulseCount>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    parallel: Option<usize>,
    /// What to do when the Chernoff preconditions fail: vacuous, error, hoeffding or as-published.
    #[arg(long)]
    chernoff_inapplicable: Option<ChernoffPolicy>,
    /// Shorthand for `--chernoff-inapplicable error`.
    #[arg(long, conflicts_with = "chernoff_inapplicable")]
    strict_chernoff: bool,
}

enum Failure {
    Config(String),
    Computation(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Computation(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Computation(m) | Failure::Io(m) => m,
        }
    }
}

fn computation(e: Error) -> Failure {
    Failure::Computation(e.to_string())
}

type Outcome<T> = std::result::Result<T, Failure>;

impl Common {
    fn scenario(&self) -> Outcome<Scenario> {
        if self.config.is_none() && self.preset.is_none() {
            return Err(Failure::Config("give --config, --preset or both".into()));
        }
        let doc = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
                parse_document(&text, path.parent()).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
            }
            None => Default::default(),
        };
        let mut s = resolve(doc, self.preset.as_deref()).map_err(|e| Failure::Config(e.to_string()))?;
        if self.strict_chernoff {
            s.chernoff_policy = ChernoffPolicy::Error;
        } else if let Some(p) = self.chernoff_inapplicable {
            s.chernoff_policy = p;
        }
        Ok(s)
    }

    /// The scenario once per requested (n_pulses, method), pulse count outermost.
    fn variants(&self, s: &Scenario) -> Vec<Scenario> {
        let counts = if self.n_pulses.is_empty() { vec![s.n_pulses] } else { self.n_pulses.clone() };
        let methods = if self.method.is_empty() { vec![s.method] } else { self.method.clone() };
        counts
            .iter()
            .flat_map(|&n| methods.iter().map(move |&m| s.with_n_pulses(n).with_method(m)))
            .collect()
    }

    fn pool(&self) -> Outcome<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(k) = self.parallel {
            if k == 0 {
                return Err(Failure::Config("--parallel must be at least 1".into()));
            }
            b = b.num_threads(k);
        }
        b.build().map_err(|e| Failure::Computation(format!("cannot start worker pool: {e}")))
    }

    fn emit(&self, text: &str) -> Outcome<()> {
        write_output(text, self.out.as_deref()).map_err(|e| {
            let target = self.out.as_deref().map_or_else(|| "stdout".to_string(), |p: &Path| p.display().to_string());
            Failure::Io(format!("cannot write {target}: {e}"))
        })
    }

    fn announce_policy(&self, s: &Scenario) {
        let uses_chernoff = self.method.contains(&Method::Chernoff) || (self.method.is_empty() && s.method == Method::Chernoff);
        if uses_chernoff && matches!(s.chernoff_policy, ChernoffPolicy::Hoeffding | ChernoffPolicy::AsPublished) {
            eprintln!("note: chernoff preconditions are handled with the {} policy", s.chernoff_policy);
        }
    }
}

fn sim_config(common: &Common, s: &Scenario, length: f64) -> Outcome<SimConfig> {
    let n = match common.n_pulses.as_slice() {
        [] => s.n_pulses,
        [n] => *n,
        _ => return Err(Failure::Config("simulation takes a single --n-pulses value".into())),
    };
    let n_pulses = match n {
        PulseCount::Finite(n) if n.fract() == 0.0 && n <= u64::MAX as f64 => n as u64,
        other => return Err(Failure::Config(format!("simulation needs a finite whole pulse count, got {other}"))),
    };
    let channel = ChannelPoint::new(s.phys.alpha, length).map_err(|e| Failure::Config(e.to_string()))?;
    let cfg = SimConfig { phys: s.phys, channel, intensities: s.intensities, p_t: s.p_t, n_pulses, seed: common.seed };
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Presets => {
            let mut out = String::from("name,d,mode,mu,method,n_pulses,description\n");
            for p in &PRESETS {
                writeln!(out, "{},{},{},{},{},{},\"{}\"", p.name, p.d, p.mode, p.mu, p.method, p.n_pulses, p.description)
                    .expect("write to String");
            }
            write_output(&out, None).map_err(|e| Failure::Io(e.to_string()))
        }
        Command::Point { common, length } => {
            let s = common.scenario()?;
            common.announce_policy(&s);
            let variants = common.variants(&s);
            let rows: Vec<ResultRow> = common
                .pool()?
                .install(|| variants.iter().map(|v| run_point(v, length)).collect::<Result<_, _>>())
                .map_err(computation)?;
            common.emit(&render_csv(&rows).map_err(computation)?)
        }
        Command::Sweep { common, l_min, l_max, step, plotdata } => {
            let s = common.scenario()?;
            common.announce_policy(&s);
            let lengths = length_grid(l_min, l_max, step).map_err(|e| Failure::Config(e.to_string()))?;
            let variants = common.variants(&s);
            let blocks: Vec<Vec<ResultRow>> = common
                .pool()?
                .install(|| variants.iter().map(|v| sweep_lengths(v, &lengths)).collect::<Result<_, _>>())
                .map_err(computation)?;
            let rows: Vec<ResultRow> = blocks.into_iter().flatten().collect();
            let text = if plotdata { render_plotdata(&rows) } else { render_csv(&rows) }.map_err(computation)?;
            common.emit(&text)
        }
        Command::Maxdist { common } => {
            let s = common.scenario()?;
            common.announce_policy(&s);
            let variants = common.variants(&s);
            let results = common
                .pool()?
                .install(|| variants.iter().map(max_distance).collect::<Result<Vec<_>, _>>())
                .map_err(computation)?;
            let mut out = String::from("n_pulses,method,max_distance_km,search\n");
            for (v, m) in variants.iter().zip(&results) {
                writeln!(out, "{},{},{},{}", v.n_pulses, v.method, fmt_num(m.km), m.method.as_str()).expect("write to String");
            }
            common.emit(&out)
        }
        Command::Simulate { common, length } => {
            let s = common.scenario()?;
            let cfg = sim_config(&common, &s, length)?;
            let tally = common.pool()?.install(|| simulate_session(&cfg)).map_err(computation)?;
            let mut out = tally.dump();
            out.push_str("# lambda p_hat_dd p_model\n");
            for (level, lambda) in tally.levels() {
                let p_hat = tally.p_hat(level).map_or_else(|_| "nan".to_string(), fmt_num);
                let p_model = cfg.analytic_p(lambda).map_err(computation)?;
                writeln!(out, "{lambda} {p_hat} {}", fmt_num(p_model)).expect("write to String");
            }
            common.emit(&out)
        }
        Command::Coverage { common, length, trials, eps_pe } => {
            let s = common.scenario()?;
            let cfg = sim_config(&common, &s, length)?;
            let methods = if common.method.is_empty() { vec![Method::Hoeffding, Method::Chernoff] } else { common.method.clone() };
            let eps = eps_pe.unwrap_or(s.budget.eps_pe);
            let reports = common
                .pool()?
                .install(|| coverage_experiments(&cfg, eps, &methods, trials))
                .map_err(|e| match e {
                    Error::Invalid { .. } | Error::Domain(_) => Failure::Config(e.to_string()),
                    e => computation(e),
                })?;
            let mut out = String::from("method,trials,covered,inapplicable,coverage\n");
            for r in &reports {
                writeln!(out, "{},{},{},{},{}", r.method, r.trials, r.covered, r.inapplicable, r.fraction).expect("write to String");
            }
            common.emit(&out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
