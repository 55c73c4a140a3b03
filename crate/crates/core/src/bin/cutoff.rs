use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cutoff_core::entropic::{asymptotic_t0, AsymptoticT0, EntropicSchedule, HypothesisFamily, RegimeThresholds};
use cutoff_core::entropic::{solve_t0, validate_hypotheses, HypothesisReport};
use cutoff_core::harness::{
    hypothesis_warnings, parse_p, resolve_workers, rows_to_csv, run_cutoff_profile, run_lower_bound_audit,
    run_typdist_experiment, run_validation_suite, with_workers, write_csv, ExperimentConfig, HarnessError,
};
use cutoff_core::mixingstats::{estimate_d_alpha, DAlphaEstimate};
use cutoff_core::numeric::{derive_seed, tag};
use cutoff_core::spectral::{tv_curve, CharacterSpectrum};
use cutoff_core::walklaw::entropy_of;

#[derive(Parser)]
#[command(name = "cutoff", version, about = "Random walks on random Cayley graphs of finite Abelian groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropic times t_α, regime and hypothesis report as JSON.
    Entropic {
        #[command(flatten)]
        common: Common,
        /// Group order; defaults to the order of --group.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Exact TV and L2 distance for one sampled multiset.
    Tvcurve {
        #[command(flatten)]
        common: Common,
        /// `auto:alphas=A..B[:STEP]` or a comma-separated list of times.
        #[arg(long, default_value = "auto:alphas=-2..2")]
        times: String,
        /// Trial index whose multiset is used, matching cutoff-profile.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Modified L2 quantity D_α as JSON; --trials counts accepted pairs.
    Dalpha {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// Typical graph distances against the lattice-ball radius.
    Typdist {
        #[command(flatten)]
        common: Common,
    },
    /// Exact TV at each t_α over sampled multisets.
    CutoffProfile {
        #[command(flatten)]
        common: Common,
    },
    /// Exact TV against the Monte Carlo lower bound; fails on any violation.
    LowerBoundAudit {
        #[command(flatten)]
        common: Common,
    },
    /// Runs the bundled property checks; fails if any check fails.
    Validate {
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// Flags shared by every experiment. Each overrides the matching config field.
#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Worker threads; falls back to CUTOFF_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
    /// Group literal such as `65536` or `6x4`.
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    directed: Option<bool>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Norm exponent, `inf` allowed.
    #[arg(long, value_parser = parse_p)]
    p: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    omega_scales: Option<Vec<f64>>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    q_samples: Option<u64>,
    #[arg(long)]
    spectral_max: Option<u64>,
}

macro_rules! override_fields {
    ($cfg:ident, $flags:ident, $($field:ident),*) => {
        $(if let Some(v) = $flags.$field.clone() { $cfg.$field = v; })*
    };
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        override_fields!(cfg, self, group, k, directed, alphas, betas, p, trials, seed, omega_scales, eta, q_samples, spectral_max);
        if self.omega.is_some() {
            cfg.omega = self.omega;
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        cfg.workers = resolve_workers(self.workers.or(cfg.workers))?;
        cfg.check()?;
        Ok(cfg)
    }
}

fn sink(cfg: &ExperimentConfig) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match &cfg.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn warn(cfg: &ExperimentConfig, family: HypothesisFamily) -> Result<(), HarnessError> {
    for w in hypothesis_warnings(cfg, family)? {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn write_json<T: Serialize>(cfg: &ExperimentConfig, value: &T) -> Result<(), HarnessError> {
    let mut out = sink(cfg)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EntropicOut {
    config: ExperimentConfig,
    n: u64,
    schedule: EntropicSchedule,
    t_alpha: Vec<(f64, f64)>,
    asymptotic: Option<AsymptoticT0>,
    hypotheses: HypothesisReport,
}

fn entropic(cfg: &ExperimentConfig, n: Option<u64>) -> Result<(), HarnessError> {
    let group = cfg.parsed_group()?;
    let n = n.unwrap_or(group.order());
    let mut schedule = solve_t0(cfg.kind(), cfg.k, n)?;
    if let Some(w) = cfg.omega {
        schedule = schedule.with_omega(w);
    }
    let t_alpha = cfg
        .alphas
        .iter()
        .map(|&a| Ok((a, schedule.solve_t_alpha(a)?)))
        .collect::<Result<_, HarnessError>>()?;
    let out = EntropicOut {
        config: cfg.clone(),
        n,
        asymptotic: asymptotic_t0(cfg.kind(), cfg.k, n, RegimeThresholds::default()).ok(),
        hypotheses: validate_hypotheses(&group, cfg.k, HypothesisFamily::Cutoff, cfg.eta, cfg.p),
        schedule,
        t_alpha,
    };
    write_json(cfg, &out)
}

/// Times for the TV curve, each paired with the α it corresponds to.
fn curve_times(spec: &str, schedule: &EntropicSchedule) -> Result<Vec<(f64, f64)>, HarnessError> {
    let bad = || HarnessError::Config(format!("cannot parse times {spec:?}"));
    if let Some(range) = spec.strip_prefix("auto:alphas=") {
        let (span, step) = match range.split_once(':') {
            Some((span, step)) => (span, step.parse::<f64>().map_err(|_| bad())?),
            None => (range, 0.25),
        };
        let (a, b) = span.split_once("..").ok_or_else(bad)?;
        let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        if !(step > 0.0 && a <= b) {
            return Err(bad());
        }
        let steps = ((b - a) / step + 1e-9).floor() as u64;
        return (0..=steps)
            .map(|i| {
                let alpha = a + i as f64 * step;
                Ok((schedule.solve_t_alpha(alpha)?, alpha))
            })
            .collect();
    }
    let kf = schedule.k as f64;
    spec.split(',')
        .map(|t| {
            let t: f64 = t.trim().parse().map_err(|_| bad())?;
            if !(t > 0.0) {
                return Err(bad());
            }
            // invert the target: k H(t/k) = log n + α √(vk)
            let h = entropy_of(schedule.kind, t / kf).map_err(|e| HarnessError::Entropic(e.into()))?;
            Ok((t, (kf * h - schedule.log_n) / (schedule.v * kf).sqrt()))
        })
        .collect()
}

fn tvcurve(cfg: &ExperimentConfig, times: &str, trial: u64) -> Result<(), HarnessError> {
    let group = cfg.parsed_group()?;
    let schedule = cfg.schedule()?;
    let points = curve_times(times, &schedule)?;
    let gens = group.sample_generators(cfg.k, derive_seed(cfg.seed, tag("cutoff-profile"), trial))?;
    let spectrum = CharacterSpectrum::with_limit(&group, &gens, cfg.directed, cfg.spectral_max)?;
    if spectrum.detect_non_generating() {
        eprintln!("warning: sampled multiset does not generate the group");
    }
    let ts: Vec<f64> = points.iter().map(|p| p.0).collect();
    let curve = tv_curve(&spectrum, &ts)?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .zip(&points)
        .map(|(c, &(t, alpha))| vec![t.to_string(), alpha.to_string(), c.tv.to_string(), c.l2.to_string()])
        .collect();
    let mut out = sink(cfg)?;
    write_csv(&mut out, cfg, &["t", "alpha", "tv", "l2"], &rows)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DAlphaOut {
    config: ExperimentConfig,
    alpha: f64,
    t: f64,
    #[serde(flatten)]
    result: DAlphaEstimate,
}

fn dalpha(cfg: &ExperimentConfig, alpha: f64) -> Result<(), HarnessError> {
    let group = cfg.parsed_group()?;
    let schedule = cfg.schedule()?;
    let result = estimate_d_alpha(&group, &schedule, alpha, cfg.trials, derive_seed(cfg.seed, tag("dalpha"), 0))?;
    let t = schedule.solve_t_alpha(alpha)?;
    write_json(
        cfg,
        &DAlphaOut {
            config: cfg.clone(),
            alpha,
            t,
            result,
        },
    )
}

fn run(command: Command) -> Result<bool, HarnessError> {
    match command {
        Command::Validate { workers } => {
            let report = with_workers(resolve_workers(workers)?, run_validation_suite)?;
            for c in &report.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("{mark} {} ({}): {}", c.name, c.property, c.detail);
            }
            Ok(report.passed())
        }
        Command::Entropic { common, n } => {
            let cfg = common.resolve()?;
            entropic(&cfg, n)?;
            Ok(true)
        }
        Command::Tvcurve { common, times, trial } => {
            let cfg = common.resolve()?;
            warn(&cfg, HypothesisFamily::Cutoff)?;
            with_workers(cfg.workers, || tvcurve(&cfg, &times, trial))??;
            Ok(true)
        }
        Command::Dalpha { common, alpha } => {
            let cfg = common.resolve()?;
            warn(&cfg, HypothesisFamily::Cutoff)?;
            with_workers(cfg.workers, || dalpha(&cfg, alpha))??;
            Ok(true)
        }
        Command::Typdist { common } => {
            let cfg = common.resolve()?;
            warn(&cfg, HypothesisFamily::Typdist)?;
            let out = with_workers(cfg.workers, || run_typdist_experiment(&cfg))??;
            let mut sink = sink(&cfg)?;
            out.to_csv(&mut sink, &cfg)?;
            sink.flush()?;
            Ok(true)
        }
        Command::CutoffProfile { common } => {
            let cfg = common.resolve()?;
            warn(&cfg, HypothesisFamily::Cutoff)?;
            let out = with_workers(cfg.workers, || run_cutoff_profile(&cfg))??;
            if out.skipped_non_generating > 0 {
                eprintln!("note: skipped {} non-generating multisets", out.skipped_non_generating);
            }
            let mut sink = sink(&cfg)?;
            rows_to_csv(&mut sink, &cfg, &out.rows)?;
            sink.flush()?;
            Ok(true)
        }
        Command::LowerBoundAudit { common } => {
            let cfg = common.resolve()?;
            warn(&cfg, HypothesisFamily::Cutoff)?;
            let out = with_workers(cfg.workers, || run_lower_bound_audit(&cfg))??;
            let mut sink = sink(&cfg)?;
            rows_to_csv(&mut sink, &cfg, &out.rows)?;
            sink.flush()?;
            let violations = out.violations();
            for v in &violations {
                eprintln!(
                    "violation: trial {} alpha {} omega {}: tv {} < bound {} - 3*{}",
                    v.trial, v.alpha, v.omega, v.tv, v.lower_bound, v.stderr
                );
            }
            Ok(violations.is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
