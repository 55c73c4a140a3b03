//! Experiment orchestration: configuration, per-trial seeding, and CSV output.
//!
//! Every experiment derives the seed of trial `i` as `derive_seed(seed, tag(id), i)`
//! and reduces per-trial results in trial order, so output bytes do not depend on
//! the number of worker threads.

mod validate;

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropic::{solve_t0, validate_hypotheses, EntropicError, EntropicSchedule, HypothesisFamily};
use crate::group::{AbelianGroup, GroupError};
use crate::mixingstats::{lower_bound_estimate, psi, StatsError};
use crate::numeric::{derive_seed, tag};
use crate::spectral::{tv_curve, CharacterSpectrum, SpectralError, DEFAULT_SPECTRAL_MAX};
use crate::typdist::{graph_distances, lp_distances, reference_radius, TypdistError};
use crate::walklaw::WalkKind;

pub use validate::{run_validation_suite, run_validation_suite_with, Check, ValidationOptions, ValidationReport};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "CUTOFF_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("all {trials} trials drew non-generating multisets")]
    AllNonGenerating { trials: u64 },
    #[error("non-finite value in column {column}")]
    NonFinite { column: String },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Entropic(#[from] EntropicError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Typdist(#[from] TypdistError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Norm exponent that serialises `∞` as the string `"inf"`.
mod pnorm {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(p),
            Raw::Text(t) => super::parse_p(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses `1`, `2.5`, `inf` or `∞`.
pub fn parse_p(text: &str) -> Result<f64, String> {
    match text.trim() {
        "inf" | "Inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| format!("cannot parse norm exponent {t:?}")),
    }
}

/// Resolved settings of one experiment. Output path and worker count are not
/// part of the embedded provenance line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: String,
    pub k: usize,
    pub directed: bool,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    #[serde(with = "pnorm")]
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    /// Overrides `(vk)^{1/4}`.
    pub omega: Option<f64>,
    /// Multiples of ω audited by the lower-bound experiment.
    pub omega_scales: Vec<f64>,
    /// Slack in the structural hypotheses.
    pub eta: f64,
    /// Monte Carlo draws of `Q` per lower-bound estimate.
    pub q_samples: u64,
    pub spectral_max: u64,
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            group: "65536".into(),
            k: 8,
            directed: false,
            alphas: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            betas: vec![0.1, 0.5, 0.9],
            p: 1.0,
            trials: 32,
            seed: 1,
            omega: None,
            omega_scales: vec![1.0],
            eta: 0.1,
            q_samples: 100_000,
            spectral_max: DEFAULT_SPECTRAL_MAX,
            output: None,
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn parsed_group(&self) -> Result<AbelianGroup, HarnessError> {
        Ok(self.group.parse()?)
    }

    pub fn kind(&self) -> WalkKind {
        WalkKind::from_directed(self.directed)
    }

    pub fn check(&self) -> Result<(), HarnessError> {
        self.parsed_group()?;
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.alphas.iter().any(|a| !a.is_finite()) {
            return bad("alphas must be finite");
        }
        if self.betas.iter().any(|&b| !(b > 0.0 && b <= 1.0)) {
            return bad("betas must lie in (0, 1]");
        }
        if !(self.p >= 1.0) {
            return bad("p must be at least 1");
        }
        if let Some(w) = self.omega {
            if !(w > 0.0 && w.is_finite()) {
                return bad("omega must be positive");
            }
        }
        if self.omega_scales.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad("omega scales must be positive");
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad("eta must lie in (0, 1)");
        }
        if self.q_samples == 0 {
            return bad("q_samples must be at least 1");
        }
        Ok(())
    }

    /// Compact JSON for the provenance line.
    pub fn provenance(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn schedule(&self) -> Result<EntropicSchedule, HarnessError> {
        let group = self.parsed_group()?;
        let sch = solve_t0(self.kind(), self.k, group.order())?;
        Ok(match self.omega {
            Some(w) => sch.with_omega(w),
            None => sch,
        })
    }
}

/// Human-readable notes on every structural hypothesis that fails for this
/// configuration. Failing hypotheses do not stop an experiment.
pub fn hypothesis_warnings(cfg: &ExperimentConfig, family: HypothesisFamily) -> Result<Vec<String>, HarnessError> {
    let group = cfg.parsed_group()?;
    let report = validate_hypotheses(&group, cfg.k, family, cfg.eta, cfg.p);
    let holds = |name: &str| report.clause(name).is_some_and(|c| c.holds);
    let ok = match family {
        // side condition plus either the small-k or the large-k branch
        HypothesisFamily::Cutoff => {
            holds("min_side") && ((holds("small_k") && holds("small_k_dim")) || (holds("large_k") && holds("large_k_dim")))
        }
        HypothesisFamily::Typdist => report.clauses.iter().all(|c| c.holds),
    };
    if ok {
        return Ok(Vec::new());
    }
    Ok(report
        .clauses
        .iter()
        .filter(|c| !c.holds)
        .map(|c| format!("{family:?} hypothesis {} fails: lhs {} vs rhs {}", c.name, c.lhs, c.rhs))
        .collect())
}

/// Worker count: explicit value, else the environment variable, else rayon's default.
pub fn resolve_workers(explicit: Option<usize>) -> Result<Option<usize>, HarnessError> {
    if explicit.is_some() {
        return Ok(explicit);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| HarnessError::Config(format!("{WORKERS_ENV}={v:?} is not a count"))),
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a pool of the given size (or the global pool).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// One long-format output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: &'static str,
    /// `None` on summary rows.
    pub trial: Option<u64>,
    pub params: Vec<(&'static str, f64)>,
    pub metric: &'static str,
    pub value: f64,
    pub stderr: Option<f64>,
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Writes the provenance line, a header and the rows.
pub fn write_csv<W: Write>(
    mut out: W,
    config: &ExperimentConfig,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), HarnessError> {
    writeln!(out, "# json-config: {}", config.provenance())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format rows as CSV; columns are `experiment,trial,<params>,metric,value,stderr`.
pub fn rows_to_csv<W: Write>(out: W, config: &ExperimentConfig, rows: &[ResultRow]) -> Result<(), HarnessError> {
    let param_names: Vec<&str> = rows.first().map(|r| r.params.iter().map(|p| p.0).collect()).unwrap_or_default();
    let mut header = vec!["experiment", "trial"];
    header.extend(&param_names);
    header.extend(["metric", "value", "stderr"]);
    let mut table = Vec::with_capacity(rows.len());
    for r in rows {
        check_finite(r.metric, r.value)?;
        let mut rec = vec![
            r.experiment.to_string(),
            r.trial.map(|t| t.to_string()).unwrap_or_default(),
        ];
        for &(name, v) in &r.params {
            check_finite(name, v)?;
            rec.push(fmt_f64(v));
        }
        rec.push(r.metric.to_string());
        rec.push(fmt_f64(r.value));
        rec.push(r.stderr.map(fmt_f64).unwrap_or_default());
        table.push(rec);
    }
    write_csv(out, config, &header, &table)
}

fn check_finite(column: &str, v: f64) -> Result<(), HarnessError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::NonFinite {
            column: column.to_string(),
        })
    }
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn sample_quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// TV and L2 at each `t_α` for one generating multiset.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialCurve {
    pub trial: u64,
    pub seed: u64,
    pub non_generating: bool,
    pub tv: Vec<f64>,
    pub l2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ProfileOutput {
    pub schedule: EntropicSchedule,
    /// `(α, t_α)`
    pub times: Vec<(f64, f64)>,
    pub trials: Vec<TrialCurve>,
    pub skipped_non_generating: u64,
    pub rows: Vec<ResultRow>,
}

fn trial_curves(cfg: &ExperimentConfig, id: &str, times: &[f64]) -> Result<Vec<TrialCurve>, HarnessError> {
    let group = cfg.parsed_group()?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, tag(id), i);
            let gens = group.sample_generators(cfg.k, seed)?;
            let spectrum = CharacterSpectrum::with_limit(&group, &gens, cfg.directed, cfg.spectral_max)?;
            let curve = tv_curve(&spectrum, times)?;
            Ok(TrialCurve {
                trial: i,
                seed,
                non_generating: spectrum.detect_non_generating(),
                tv: curve.iter().map(|c| c.tv).collect(),
                l2: curve.iter().map(|c| c.l2).collect(),
            })
        })
        .collect()
}

fn cutoff_times(schedule: &EntropicSchedule, alphas: &[f64]) -> Result<Vec<(f64, f64)>, HarnessError> {
    alphas
        .iter()
        .map(|&a| Ok((a, schedule.solve_t_alpha(a)?)))
        .collect()
}

/// Exact TV at each `t_α` over sampled multisets, with median and IQR per α.
pub fn run_cutoff_profile(cfg: &ExperimentConfig) -> Result<ProfileOutput, HarnessError> {
    cfg.check()?;
    let schedule = cfg.schedule()?;
    let times = cutoff_times(&schedule, &cfg.alphas)?;
    let ts: Vec<f64> = times.iter().map(|t| t.1).collect();
    let curves = trial_curves(cfg, "cutoff-profile", &ts)?;
    let skipped = curves.iter().filter(|c| c.non_generating).count() as u64;
    if skipped == cfg.trials {
        return Err(HarnessError::AllNonGenerating { trials: cfg.trials });
    }
    const ID: &str = "cutoff-profile";
    let mut rows = Vec::new();
    for c in curves.iter().filter(|c| !c.non_generating) {
        for (j, &(alpha, t)) in times.iter().enumerate() {
            let params = vec![("alpha", alpha), ("t", t)];
            rows.push(ResultRow {
                experiment: ID,
                trial: Some(c.trial),
                params: params.clone(),
                metric: "tv",
                value: c.tv[j],
                stderr: None,
            });
            rows.push(ResultRow {
                experiment: ID,
                trial: Some(c.trial),
                params,
                metric: "l2",
                value: c.l2[j],
                stderr: None,
            });
        }
    }
    for (j, &(alpha, t)) in times.iter().enumerate() {
        let mut tv: Vec<f64> = curves.iter().filter(|c| !c.non_generating).map(|c| c.tv[j]).collect();
        tv.sort_by(f64::total_cmp);
        let params = vec![("alpha", alpha), ("t", t)];
        for (metric, value) in [
            ("median_tv", sample_quantile(&tv, 0.5)),
            ("iqr_tv", sample_quantile(&tv, 0.75) - sample_quantile(&tv, 0.25)),
            ("psi", psi(alpha)),
        ] {
            rows.push(ResultRow {
                experiment: ID,
                trial: None,
                params: params.clone(),
                metric,
                value,
                stderr: None,
            });
        }
    }
    rows.push(ResultRow {
        experiment: ID,
        trial: None,
        params: vec![("alpha", 0.0), ("t", schedule.t0)],
        metric: "skipped_non_generating",
        value: skipped as f64,
        stderr: None,
    });
    Ok(ProfileOutput {
        schedule,
        times,
        trials: curves,
        skipped_non_generating: skipped,
        rows,
    })
}

/// One comparison of exact TV against the Monte Carlo lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditEntry {
    pub trial: u64,
    pub alpha: f64,
    pub omega: f64,
    pub tv: f64,
    pub lower_bound: f64,
    pub stderr: f64,
    pub non_generating: bool,
}

impl AuditEntry {
    /// `TV − bound`; the bound holds when this is at least `−3·stderr`.
    pub fn margin(&self) -> f64 {
        self.tv - self.lower_bound
    }

    pub fn violated(&self) -> bool {
        self.margin() < -3.0 * self.stderr
    }
}

#[derive(Debug, Clone)]
pub struct AuditOutput {
    pub schedule: EntropicSchedule,
    pub entries: Vec<AuditEntry>,
    pub skipped_non_generating: u64,
    pub rows: Vec<ResultRow>,
}

impl AuditOutput {
    pub fn violations(&self) -> Vec<&AuditEntry> {
        self.entries.iter().filter(|e| e.violated()).collect()
    }
}

/// Exact TV against `P̂(Q(t_α) ≤ log n − ω) − e^{−ω}` for every trial, α and ω.
///
/// The bound does not depend on the multiset, so it is estimated once per
/// `(α, ω)`. Non-generating multisets are audited too, since the bound holds for any.
pub fn run_lower_bound_audit(cfg: &ExperimentConfig) -> Result<AuditOutput, HarnessError> {
    cfg.check()?;
    let schedule = cfg.schedule()?;
    let times = cutoff_times(&schedule, &cfg.alphas)?;
    let ts: Vec<f64> = times.iter().map(|t| t.1).collect();
    let curves = trial_curves(cfg, "cutoff-profile", &ts)?;
    let skipped = curves.iter().filter(|c| c.non_generating).count() as u64;
    let mut bounds = Vec::new();
    for (si, &scale) in cfg.omega_scales.iter().enumerate() {
        let omega = scale * schedule.omega;
        for (j, &(_, t)) in times.iter().enumerate() {
            let seed = derive_seed(cfg.seed, tag("lower-bound"), (si * times.len() + j) as u64);
            bounds.push((si, j, omega, lower_bound_estimate(&schedule, t, omega, cfg.q_samples, seed)?));
        }
    }
    const ID: &str = "lower-bound-audit";
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for c in &curves {
        for &(_, j, omega, lb) in &bounds {
            let (alpha, t) = times[j];
            let e = AuditEntry {
                trial: c.trial,
                alpha,
                omega,
                tv: c.tv[j],
                lower_bound: lb.value,
                stderr: lb.stderr,
                non_generating: c.non_generating,
            };
            let params = vec![("alpha", alpha), ("t", t), ("omega", omega)];
            for (metric, value, stderr) in [
                ("tv", e.tv, None),
                ("lower_bound", e.lower_bound, Some(e.stderr)),
                ("margin", e.margin(), Some(e.stderr)),
                ("non_generating", c.non_generating as u8 as f64, None),
            ] {
                rows.push(ResultRow {
                    experiment: ID,
                    trial: Some(c.trial),
                    params: params.clone(),
                    metric,
                    value,
                    stderr,
                });
            }
            entries.push(e);
        }
    }
    let violations = entries.iter().filter(|e| e.violated()).count();
    rows.push(ResultRow {
        experiment: ID,
        trial: None,
        params: vec![("alpha", 0.0), ("t", schedule.t0), ("omega", schedule.omega)],
        metric: "violations",
        value: violations as f64,
        stderr: None,
    });
    rows.push(ResultRow {
        experiment: ID,
        trial: None,
        params: vec![("alpha", 0.0), ("t", schedule.t0), ("omega", schedule.omega)],
        metric: "skipped_non_generating",
        value: skipped as f64,
        stderr: None,
    });
    Ok(AuditOutput {
        schedule,
        entries,
        skipped_non_generating: skipped,
        rows,
    })
}

/// `D(β)` for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypdistRow {
    pub trial: u64,
    pub beta: f64,
    pub d: f64,
    pub m_ref: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct TypdistOutput {
    pub m_ref: f64,
    pub rows: Vec<TypdistRow>,
    /// Per β: `(β, min, median, max)` of the ratio across trials.
    pub summary: Vec<(f64, f64, f64, f64)>,
}

impl TypdistOutput {
    pub fn to_csv<W: Write>(&self, out: W, config: &ExperimentConfig) -> Result<(), HarnessError> {
        let mut table = Vec::new();
        for r in &self.rows {
            for (c, v) in [("D", r.d), ("Mref", r.m_ref), ("ratio", r.ratio)] {
                check_finite(c, v)?;
            }
            table.push(vec![
                r.trial.to_string(),
                fmt_f64(r.beta),
                fmt_f64(r.d),
                fmt_f64(r.m_ref),
                fmt_f64(r.ratio),
            ]);
        }
        for &(beta, lo, med, hi) in &self.summary {
            for (name, v) in [("min", lo), ("median", med), ("max", hi)] {
                table.push(vec![
                    name.to_string(),
                    fmt_f64(beta),
                    String::new(),
                    fmt_f64(self.m_ref),
                    fmt_f64(v),
                ]);
            }
        }
        write_csv(out, config, &["trial", "beta", "D", "Mref", "ratio"], &table)
    }
}

/// Search radius for the `L_p` experiment, in units of the reference radius.
const LP_SEARCH_FACTOR: f64 = 2.5;

/// Typical distances `D(β)` over sampled multisets, relative to `𝓜_{k,p}`.
pub fn run_typdist_experiment(cfg: &ExperimentConfig) -> Result<TypdistOutput, HarnessError> {
    cfg.check()?;
    let group = cfg.parsed_group()?;
    let log_n = (group.order() as f64).ln();
    let m_ref = reference_radius(cfg.k, cfg.p, log_n, cfg.directed);
    let per_trial: Vec<Vec<TypdistRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, tag("typdist"), i);
            let gens = group.sample_generators(cfg.k, seed)?;
            let hist = if cfg.p == 1.0 {
                graph_distances(&group, &gens, cfg.directed)?
            } else {
                lp_distances(&group, &gens, cfg.p, LP_SEARCH_FACTOR * m_ref, cfg.directed)?
            };
            cfg.betas
                .iter()
                .map(|&beta| {
                    let d = hist.quantile(beta)?;
                    Ok(TypdistRow {
                        trial: i,
                        beta,
                        d,
                        m_ref,
                        ratio: d / m_ref,
                    })
                })
                .collect::<Result<Vec<_>, HarnessError>>()
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<TypdistRow> = per_trial.into_iter().flatten().collect();
    let summary = cfg
        .betas
        .iter()
        .map(|&beta| {
            let mut r: Vec<f64> = rows.iter().filter(|x| x.beta == beta).map(|x| x.ratio).collect();
            r.sort_by(f64::total_cmp);
            (beta, r[0], sample_quantile(&r, 0.5), r[r.len() - 1])
        })
        .collect();
    Ok(TypdistOutput { m_ref, rows, summary })
}
