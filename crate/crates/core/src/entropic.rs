//! Entropic time `t_0` and cutoff times `t_α`.
//!
//! `t_α` is the time at which one auxiliary coordinate, a rate-1/k walk, has
//! entropy `(log n + α √(vk)) / k`, where `v = Var Q_1(t_0)`. The entropy is
//! strictly increasing in time, so every target is solved by bisection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::AbelianGroup;
use crate::walklaw::{entropy_of, q_moments_of, LatticeWalkLaw, LawError, WalkKind};

/// Solver tolerance on the entropy value.
pub const ENTROPY_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropicError {
    #[error("entropy target {0} is not positive; no time reaches it")]
    NonPositiveTarget(f64),
    #[error("bisection did not reach tolerance after {0} iterations")]
    NoConvergence(usize),
    #[error("need k ≥ 2 and n ≥ 3 (got k = {k}, log n = {log_n})")]
    Domain { k: usize, log_n: f64 },
    #[error(transparent)]
    Law(#[from] LawError),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EntropicSchedule {
    pub kind: WalkKind,
    pub k: usize,
    pub log_n: f64,
    pub t0: f64,
    /// `Var Q_1(t_0)`
    pub v: f64,
    pub omega: f64,
    /// `k / log n`
    pub kappa: f64,
}

fn entropy_at(kind: WalkKind, s: f64) -> Result<f64, EntropicError> {
    Ok(entropy_of(kind, s)?)
}

/// Effective time `s` with `H(s) = target`.
pub fn solve_effective_time(kind: WalkKind, target: f64) -> Result<f64, EntropicError> {
    if !(target > 0.0) {
        return Err(EntropicError::NonPositiveTarget(target));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while entropy_at(kind, hi)? < target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(EntropicError::NonPositiveTarget(target));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let h = entropy_at(kind, mid)?;
        if (h - target).abs() <= ENTROPY_TOL {
            return Ok(mid);
        }
        if h < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    Err(EntropicError::NoConvergence(MAX_BISECTIONS))
}

/// Solves for `t_0` on a group of order `n`.
pub fn solve_t0(kind: WalkKind, k: usize, n: u64) -> Result<EntropicSchedule, EntropicError> {
    if n < 3 {
        return Err(EntropicError::Domain {
            k,
            log_n: (n as f64).ln(),
        });
    }
    solve_t0_log(kind, k, (n as f64).ln())
}

/// As [`solve_t0`], parameterised by `log n` so that orders beyond `u64` can be studied.
pub fn solve_t0_log(kind: WalkKind, k: usize, log_n: f64) -> Result<EntropicSchedule, EntropicError> {
    if k < 2 || !(log_n >= 3f64.ln()) {
        return Err(EntropicError::Domain { k, log_n });
    }
    let s0 = solve_effective_time(kind, log_n / k as f64)?;
    let v = q_moments_of(kind, s0)?.var_q1;
    Ok(EntropicSchedule {
        kind,
        k,
        log_n,
        t0: s0 * k as f64,
        v,
        omega: default_omega(v, k),
        kappa: k as f64 / log_n,
    })
}

/// `(v k)^{1/4}`.
pub fn default_omega(v: f64, k: usize) -> f64 {
    (v * k as f64).powf(0.25)
}

impl EntropicSchedule {
    pub fn n(&self) -> f64 {
        self.log_n.exp()
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    /// Per-coordinate entropy target for `t_α`.
    pub fn target(&self, alpha: f64) -> f64 {
        (self.log_n + alpha * (self.v * self.k as f64).sqrt()) / self.k as f64
    }

    pub fn solve_t_alpha(&self, alpha: f64) -> Result<f64, EntropicError> {
        if alpha == 0.0 {
            return Ok(self.t0);
        }
        Ok(solve_effective_time(self.kind, self.target(alpha))? * self.k as f64)
    }

    /// Law of `W_1(t)`.
    pub fn law_at(&self, t: f64) -> Result<LatticeWalkLaw, EntropicError> {
        Ok(LatticeWalkLaw::new(self.kind, t / self.k as f64)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `k ≪ log n`
    #[serde(rename = "<")]
    Below,
    /// `k ≍ log n`
    #[serde(rename = "=")]
    Comparable,
    /// `k ≫ log n`
    #[serde(rename = ">")]
    Above,
}

impl Regime {
    pub fn symbol(self) -> &'static str {
        match self {
            Regime::Below => "<",
            Regime::Comparable => "=",
            Regime::Above => ">",
        }
    }
}

/// κ thresholds separating the three regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub below: f64,
    pub above: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            below: 0.2,
            above: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticT0 {
    pub regime: Regime,
    pub estimate: f64,
}

pub fn classify(kappa: f64, th: RegimeThresholds) -> Regime {
    if kappa < th.below {
        Regime::Below
    } else if kappa > th.above {
        Regime::Above
    } else {
        Regime::Comparable
    }
}

/// Leading-order `t_0`: `k n^{2/k}/(2πe)` for small κ, `k/(κ log κ)` for large κ,
/// and the solved value in between where no closed form exists.
pub fn asymptotic_t0(
    kind: WalkKind,
    k: usize,
    n: u64,
    th: RegimeThresholds,
) -> Result<AsymptoticT0, EntropicError> {
    if k < 2 || n < 3 {
        return Err(EntropicError::Domain {
            k,
            log_n: (n as f64).ln(),
        });
    }
    let log_n = (n as f64).ln();
    let kf = k as f64;
    let kappa = kf / log_n;
    let regime = classify(kappa, th);
    let estimate = match regime {
        Regime::Below => {
            kf * (2.0 * log_n / kf).exp() / (2.0 * std::f64::consts::PI * std::f64::consts::E)
        }
        Regime::Above => kf / (kappa * kappa.ln()),
        Regime::Comparable => solve_t0(kind, k, n)?.t0,
    };
    Ok(AsymptoticT0 { regime, estimate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HypothesisFamily {
    Cutoff,
    Typdist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub holds: bool,
    /// Left- and right-hand sides of the inequality as evaluated.
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub family: HypothesisFamily,
    pub k: usize,
    pub n: u64,
    pub dim: usize,
    pub min_side: u64,
    pub clauses: Vec<Clause>,
}

impl HypothesisReport {
    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

fn clause(name: &str, lhs: f64, rhs: f64, holds: bool) -> Clause {
    Clause {
        name: name.to_string(),
        holds,
        lhs,
        rhs,
    }
}

/// Finite-`n` evaluation of the structural hypotheses. Never fails; the caller
/// decides what to make of the margins.
pub fn validate_hypotheses(
    group: &AbelianGroup,
    k: usize,
    family: HypothesisFamily,
    eta: f64,
    p: f64,
) -> HypothesisReport {
    let n = group.order();
    let log_n = (n as f64).ln();
    let kf = k as f64;
    let d = group.dim() as f64;
    let m_star = group.min_side() as f64;
    let n_root = (log_n / kf).exp();
    let log_k = kf.ln();
    let mut clauses = Vec::new();
    match family {
        HypothesisFamily::Cutoff => {
            let rhs = n_root * log_k * log_k;
            clauses.push(clause("min_side", m_star, rhs, m_star > rhs));
            let rhs = eta * log_n / 3.0;
            clauses.push(clause("small_k", kf, rhs, kf <= rhs));
            let lhs = d * (1.0 / kf + 2.0 * log_k.ln() / log_n);
            clauses.push(clause("small_k_dim", lhs, 1.0 - eta, lhs <= 1.0 - eta));
            let rhs = 0.25 * log_n / log_n.ln().ln().ln();
            clauses.push(clause("large_k", kf, rhs, rhs.is_finite() && kf >= rhs));
            let rhs = log_n / (30.0 * log_k);
            clauses.push(clause("large_k_dim", d, rhs, d <= rhs));
        }
        HypothesisFamily::Typdist => {
            let kappa = kf / log_n;
            let pth = if p.is_infinite() { 1.0 } else { kf.powf(1.0 / p) };
            let ratio = pth * n_root / m_star;
            clauses.push(clause("side_ratio", ratio, 1.0, ratio < 1.0));
            clauses.push(clause("kappa", kappa, 1.0, true));
            let p_clause = if p == 1.0 {
                true
            } else if p.is_infinite() {
                kappa < 1.0
            } else {
                kf <= log_n / log_n.ln()
            };
            clauses.push(clause("p_range", kf, log_n / log_n.ln(), p_clause));
            clauses.push(clause("dim_ratio", d / kf, 1.0, d < kf));
            let rhs = 0.5 * log_n / log_n.ln();
            clauses.push(clause("dim_log", d, rhs, d <= rhs));
        }
    }
    HypothesisReport {
        family,
        k,
        n,
        dim: group.dim(),
        min_side: group.min_side(),
        clauses,
    }
}
