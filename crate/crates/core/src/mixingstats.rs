//! Statistics of `Q(t) = −log μ_t(W(t))`, typicality of the auxiliary walk,
//! the Monte Carlo lower bound on the mixing distance and the `D_α` estimator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropic::{EntropicError, EntropicSchedule};
use crate::group::{AbelianGroup, GroupError};
use crate::numeric::{derive_seed, gcd, tag, NeumaierSum};
use crate::walklaw::{LatticeWalkLaw, WalkKind};

/// Trials handled by one RNG stream; the chunking fixes the random stream
/// independently of the worker count.
const CHUNK: u64 = 4096;

/// Cap on the number of pair attempts per requested accepted pair.
const MAX_ATTEMPTS_PER_PAIR: u64 = 10_000;

/// Largest `n^k` enumerated by [`verify_vz_uniform`].
pub const VZ_BRUTE_FORCE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least one trial")]
    NoTrials,
    #[error("ω must be positive, got {0}")]
    BadOmega(f64),
    #[error("typicality radius 2r = {two_r} is not below the smallest side length {min_side}")]
    RadiusTooLarge { two_r: u64, min_side: u64 },
    #[error("no typical pair accepted in {attempts} attempts")]
    NoAcceptedPairs { attempts: u64 },
    #[error("brute force over {size} generator tuples exceeds the limit {limit}")]
    TooLarge { size: u128, limit: u64 },
    #[error(transparent)]
    Entropic(#[from] EntropicError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Standard normal upper tail `P(N(0,1) ≥ α)`.
pub fn psi(alpha: f64) -> f64 {
    0.5 * libm::erfc(alpha / std::f64::consts::SQRT_2)
}

/// Local and global typicality at one time.
#[derive(Debug, Clone)]
pub struct TypicalitySpec {
    pub law: LatticeWalkLaw,
    pub k: usize,
    /// `r_α`
    pub r: u64,
    /// `log n + ω`
    pub global_log_threshold: f64,
    neg_log: Vec<f64>,
}

/// One draw of the auxiliary vector `W = (W_1, …, W_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QSample {
    pub q: f64,
    pub w: Vec<i64>,
    pub locally_typical: bool,
    pub globally_typical: bool,
}

impl QSample {
    pub fn typical(&self) -> bool {
        self.locally_typical && self.globally_typical
    }
}

impl TypicalitySpec {
    pub fn new(law: LatticeWalkLaw, k: usize, log_n: f64, omega: f64) -> Self {
        let r = law.r_alpha(k);
        let neg_log = law
            .pmf()
            .iter()
            .map(|&p| if p > 0.0 { -p.ln() } else { f64::INFINITY })
            .collect();
        Self {
            law,
            k,
            r,
            global_log_threshold: log_n + omega,
            neg_log,
        }
    }

    /// Typicality at `t_α` of `schedule`.
    pub fn at_alpha(schedule: &EntropicSchedule, alpha: f64) -> Result<Self, StatsError> {
        let t = schedule.solve_t_alpha(alpha)?;
        let law = schedule.law_at(t)?;
        Ok(Self::new(law, schedule.k, schedule.log_n, schedule.omega))
    }

    pub fn with_radius(mut self, r: u64) -> Self {
        self.r = r;
        self
    }

    /// `−log ν(x)` for one coordinate.
    pub fn neg_log_pmf(&self, x: i64) -> f64 {
        let (lo, hi) = self.law.window();
        if x < lo || x > hi {
            f64::INFINITY
        } else {
            self.neg_log[(x - lo) as usize]
        }
    }

    pub fn is_local(&self, x: i64) -> bool {
        (x as f64 - self.law.mean()).abs() <= self.r as f64
    }

    fn draw(&self, rng: &mut ChaCha8Rng, w: &mut [i64]) -> (f64, bool) {
        let mut q = 0.0;
        let mut local = true;
        for wi in w.iter_mut() {
            let x = self.law.quantile_draw(rng.gen::<f64>());
            *wi = x;
            q += self.neg_log_pmf(x);
            local &= self.is_local(x);
        }
        (q, local)
    }

    /// Evaluates `q` and both flags for a given vector.
    pub fn classify(&self, w: &[i64]) -> QSample {
        let q: f64 = w.iter().map(|&x| self.neg_log_pmf(x)).sum();
        QSample {
            q,
            w: w.to_vec(),
            locally_typical: w.iter().all(|&x| self.is_local(x)),
            globally_typical: q >= self.global_log_threshold,
        }
    }
}

fn chunk_rng(seed: u64, stream: &str, chunk: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag(stream), chunk))
}

fn chunks(trials: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let n_chunks = trials.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(move |c| (c, CHUNK.min(trials - c * CHUNK)))
}

/// `trials` iid draws of `W` from the `k`-fold product law.
pub fn sample_q(typ: &TypicalitySpec, trials: u64, seed: u64) -> Vec<QSample> {
    let per_chunk: Vec<Vec<QSample>> = chunks(trials)
        .map(|(c, len)| {
            let mut rng = chunk_rng(seed, "sample_q", c);
            let mut w = vec![0i64; typ.k];
            (0..len)
                .map(|_| {
                    let (q, local) = typ.draw(&mut rng, &mut w);
                    QSample {
                        q,
                        w: w.clone(),
                        locally_typical: local,
                        globally_typical: q >= typ.global_log_threshold,
                    }
                })
                .collect()
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

/// A Monte Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Proportion {
    fn from_counts(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            p_hat: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }
}

/// Estimates `P(Q(t) ≤ threshold)` under the law of `W_1(t)`.
pub fn q_below(law: &LatticeWalkLaw, k: usize, threshold: f64, trials: u64, seed: u64, stream: &str) -> Proportion {
    let typ = TypicalitySpec::new(law.clone(), k, 0.0, 0.0);
    let hits: u64 = chunks(trials)
        .map(|(c, len)| {
            let mut rng = chunk_rng(seed, stream, c);
            let mut w = vec![0i64; k];
            (0..len)
                .filter(|_| typ.draw(&mut rng, &mut w).0 <= threshold)
                .count() as u64
        })
        .sum();
    Proportion::from_counts(hits, trials)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    /// `P̂(Q(t) ≤ log n − ω) − e^{−ω}`; may be negative.
    pub value: f64,
    pub stderr: f64,
    pub p_hat: f64,
}

/// Monte Carlo estimate of the lower bound `P(Q(t) ≤ log n − ω) − e^{−ω}` on the TV distance at time `t`.
pub fn lower_bound_estimate(
    schedule: &EntropicSchedule,
    t: f64,
    omega: f64,
    trials: u64,
    seed: u64,
) -> Result<LowerBound, StatsError> {
    if trials == 0 {
        return Err(StatsError::NoTrials);
    }
    if !(omega > 0.0) {
        return Err(StatsError::BadOmega(omega));
    }
    let law = schedule.law_at(t)?;
    let pr = q_below(&law, schedule.k, schedule.log_n - omega, trials, seed, "lower_bound");
    Ok(LowerBound {
        value: pr.p_hat - (-omega).exp(),
        stderr: pr.stderr,
        p_hat: pr.p_hat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltPoint {
    pub alpha: f64,
    pub t: f64,
    pub p_hat: f64,
    pub stderr: f64,
    pub psi: f64,
}

/// `α ↦ P̂(Q(t_α) ≤ log n − ω)` next to `Ψ(α)`.
pub fn clt_profile(
    schedule: &EntropicSchedule,
    alphas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<CltPoint>, StatsError> {
    if trials == 0 {
        return Err(StatsError::NoTrials);
    }
    alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let t = schedule.solve_t_alpha(alpha)?;
            let law = schedule.law_at(t)?;
            let pr = q_below(
                &law,
                schedule.k,
                schedule.log_n - schedule.omega,
                trials,
                derive_seed(seed, tag("clt_profile"), i as u64),
                "clt_profile",
            );
            Ok(CltPoint {
                alpha,
                t,
                p_hat: pr.p_hat,
                stderr: pr.stderr,
                psi: psi(alpha),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DAlphaEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Acceptance rate of a single draw `W ∈ W_α`.
    pub p_typ: f64,
    pub p_typ_stderr: f64,
    pub accepted: u64,
    pub attempts: u64,
    /// Accepted pairs with `V = 0`.
    pub zero_pairs: u64,
    /// `n P(V = 0 | typ_α)` from `E[μ(W) 1_typ(W)] / p_typ²`.
    pub zero_term: f64,
    /// Plain pair average with each `V = 0` pair counting 1; its variance is
    /// dominated by the rare zero pairs.
    pub literal_estimate: f64,
    pub r: u64,
}

/// `P(V·Z = 0)` averaged over uniform `Z`: `∏_j gcd(V_1, …, V_k, m_j) / m_j`, and 1 for `V = 0`.
pub fn collapsed_contribution(group: &AbelianGroup, v: &[i64]) -> f64 {
    let g = v.iter().fold(0u64, |acc, &x| gcd(acc, x.unsigned_abs()));
    if g == 0 {
        return 1.0;
    }
    group
        .side_lengths()
        .iter()
        .map(|&m| gcd(g, m) as f64 / m as f64)
        .product()
}

/// Estimates `D_α = n P(V(t_α)·Z = 0 | typ_α) − 1` over pairs of typical draws.
///
/// Draws are paired in order; a pair is accepted when both members are typical.
/// Sampling stops at `trials` accepted pairs. Pairs with `V ≠ 0` contribute the
/// collapsed gcd product. The `V = 0` part is averaged over `W'` given `W`,
/// which gives `μ(W)` per typical draw: each zero pair would add `n/trials` on
/// its own, with far larger variance than the rest of the sum.
pub fn estimate_d_alpha(
    group: &AbelianGroup,
    schedule: &EntropicSchedule,
    alpha: f64,
    trials: u64,
    seed: u64,
) -> Result<DAlphaEstimate, StatsError> {
    let typ = TypicalitySpec::at_alpha(schedule, alpha)?;
    estimate_d_alpha_with(group, &typ, trials, seed)
}

pub fn estimate_d_alpha_with(
    group: &AbelianGroup,
    typ: &TypicalitySpec,
    trials: u64,
    seed: u64,
) -> Result<DAlphaEstimate, StatsError> {
    if trials == 0 {
        return Err(StatsError::NoTrials);
    }
    let min_side = group.min_side();
    if 2 * typ.r >= min_side {
        return Err(StatsError::RadiusTooLarge {
            two_r: 2 * typ.r,
            min_side,
        });
    }
    let k = typ.k;
    let max_attempts = trials.saturating_mul(MAX_ATTEMPTS_PER_PAIR);
    // chunks are evaluated in parallel batches and consumed in index order
    let batch = rayon::current_num_threads().max(1) as u64 * 4;
    let mut chunk = 0u64;
    let (mut attempts, mut accepted, mut typical_draws, mut zero_pairs) = (0u64, 0u64, 0u64, 0u64);
    let mut sum = NeumaierSum::new();
    let mut sum_sq = NeumaierSum::new();
    let mut mu_sum = NeumaierSum::new();
    let mut mu_sq = NeumaierSum::new();
    'outer: while attempts < max_attempts {
        let results: Vec<Vec<(f64, f64, Option<f64>)>> = (chunk..chunk + batch)
            .into_par_iter()
            .map(|c| {
                let mut rng = chunk_rng(seed, "d_alpha", c);
                let mut w = vec![0i64; k];
                let mut w2 = vec![0i64; k];
                let mut v = vec![0i64; k];
                (0..CHUNK)
                    .map(|_| {
                        let (q1, l1) = typ.draw(&mut rng, &mut w);
                        let (q2, l2) = typ.draw(&mut rng, &mut w2);
                        let a = l1 && q1 >= typ.global_log_threshold;
                        let b = l2 && q2 >= typ.global_log_threshold;
                        let contrib = (a && b).then(|| {
                            for i in 0..k {
                                v[i] = w[i] - w2[i];
                            }
                            collapsed_contribution(group, &v)
                        });
                        // μ(W) of a typical draw, 0 otherwise
                        let mu = |typical: bool, q: f64| if typical { (-q).exp() } else { 0.0 };
                        (mu(a, q1), mu(b, q2), contrib)
                    })
                    .collect()
            })
            .collect();
        chunk += batch;
        for (mu_a, mu_b, contrib) in results.into_iter().flatten() {
            attempts += 1;
            for mu in [mu_a, mu_b] {
                typical_draws += (mu > 0.0) as u64;
                mu_sum.add(mu);
                mu_sq.add(mu * mu);
            }
            if let Some(c) = contrib {
                accepted += 1;
                if c == 1.0 {
                    zero_pairs += 1;
                } else {
                    sum.add(c);
                    sum_sq.add(c * c);
                }
                if accepted == trials {
                    break 'outer;
                }
            }
            if attempts == max_attempts {
                break 'outer;
            }
        }
    }
    if accepted == 0 {
        return Err(StatsError::NoAcceptedPairs { attempts });
    }
    let n = group.order() as f64;
    let m = accepted as f64;
    // V ≠ 0 part, zero pairs counted as 0
    let mean = sum.value() / m;
    let var = if accepted > 1 {
        ((sum_sq.value() - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    let draws = 2 * attempts;
    let d = draws as f64;
    let p_typ = Proportion::from_counts(typical_draws, draws);
    let p = p_typ.p_hat;
    let mu_mean = mu_sum.value() / d;
    let mu_var = (mu_sq.value() / d - mu_mean * mu_mean).max(0.0);
    let zero = mu_mean / (p * p);
    // delta method for the ratio, the two errors taken as independent
    let zero_rel = (mu_var / d / (mu_mean * mu_mean) + (2.0 * p_typ.stderr / p).powi(2)).sqrt();
    let zero_se = if mu_mean > 0.0 { zero * zero_rel } else { 0.0 };
    Ok(DAlphaEstimate {
        estimate: n * (mean + zero) - 1.0,
        stderr: n * (var / m + zero_se * zero_se).sqrt(),
        p_typ: p,
        p_typ_stderr: p_typ.stderr,
        accepted,
        attempts,
        zero_pairs,
        zero_term: n * zero,
        literal_estimate: n * (mean + zero_pairs as f64 / m) - 1.0,
        r: typ.r,
    })
}

/// Outcome of the brute-force check that `v·Z` is uniform on `∏_j g_j Z_{m_j/g_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VzReport {
    pub matches: bool,
    /// Claimed support size `∏_j m_j / g_j`.
    pub claimed_support: u64,
    pub observed_support: u64,
    pub tuples: u64,
}

/// Enumerates all `Z ∈ G^k` (`k = v.len()`) and compares the law of `v·Z` with the claimed uniform law.
pub fn verify_vz_uniform(group: &AbelianGroup, v: &[i64]) -> Result<VzReport, StatsError> {
    verify_vz_uniform_with(group, v, gcd)
}

/// As [`verify_vz_uniform`], with the gcd used for the claimed law supplied by the caller.
pub fn verify_vz_uniform_with(
    group: &AbelianGroup,
    v: &[i64],
    gcd_fn: fn(u64, u64) -> u64,
) -> Result<VzReport, StatsError> {
    let n = group.order();
    let size = (n as u128).pow(v.len() as u32);
    if size > VZ_BRUTE_FORCE_LIMIT as u128 || v.is_empty() {
        return Err(StatsError::TooLarge {
            size,
            limit: VZ_BRUTE_FORCE_LIMIT,
        });
    }
    let tuples = size as u64;
    let sides = group.side_lengths();
    // v_i reduced per axis, so Σ_i v_i z_i is computed coordinate-wise
    let reduced: Vec<Vec<u64>> = v
        .iter()
        .map(|&vi| sides.iter().map(|&m| vi.rem_euclid(m as i64) as u64).collect())
        .collect();
    let mut counts = vec![0u64; n as usize];
    let elems: Vec<Vec<u64>> = (0..n).map(|i| group.element_of(i).unwrap().coords).collect();
    let mut idx = vec![0usize; v.len()];
    for _ in 0..tuples {
        let mut acc = vec![0u64; sides.len()];
        for (i, &e) in idx.iter().enumerate() {
            for (j, &m) in sides.iter().enumerate() {
                acc[j] = (acc[j] + reduced[i][j] * elems[e][j]) % m;
            }
        }
        let x = group.index_of(&crate::group::GroupElement::new(acc))?;
        counts[x as usize] += 1;
        for d in idx.iter_mut().rev() {
            *d += 1;
            if *d < n as usize {
                break;
            }
            *d = 0;
        }
    }
    let g_all = v.iter().fold(0u64, |acc, &x| gcd_fn(acc, x.unsigned_abs()));
    let g: Vec<u64> = sides.iter().map(|&m| gcd_fn(g_all, m)).collect();
    let claimed_support: u64 = sides.iter().zip(&g).map(|(&m, &gj)| m / gj.max(1)).product();
    let mut matches = true;
    let mut observed_support = 0;
    for (x, &c) in counts.iter().enumerate() {
        let coords = &elems[x];
        let in_support = coords.iter().zip(&g).all(|(&c, &gj)| gj != 0 && c % gj == 0);
        if c > 0 {
            observed_support += 1;
        }
        let ok = if in_support {
            c as u128 * claimed_support as u128 == tuples as u128
        } else {
            c == 0
        };
        matches &= ok;
    }
    Ok(VzReport {
        matches,
        claimed_support,
        observed_support,
        tuples,
    })
}

/// Worst `γ · P(γ | V | V ≠ 0, |V| ≤ 2r)` over `γ ∈ [2, 2r]` for `V ~ SRW(2s)`.
///
/// Values at most 1 confirm the divisibility bound for a single coordinate;
/// independent coordinates multiply.
pub fn divisibility_ratio(s: f64, r: u64) -> Result<f64, StatsError> {
    let law = LatticeWalkLaw::new(WalkKind::Srw, 2.0 * s)
        .map_err(|e| StatsError::Entropic(EntropicError::Law(e)))?;
    let two_r = 2 * r as i64;
    let mut total = NeumaierSum::new();
    for x in 1..=two_r {
        total.add(2.0 * law.pmf_at(x));
    }
    let total = total.value();
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for gamma in 2..=two_r.max(2) {
        let mut hit = NeumaierSum::new();
        let mut x = gamma;
        while x <= two_r {
            hit.add(2.0 * law.pmf_at(x));
            x += gamma;
        }
        worst = worst.max(gamma as f64 * hit.value() / total);
    }
    Ok(worst)
}

/// Whether the SRW pmf at effective time `s` is non-increasing in `|x|`.
pub fn srw_unimodal(s: f64) -> bool {
    match LatticeWalkLaw::new(WalkKind::Srw, s) {
        Ok(law) => {
            let (_, hi) = law.window();
            (0..hi).all(|x| law.pmf_at(x) >= law.pmf_at(x + 1))
        }
        Err(_) => false,
    }
}

/// `r_α` and `p_α` next to the comparison values `r_* = ½ n^{1/k} log²k`, `p_* = n^{−1/k} k^{−2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusBounds {
    pub r: u64,
    pub r_star: f64,
    pub p: f64,
    pub p_star: f64,
}

impl RadiusBounds {
    pub fn holds(&self) -> bool {
        self.r as f64 <= self.r_star && self.p >= self.p_star
    }
}

pub fn radius_bounds(schedule: &EntropicSchedule, alpha: f64) -> Result<RadiusBounds, StatsError> {
    let t = schedule.solve_t_alpha(alpha)?;
    let law = schedule.law_at(t)?;
    let k = schedule.k as f64;
    let r = law.r_alpha(schedule.k);
    let root = (schedule.log_n / k).exp();
    Ok(RadiusBounds {
        r,
        r_star: 0.5 * root * k.ln().powi(2),
        p: law.p_alpha(r).unwrap_or(0.0),
        p_star: 1.0 / (root * k * k),
    })
}
