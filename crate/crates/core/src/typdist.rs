//! Lattice balls in `Z^k`, minimal radii, and distances on Cayley graphs.
//!
//! `p` is a real in `[1, ∞]`; `f64::INFINITY` stands for the max-norm.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{AbelianGroup, GeneratorMultiset};

/// Largest group handled by [`graph_distances`].
pub const MAX_BFS_ORDER: u64 = 100_000_000;

/// Lattice-point budget for [`lp_distances`].
pub const LP_BUDGET: f64 = 1e8;

/// Largest `k` for exact enumeration of `L_p` balls with `1 < p < ∞`.
pub const MAX_ENUM_K: usize = 6;

/// Largest `k` accepted by [`lp_distances`].
pub const MAX_LP_K: usize = 12;

/// Default `K` in `ξ = 1 − e^{−Kω/k}`.
pub const DEFAULT_XI_K: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypdistError {
    #[error("invalid norm exponent p = {0}")]
    BadP(f64),
    #[error("invalid radius {0}")]
    BadRadius(f64),
    #[error("need k ≥ 1")]
    BadK,
    #[error("no counting mode for k = {k}, p = {p}, R = {r}: below the volume regime and too many dimensions to enumerate")]
    NoCountingMode { k: usize, p: f64, r: f64 },
    #[error("group order {n} exceeds the BFS limit {limit}")]
    TooLarge { n: u64, limit: u64 },
    #[error("lattice search over ~{count:e} points exceeds the budget {budget:e}")]
    Budget { count: f64, budget: f64 },
    #[error("β = {beta} is not attainable: only {reached} of {n} elements were reached")]
    Coverage { beta: f64, reached: u64, n: u64 },
    #[error("minimal radius search overflowed")]
    Overflow,
}

/// Exact lattice count or a volume approximation.
#[derive(Debug, Clone, PartialEq)]
pub enum Count {
    Exact(BigUint),
    VolumeApprox(f64),
}

impl Count {
    pub fn is_exact(&self) -> bool {
        matches!(self, Count::Exact(_))
    }

    pub fn ln(&self) -> f64 {
        match self {
            Count::Exact(b) => big_ln(b),
            Count::VolumeApprox(v) => v.ln(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Count::Exact(b) => b.to_f64().unwrap_or(f64::INFINITY),
            Count::VolumeApprox(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            Count::Exact(b) => Some(b),
            Count::VolumeApprox(_) => None,
        }
    }
}

/// `|B_{k,p}(R)|`, the number of `x ∈ Z^k` (or `Z_+^k` when directed) with `‖x‖_p ≤ R`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallCount {
    pub k: usize,
    pub p: f64,
    pub r: f64,
    pub directed: bool,
    pub count: Count,
}

/// Natural log of a big integer, exact to double precision.
pub fn big_ln(b: &BigUint) -> f64 {
    if b.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = b.bits();
    if bits <= 1000 {
        return b.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (b >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn check_radius(r: f64) -> Result<(), TypdistError> {
    if r.is_nan() || r < 0.0 {
        Err(TypdistError::BadRadius(r))
    } else {
        Ok(())
    }
}

fn check_p(p: f64) -> Result<(), TypdistError> {
    if p.is_nan() || p < 1.0 {
        Err(TypdistError::BadP(p))
    } else {
        Ok(())
    }
}

fn floor_radius(r: f64) -> u64 {
    if r.is_infinite() {
        u64::MAX
    } else {
        r.floor() as u64
    }
}

/// Exact L1 count: `Σ_i 2^i C(k,i) C(⌊R⌋,i)`, or `C(⌊R⌋+k, k)` when directed.
pub fn ball_count_l1(k: usize, r: f64, directed: bool) -> Result<BallCount, TypdistError> {
    if k == 0 {
        return Err(TypdistError::BadK);
    }
    check_radius(r)?;
    let fr = floor_radius(r);
    let count = if directed {
        binomial(fr + k as u64, k as u64)
    } else {
        let mut acc = BigUint::zero();
        for i in 0..=k as u64 {
            acc += (BigUint::one() << i) * binomial(k as u64, i) * binomial(fr, i);
        }
        acc
    };
    Ok(BallCount {
        k,
        p: 1.0,
        r,
        directed,
        count: Count::Exact(count),
    })
}

/// Exact max-norm count `(2⌊R⌋+1)^k`, or `(⌊R⌋+1)^k` when directed.
pub fn ball_count_linf(k: usize, r: f64, directed: bool) -> Result<BallCount, TypdistError> {
    if k == 0 {
        return Err(TypdistError::BadK);
    }
    check_radius(r)?;
    let fr = floor_radius(r);
    let side = if directed { fr + 1 } else { 2 * fr + 1 };
    Ok(BallCount {
        k,
        p: f64::INFINITY,
        r,
        directed,
        count: Count::Exact(BigUint::from(side).pow(k as u32)),
    })
}

/// `ln V_{k,p}` with `V_{k,p} = 2^k Γ(1/p+1)^k / Γ(k/p+1)`, the volume of the unit ball.
pub fn ln_unit_volume(k: usize, p: f64) -> f64 {
    if p.is_infinite() {
        return k as f64 * std::f64::consts::LN_2;
    }
    let k = k as f64;
    k * std::f64::consts::LN_2 + k * libm::lgamma(1.0 / p + 1.0) - libm::lgamma(k / p + 1.0)
}

/// Volume of the real `L_p` ball of radius `R` in `R^k`.
pub fn ball_volume_lp(k: usize, p: f64, r: f64) -> Result<f64, TypdistError> {
    if k == 0 {
        return Err(TypdistError::BadK);
    }
    check_p(p)?;
    check_radius(r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok((ln_unit_volume(k, p) + k as f64 * r.ln()).exp())
}

/// `|x|^p` summed, compared against `R^p` with a relative slack for round-off.
fn within(norm_p: f64, r_p: f64) -> bool {
    norm_p <= r_p * (1.0 + 1e-12)
}

/// Exact enumeration of `{x : ‖x‖_p ≤ R}`; the last axis is counted in closed form.
pub fn enumerate_ball(k: usize, p: f64, r: f64, directed: bool) -> Result<u64, TypdistError> {
    if k == 0 {
        return Err(TypdistError::BadK);
    }
    check_p(p)?;
    check_radius(r)?;
    if p.is_infinite() {
        let fr = r.floor() as u64;
        let side = if directed { fr + 1 } else { 2 * fr + 1 };
        return Ok(side.pow(k as u32));
    }
    let fr = r.floor() as i64;
    let pow: Vec<f64> = (0..=fr).map(|x| (x as f64).powf(p)).collect();
    let r_p = r.powf(p);
    fn last_axis(budget: f64, pow: &[f64], directed: bool) -> u64 {
        // largest x with x^p ≤ budget
        let m = pow.iter().take_while(|&&v| within(v, budget)).count() as u64;
        if m == 0 {
            0
        } else if directed {
            m
        } else {
            2 * m - 1
        }
    }
    fn rec(dims: usize, used: f64, r_p: f64, pow: &[f64], directed: bool) -> u64 {
        if dims == 1 {
            return last_axis(r_p - used, pow, directed);
        }
        let mut total = 0;
        for (x, &v) in pow.iter().enumerate() {
            if !within(used + v, r_p) {
                break;
            }
            let mult = if x == 0 || directed { 1 } else { 2 };
            total += mult * rec(dims - 1, used + v, r_p, pow, directed);
        }
        total
    }
    Ok(rec(k, 0.0, r_p, &pow, directed))
}

/// `|B_{k,p}(R)|` for any `p`: exact for `p ∈ {1, ∞}`, volume for `R ≥ k^{1+1/p}`,
/// exact enumeration below that when `k ≤ 6`.
pub fn ball_count_lp(k: usize, p: f64, r: f64, directed: bool) -> Result<BallCount, TypdistError> {
    check_p(p)?;
    if p == 1.0 {
        return ball_count_l1(k, r, directed);
    }
    if p.is_infinite() {
        return ball_count_linf(k, r, directed);
    }
    if k == 0 {
        return Err(TypdistError::BadK);
    }
    check_radius(r)?;
    let threshold = (k as f64).powf(1.0 + 1.0 / p);
    let count = if r >= threshold {
        let mut v = ball_volume_lp(k, p, r)?;
        if directed {
            v /= 2f64.powi(k as i32);
        }
        Count::VolumeApprox(v)
    } else if k <= MAX_ENUM_K {
        Count::Exact(BigUint::from(enumerate_ball(k, p, r, directed)?))
    } else {
        return Err(TypdistError::NoCountingMode { k, p, r });
    };
    Ok(BallCount {
        k,
        p,
        r,
        directed,
        count,
    })
}

/// `ω = max(log²k, k / n^{1/(2k)})`.
pub fn typdist_omega(k: usize, log_n: f64) -> f64 {
    let kf = k as f64;
    kf.ln().powi(2).max(kf * (-log_n / (2.0 * kf)).exp())
}

/// `ξ = 1 − e^{−Kω/k}`.
pub fn xi(k: usize, omega: f64, big_k: f64) -> f64 {
    1.0 - (-big_k * omega / k as f64).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalRadius {
    pub m: u64,
    pub count: BallCount,
}

/// Smallest integer `M` with `|B_{k,p}(M)| ≥ n e^ω`, by exponential bracketing and bisection.
pub fn minimal_radius(
    k: usize,
    p: f64,
    log_n: f64,
    omega: f64,
    directed: bool,
) -> Result<MinimalRadius, TypdistError> {
    let target = log_n + omega;
    let enough = |m: u64| -> Result<bool, TypdistError> {
        Ok(ball_count_lp(k, p, m as f64, directed)?.count.ln() >= target)
    };
    if enough(0)? {
        return Ok(MinimalRadius {
            m: 0,
            count: ball_count_lp(k, p, 0.0, directed)?,
        });
    }
    let mut hi = 1u64;
    while !enough(hi)? {
        hi = hi.checked_mul(2).ok_or(TypdistError::Overflow)?;
        if hi > 1 << 52 {
            return Err(TypdistError::Overflow);
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if enough(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MinimalRadius {
        m: hi,
        count: ball_count_lp(k, p, hi as f64, directed)?,
    })
}

/// `C_p = 2 Γ(1/p+1) (pe)^{1/p}`; `C_∞ = 2`.
pub fn c_p(p: f64) -> f64 {
    if p.is_infinite() {
        2.0
    } else {
        2.0 * libm::tgamma(1.0 / p + 1.0) * (p * std::f64::consts::E).powf(1.0 / p)
    }
}

/// Reference radius `k^{1/p} n^{1/k} / C_p`. The directed walk reaches
/// `2^{-k}` as many points, so its radius is doubled (`C_p⁺ = C_p / 2`):
/// `k n^{1/k}/e` for `p = 1` and `n^{1/k}` for `p = ∞`.
pub fn reference_radius(k: usize, p: f64, log_n: f64, directed: bool) -> f64 {
    let kf = k as f64;
    let root = (log_n / kf).exp();
    let base = if p.is_infinite() {
        0.5 * root
    } else {
        kf.powf(1.0 / p) * root / c_p(p)
    };
    if directed {
        2.0 * base
    } else {
        base
    }
}

/// Distances from the identity, grouped by value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    pub n: u64,
    pub p: f64,
    pub directed: bool,
    /// `(distance, number of elements)`, ascending in distance.
    pub counts: Vec<(f64, u64)>,
    pub reached: u64,
}

impl DistanceHistogram {
    pub fn unreached(&self) -> u64 {
        self.n - self.reached
    }

    pub fn max_distance(&self) -> f64 {
        self.counts.last().map_or(0.0, |c| c.0)
    }

    /// `D(β) = min { R : |{x : dist(0,x) ≤ R}| ≥ β n }`.
    pub fn quantile(&self, beta: f64) -> Result<f64, TypdistError> {
        let need = beta * self.n as f64;
        if !(beta > 0.0) || need > self.reached as f64 * (1.0 + 1e-12) {
            return Err(TypdistError::Coverage {
                beta,
                reached: self.reached,
                n: self.n,
            });
        }
        let mut acc = 0u64;
        for &(d, c) in &self.counts {
            acc += c;
            if acc as f64 >= need * (1.0 - 1e-12) {
                return Ok(d);
            }
        }
        Ok(self.max_distance())
    }

    /// Number of elements within distance `R`.
    pub fn ball_size(&self, r: f64) -> u64 {
        self.counts
            .iter()
            .take_while(|(d, _)| *d <= r)
            .map(|(_, c)| c)
            .sum()
    }
}

/// Graph distances by breadth-first search over `x → x ± Z_i` (undirected) or `x → x + Z_i`.
pub fn graph_distances(
    group: &AbelianGroup,
    gens: &GeneratorMultiset,
    directed: bool,
) -> Result<DistanceHistogram, TypdistError> {
    let n = group.order();
    if n > MAX_BFS_ORDER {
        return Err(TypdistError::TooLarge {
            n,
            limit: MAX_BFS_ORDER,
        });
    }
    let mut steps: Vec<Vec<u64>> = gens.elems().iter().map(|z| z.coords.clone()).collect();
    if !directed {
        for z in gens.elems() {
            steps.push(group.neg(z).expect("generator lies in the group").coords);
        }
    }
    // single-axis groups step by plain modular addition
    let cyclic = group.side_lengths().len() == 1;
    let flat: Vec<u64> = steps.iter().map(|s| s[0]).collect();
    let mut dist = vec![u16::MAX; n as usize];
    dist[0] = 0;
    let mut counts = vec![1u64];
    let mut frontier = vec![0u64];
    let mut next = Vec::new();
    let mut level: u16 = 0;
    while !frontier.is_empty() {
        level = level.checked_add(1).expect("distance exceeds 16 bits");
        for &x in &frontier {
            for (i, s) in steps.iter().enumerate() {
                let y = if cyclic {
                    let y = x + flat[i];
                    if y >= n {
                        y - n
                    } else {
                        y
                    }
                } else {
                    group.add_coords_to_index(x, s)
                };
                if dist[y as usize] == u16::MAX {
                    dist[y as usize] = level;
                    next.push(y);
                }
            }
        }
        if !next.is_empty() {
            counts.push(next.len() as u64);
        }
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    let reached = counts.iter().sum();
    Ok(DistanceHistogram {
        n,
        p: 1.0,
        directed,
        counts: counts.into_iter().enumerate().map(|(d, c)| (d as f64, c)).collect(),
        reached,
    })
}

#[derive(Debug)]
struct Node {
    key: f64,
    seq: u64,
    x: Vec<i32>,
    /// Index of the last nonzero coordinate, or `usize::MAX` at the origin.
    last: usize,
    elem: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // min-heap on (key, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn norm_key(x: &[i32], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64
    } else {
        x.iter().map(|&v| (v.unsigned_abs() as f64).powf(p)).sum()
    }
}

/// `L_p` distances `inf { ‖x‖_p : Σ x_i Z_i = g }`, for all `g` within `R_max`.
///
/// Lattice points are expanded in increasing norm. Each nonzero point has one
/// canonical parent (its last nonzero coordinate moved one step toward 0), whose
/// norm is no larger, so the search visits every point of the ball exactly once
/// without a visited set. The first point to reach a group element fixes its distance.
pub fn lp_distances(
    group: &AbelianGroup,
    gens: &GeneratorMultiset,
    p: f64,
    r_max: f64,
    directed: bool,
) -> Result<DistanceHistogram, TypdistError> {
    check_p(p)?;
    check_radius(r_max)?;
    let k = gens.k();
    if k == 0 || k > MAX_LP_K {
        return Err(TypdistError::BadK);
    }
    let n = group.order();
    if n > MAX_BFS_ORDER {
        return Err(TypdistError::TooLarge {
            n,
            limit: MAX_BFS_ORDER,
        });
    }
    let size = lattice_size_estimate(k, p, r_max, directed);
    if size > LP_BUDGET {
        return Err(TypdistError::Budget {
            count: size,
            budget: LP_BUDGET,
        });
    }
    let plus: Vec<Vec<u64>> = gens.elems().iter().map(|z| z.coords.clone()).collect();
    let minus: Vec<Vec<u64>> = gens
        .elems()
        .iter()
        .map(|z| group.neg(z).expect("generator lies in the group").coords)
        .collect();
    let limit = if p.is_infinite() { r_max } else { r_max.powf(p) };
    let mut settled = vec![f64::NAN; n as usize];
    let mut remaining = n;
    let mut seq = 0u64;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        key: 0.0,
        seq,
        x: vec![0; k],
        last: usize::MAX,
        elem: 0,
    });
    while let Some(node) = heap.pop() {
        if settled[node.elem as usize].is_nan() {
            settled[node.elem as usize] = if p.is_infinite() {
                node.key
            } else {
                node.key.powf(1.0 / p)
            };
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        let start = if node.last == usize::MAX { 0 } else { node.last };
        for j in start..k {
            let mut push = |delta: i32| {
                let mut x = node.x.clone();
                x[j] += delta;
                let key = norm_key(&x, p);
                if !within(key, limit) {
                    return;
                }
                let step = if delta > 0 { &plus[j] } else { &minus[j] };
                seq += 1;
                heap.push(Node {
                    key,
                    seq,
                    x,
                    last: j,
                    elem: group.add_coords_to_index(node.elem, step),
                });
            };
            if j == node.last {
                // extend the last nonzero coordinate away from 0
                push(node.x[j].signum());
            } else {
                push(1);
                if !directed {
                    push(-1);
                }
            }
        }
    }
    let mut dists: Vec<f64> = settled.into_iter().filter(|d| !d.is_nan()).collect();
    dists.sort_by(f64::total_cmp);
    let mut counts: Vec<(f64, u64)> = Vec::new();
    for d in dists {
        match counts.last_mut() {
            // norms that agree to round-off share a bin
            Some((v, c)) if (d - *v).abs() <= 1e-9 * v.max(1.0) => *c += 1,
            _ => counts.push((d, 1)),
        }
    }
    let reached = counts.iter().map(|c| c.1).sum();
    Ok(DistanceHistogram {
        n,
        p,
        directed,
        counts,
        reached,
    })
}

fn lattice_size_estimate(k: usize, p: f64, r: f64, directed: bool) -> f64 {
    if p == 1.0 || p.is_infinite() {
        let c = if p == 1.0 {
            ball_count_l1(k, r, directed)
        } else {
            ball_count_linf(k, r, directed)
        };
        return c.map(|c| c.count.to_f64()).unwrap_or(f64::INFINITY);
    }
    // the L_p ball sits inside the L_∞ ball of the same radius
    ball_count_linf(k, r, directed)
        .map(|c| c.count.to_f64())
        .unwrap_or(f64::INFINITY)
        .min(
            ball_volume_lp(k, p, r + (k as f64).powf(1.0 / p)).unwrap_or(f64::INFINITY)
                / if directed { 2f64.powi(k as i32) } else { 1.0 },
        )
}
