//! Law of a single auxiliary coordinate `W_1(t)` at effective time `s = t/k`.
//!
//! Two kinds are supported: the directed walk, where `W_1` is a Poisson
//! process, and the undirected walk, where `W_1` is a continuous-time simple
//! random walk on `Z` with heat kernel `e^{-s} I_x(s)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{accurate_sum, NeumaierSum};

/// Beyond this effective time entropy and `Var Q_1` come from their large-`s` expansions.
pub const ASYMPTOTIC_S: f64 = 1e6;

/// Largest effective time for which a pmf is tabulated.
pub const MAX_TABULATED_S: f64 = 1e10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("effective time must be a finite non-negative number, got {0}")]
    BadTime(f64),
    #[error("mean ± {r} is not a lattice point of the law")]
    OffLattice { r: u64 },
    #[error("point probability underflows at offset {r}; window truncated")]
    Truncated { r: u64 },
    #[error("effective time {0} needs a window too wide to tabulate")]
    TooWide(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkKind {
    /// Rate-1/k Poisson process (directed Cayley graph).
    Poisson,
    /// Rate-1/k simple random walk on `Z` (undirected Cayley graph).
    Srw,
}

impl WalkKind {
    pub fn from_directed(directed: bool) -> Self {
        if directed {
            WalkKind::Poisson
        } else {
            WalkKind::Srw
        }
    }

    pub fn is_directed(self) -> bool {
        matches!(self, WalkKind::Poisson)
    }
}

impl std::str::FromStr for WalkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" | "directed" => Ok(WalkKind::Poisson),
            "srw" | "undirected" => Ok(WalkKind::Srw),
            other => Err(format!("unknown walk kind {other:?} (expected poisson|srw)")),
        }
    }
}

impl std::fmt::Display for WalkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WalkKind::Poisson => "poisson",
            WalkKind::Srw => "srw",
        })
    }
}

/// Truncated pmf over an integer window `[lo, lo + len)`.
#[derive(Debug, Clone)]
pub struct LatticeWalkLaw {
    kind: WalkKind,
    s: f64,
    lo: i64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
}

/// Moments of `Q_1 = -log ν(W_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QMoments {
    pub mean_q1: f64,
    pub var_q1: f64,
    pub fourth_central_q1: f64,
}

/// Exact tail and point probabilities around the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailStats {
    /// `P(X ≥ mean + r)`
    pub upper_tail: f64,
    /// `P(X = mean + r)`
    pub upper_point: f64,
    /// `P(X ≤ mean − r)`; `None` when `mean − r` lies below the support.
    pub lower_tail: Option<f64>,
    pub lower_point: Option<f64>,
}

impl LatticeWalkLaw {
    pub fn new(kind: WalkKind, s: f64) -> Result<Self, LawError> {
        match kind {
            WalkKind::Poisson => Self::poisson(s),
            WalkKind::Srw => Self::srw(s),
        }
    }

    /// `Po(s)`, built by the ratio recurrence outward from the mode and normalised.
    pub fn poisson(s: f64) -> Result<Self, LawError> {
        check_time(s)?;
        if s == 0.0 {
            return Ok(Self::point_mass(WalkKind::Poisson));
        }
        let mode = s.floor() as usize;
        let cut = 1e-19;
        let mut right = vec![1.0f64];
        let mut x = mode;
        loop {
            let next = right.last().unwrap() * s / (x + 1) as f64;
            x += 1;
            if next < cut && x as f64 > s {
                break;
            }
            right.push(next);
        }
        let mut left = Vec::new();
        let mut cur = 1.0f64;
        let mut x = mode;
        while x > 0 {
            cur *= x as f64 / s;
            x -= 1;
            if cur < cut {
                break;
            }
            left.push(cur);
        }
        let lo = (mode - left.len()) as i64;
        left.reverse();
        left.extend(right);
        Ok(Self::finish(WalkKind::Poisson, s, lo, left))
    }

    /// Continuous-time SRW: `pmf(x) = e^{-s} I_|x|(s)`.
    ///
    /// The Bessel ratios come from Miller's backward recurrence
    /// `I_{x-1} = (2x/s) I_x + I_{x+1}`; normalising the two-sided sum to one
    /// fixes the scale, since `Σ_x e^{-s} I_x(s) = 1`.
    pub fn srw(s: f64) -> Result<Self, LawError> {
        check_time(s)?;
        if s == 0.0 {
            return Ok(Self::point_mass(WalkKind::Srw));
        }
        let hi = (15.0 * s.sqrt()).ceil() as usize + 30;
        let start = 2 * hi + 60;
        let mut vals = vec![0.0f64; hi + 1];
        let (mut above, mut cur) = (0.0f64, 1e-280f64);
        for x in (1..=start).rev() {
            let below = (2.0 * x as f64 / s) * cur + above;
            above = cur;
            cur = below;
            if x - 1 <= hi {
                vals[x - 1] = cur;
            }
            if cur > 1e250 {
                cur *= 1e-250;
                above *= 1e-250;
                for v in vals.iter_mut() {
                    *v *= 1e-250;
                }
            }
        }
        let mut full = Vec::with_capacity(2 * hi + 1);
        full.extend(vals[1..].iter().rev());
        full.extend(vals.iter());
        Ok(Self::finish(WalkKind::Srw, s, -(hi as i64), full))
    }

    fn point_mass(kind: WalkKind) -> Self {
        Self {
            kind,
            s: 0.0,
            lo: 0,
            pmf: vec![1.0],
            cdf: vec![1.0],
            mean: 0.0,
        }
    }

    fn finish(kind: WalkKind, s: f64, mut lo: i64, mut w: Vec<f64>) -> Self {
        let mut total = NeumaierSum::new();
        for &v in &w {
            total.add(v);
        }
        let z = total.value();
        for v in w.iter_mut() {
            *v /= z;
        }
        // drop underflowed ends, symmetrically for the SRW
        let mut cut_lo = 0;
        while cut_lo < w.len() && w[cut_lo] < f64::MIN_POSITIVE {
            cut_lo += 1;
        }
        let mut cut_hi = 0;
        while cut_hi < w.len() - cut_lo && w[w.len() - 1 - cut_hi] < f64::MIN_POSITIVE {
            cut_hi += 1;
        }
        if kind == WalkKind::Srw {
            let c = cut_lo.min(cut_hi);
            cut_lo = c;
            cut_hi = c;
        }
        w.truncate(w.len() - cut_hi);
        w.drain(..cut_lo);
        lo += cut_lo as i64;
        let mean = match kind {
            WalkKind::Poisson => s,
            WalkKind::Srw => 0.0,
        };
        let mut cdf = Vec::with_capacity(w.len());
        let mut acc = NeumaierSum::new();
        for &v in &w {
            acc.add(v);
            cdf.push(acc.value());
        }
        Self {
            kind,
            s,
            lo,
            pmf: w,
            cdf,
            mean,
        }
    }

    pub fn kind(&self) -> WalkKind {
        self.kind
    }

    /// Effective time `s = t/k`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Inclusive window `[lo, hi]`.
    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.lo + self.pmf.len() as i64 - 1)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn pmf_at(&self, x: i64) -> f64 {
        let i = x - self.lo;
        if i < 0 || i as usize >= self.pmf.len() {
            0.0
        } else {
            self.pmf[i as usize]
        }
    }

    /// Exact mean (`s` for Poisson, `0` for the SRW).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Mean of the truncated pmf, summed directly.
    pub fn pmf_mean(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for (i, &p) in self.pmf.iter().enumerate() {
            acc.add(p * (self.lo + i as i64) as f64);
        }
        acc.value()
    }

    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    /// Inverse-CDF draw for a uniform `u ∈ [0, 1)`.
    pub fn quantile_draw(&self, u: f64) -> i64 {
        let target = u * self.total_mass();
        let i = self.cdf.partition_point(|&c| c <= target);
        self.lo + i.min(self.pmf.len() - 1) as i64
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        let mut terms: Vec<f64> = self
            .pmf
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .collect();
        accurate_sum(&mut terms)
    }

    pub fn q_moments(&self) -> QMoments {
        let h = self.entropy();
        let mut second = Vec::with_capacity(self.pmf.len());
        let mut fourth = Vec::with_capacity(self.pmf.len());
        for &p in self.pmf.iter().filter(|&&p| p > 0.0) {
            let d = -p.ln() - h;
            let d2 = d * d;
            second.push(p * d2);
            fourth.push(p * d2 * d2);
        }
        QMoments {
            mean_q1: h,
            var_q1: accurate_sum(&mut second),
            fourth_central_q1: accurate_sum(&mut fourth),
        }
    }

    /// `P(|W_1 − E W_1| > r)`, summed over the lattice points outside the band.
    pub fn deviation_tail(&self, r: u64) -> f64 {
        let mut terms: Vec<f64> = self
            .pmf
            .iter()
            .enumerate()
            .filter(|(i, _)| ((self.lo + *i as i64) as f64 - self.mean).abs() > r as f64)
            .map(|(_, &p)| p)
            .collect();
        accurate_sum(&mut terms)
    }

    /// Smallest `r ≥ 0` with `P(|W_1 − E W_1| > r) ≤ k^{-3/2}`.
    pub fn r_alpha(&self, k: usize) -> u64 {
        let threshold = (k as f64).powf(-1.5);
        let mut r = 0;
        while self.deviation_tail(r) > threshold {
            r += 1;
        }
        r
    }

    /// Support points `x` with `|x − E W_1| ≤ r`.
    pub fn band(&self, r: u64) -> impl Iterator<Item = i64> + '_ {
        let mut lo = (self.mean - r as f64).ceil() as i64;
        if self.kind == WalkKind::Poisson {
            lo = lo.max(0);
        }
        let hi = (self.mean + r as f64).floor() as i64;
        lo..=hi
    }

    /// `min { P(W_1 = x) : |x − E W_1| ≤ r }`; `None` if the band holds no lattice point.
    pub fn p_alpha(&self, r: u64) -> Option<f64> {
        self.band(r).map(|x| self.pmf_at(x)).reduce(f64::min)
    }

    pub fn tail_stats(&self, r: u64) -> Result<TailStats, LawError> {
        let up = self.mean + r as f64;
        if (up - up.round()).abs() > 1e-9 {
            return Err(LawError::OffLattice { r });
        }
        let up = up.round() as i64;
        let upper_point = self.pmf_at(up);
        if upper_point == 0.0 {
            return Err(LawError::Truncated { r });
        }
        let (wlo, whi) = self.window();
        let sum_range = |a: i64, b: i64| {
            let mut t: Vec<f64> = (a.max(wlo)..=b.min(whi)).map(|x| self.pmf_at(x)).collect();
            accurate_sum(&mut t)
        };
        let upper_tail = sum_range(up, whi);
        let down = (self.mean - r as f64).round() as i64;
        let (lower_tail, lower_point) = if down < wlo {
            (None, None)
        } else {
            (Some(sum_range(wlo, down)), Some(self.pmf_at(down)))
        };
        Ok(TailStats {
            upper_tail,
            upper_point,
            lower_tail,
            lower_point,
        })
    }
}

fn check_time(s: f64) -> Result<(), LawError> {
    if !s.is_finite() || s < 0.0 {
        Err(LawError::BadTime(s))
    } else if s > MAX_TABULATED_S {
        Err(LawError::TooWide(s))
    } else {
        Ok(())
    }
}

/// Large-`s` entropy: `½ log(2πes)` minus the Edgeworth correction.
///
/// Poisson: `1/(12s) + 1/(24s²) + 19/(360s³)`. SRW (all odd cumulants vanish,
/// excess kurtosis `1/s`): `1/(48s²)`. Lattice corrections are exponentially small.
pub fn entropy_asymptotic(kind: WalkKind, s: f64) -> f64 {
    let gauss = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * s).ln();
    match kind {
        WalkKind::Poisson => {
            gauss - 1.0 / (12.0 * s) - 1.0 / (24.0 * s * s) - 19.0 / (360.0 * s * s * s)
        }
        WalkKind::Srw => gauss - 1.0 / (48.0 * s * s),
    }
}

/// Entropy of `W_1` at effective time `s`, tabulated or asymptotic.
pub fn entropy_of(kind: WalkKind, s: f64) -> Result<f64, LawError> {
    if s.is_finite() && s > ASYMPTOTIC_S {
        Ok(entropy_asymptotic(kind, s))
    } else {
        Ok(LatticeWalkLaw::new(kind, s)?.entropy())
    }
}

/// `Q_1` moments at effective time `s`. Past [`ASYMPTOTIC_S`] the Gaussian limits
/// (`Var = ½`, fourth central moment `3/4`) are returned; their error is `O(1/s)`.
pub fn q_moments_of(kind: WalkKind, s: f64) -> Result<QMoments, LawError> {
    if s.is_finite() && s > ASYMPTOTIC_S {
        Ok(QMoments {
            mean_q1: entropy_asymptotic(kind, s),
            var_q1: 0.5,
            fourth_central_q1: 0.75,
        })
    } else {
        Ok(LatticeWalkLaw::new(kind, s)?.q_moments())
    }
}

/// Directed entropy in closed series form,
/// `s log(1/s) + s + e^{-s} Σ_{ℓ≥2} s^ℓ log(ℓ!)/ℓ!`.
pub fn entropy_directed_closed_form(s: f64) -> Result<f64, LawError> {
    check_time(s)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    // log-space terms: ℓ log s − log ℓ! + log log ℓ!
    let mut terms = Vec::new();
    let mut log_fact = 0.0f64; // log ℓ!
    let mut l = 1u64;
    loop {
        l += 1;
        log_fact += (l as f64).ln();
        let log_term = l as f64 * s.ln() - log_fact - s + log_fact.ln();
        let term = log_term.exp();
        terms.push(term);
        // terms decrease once ℓ is past s; stop when they cannot matter
        if l as f64 > s + 10.0 && term < 1e-18 {
            break;
        }
    }
    terms.push(s * (1.0 / s).ln());
    terms.push(s);
    Ok(accurate_sum(&mut terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Poisson mixture of symmetric ±1 step counts, an independent route to the SRW pmf.
    fn srw_pmf_by_mixture(s: f64, x: i64) -> f64 {
        let x = x.unsigned_abs();
        let mut acc = 0.0;
        let mut log_po = -s; // log Po(s)(0)
        let mut log_fact = 0.0;
        let max_n = (s + 40.0 * s.sqrt() + 60.0) as u64;
        for n in 0..=max_n {
            if n > 0 {
                log_fact += (n as f64).ln();
                log_po = -s + n as f64 * s.ln() - log_fact;
            }
            if n >= x && (n - x).is_multiple_of(2) {
                let up = (n + x) / 2;
                let log_binom = ln_binom(n, up) - n as f64 * std::f64::consts::LN_2;
                acc += (log_po + log_binom).exp();
            }
        }
        acc
    }

    fn ln_binom(n: u64, k: u64) -> f64 {
        let mut r = 0.0;
        for i in 0..k.min(n - k) {
            r += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
        }
        r
    }

    /// Direct series for `e^{-s} I_0(s) = e^{-s} Σ (s/2)^{2j}/(j!)^2`.
    fn bessel_i0_scaled(s: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..200 {
            term *= (s / 2.0) * (s / 2.0) / (j as f64 * j as f64);
            sum += term;
        }
        (-s).exp() * sum
    }

    #[test]
    fn point_masses() {
        for kind in [WalkKind::Poisson, WalkKind::Srw] {
            let law = LatticeWalkLaw::new(kind, 0.0).unwrap();
            assert_eq!(law.pmf(), &[1.0]);
            assert_eq!(law.entropy(), 0.0);
            assert_eq!(
                law.q_moments(),
                QMoments {
                    mean_q1: 0.0,
                    var_q1: 0.0,
                    fourth_central_q1: 0.0
                }
            );
            assert_eq!(law.r_alpha(7), 0);
        }
    }

    #[test]
    fn bad_times_rejected() {
        assert!(LatticeWalkLaw::poisson(-1.0).is_err());
        assert!(LatticeWalkLaw::srw(f64::NAN).is_err());
        assert!(entropy_directed_closed_form(-0.5).is_err());
    }

    #[test]
    fn poisson_values() {
        let law = LatticeWalkLaw::poisson(1.0).unwrap();
        assert!((law.pmf_at(0) - (-1.0f64).exp()).abs() < 1e-15);
        let law = LatticeWalkLaw::poisson(50.0).unwrap();
        assert!((law.pmf_mean() - 50.0).abs() < 1e-9);
        assert_eq!(law.window().0.max(0), law.window().0);
    }

    #[test]
    fn poisson_entropy_by_direct_summation() {
        // oracle: −Σ p log p with p from log-gamma, summed over 0..=60
        let s = 1.0f64;
        let mut h = 0.0;
        let mut log_fact = 0.0;
        for x in 0..=60u32 {
            if x > 0 {
                log_fact += (x as f64).ln();
            }
            let lp = -s + x as f64 * s.ln() - log_fact;
            h -= lp.exp() * lp;
        }
        let law = LatticeWalkLaw::poisson(1.0).unwrap();
        assert!((law.entropy() - h).abs() < 1e-12);
        assert!((h - 1.304_842).abs() < 1e-6);
    }

    #[test]
    fn large_s_entropy_is_gaussian() {
        let law = LatticeWalkLaw::poisson(1e4).unwrap();
        let gauss = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * 1e4).ln();
        assert!((law.entropy() - gauss).abs() < 1e-3);
    }

    #[test]
    fn srw_matches_bessel_and_mixture() {
        let law = LatticeWalkLaw::srw(2.0).unwrap();
        assert!((law.pmf_at(0) - bessel_i0_scaled(2.0)).abs() < 1e-14);
        assert!((law.pmf_at(0) - 0.308_508).abs() < 1e-6);
        for s in [0.01, 0.5, 2.0, 7.5, 30.0] {
            let law = LatticeWalkLaw::srw(s).unwrap();
            for x in -8..=8 {
                let a = law.pmf_at(x);
                let b = srw_pmf_by_mixture(s, x);
                assert!((a - b).abs() <= 1e-13 * b.max(1e-300) + 1e-300, "s={s} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn srw_is_symmetric_and_unimodal() {
        let mut grid: Vec<f64> = (1..=1000).map(|i| i as f64 * 0.1).collect();
        grid.push(0.05);
        for s in grid {
            let law = LatticeWalkLaw::srw(s).unwrap();
            let (lo, hi) = law.window();
            assert_eq!(lo, -hi);
            for x in 0..=hi {
                assert!((law.pmf_at(x) - law.pmf_at(-x)).abs() <= 1e-14);
            }
            for m in 0..hi {
                assert!(law.pmf_at(m) >= law.pmf_at(m + 1), "s={s} m={m}");
            }
        }
    }

    #[test]
    fn truncation_invariants() {
        for &s in &[1e-3, 0.3, 1.0, 4.0, 17.0, 250.0, 1e4] {
            for kind in [WalkKind::Poisson, WalkKind::Srw] {
                let law = LatticeWalkLaw::new(kind, s).unwrap();
                let m = law.total_mass();
                assert!((1.0 - 1e-12..=1.0 + 1e-14).contains(&m), "{kind} {s}: {m}");
                assert!(law.pmf().iter().all(|&p| p >= 0.0));
                // outer mass estimate: the next term of the recurrence is below trim level
                let (lo, hi) = law.window();
                assert!(law.pmf_at(hi) < 1e-14);
                if kind == WalkKind::Srw {
                    assert!(law.pmf_at(lo) < 1e-14);
                } else {
                    assert!(lo == 0 || law.pmf_at(lo) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn closed_form_entropy() {
        assert_eq!(entropy_directed_closed_form(0.0).unwrap(), 0.0);
        let direct = LatticeWalkLaw::poisson(1.0).unwrap().entropy();
        assert!((entropy_directed_closed_form(1.0).unwrap() - direct).abs() < 1e-10);
        let s = 1e-3f64;
        let approx = s * (1.0 / s).ln() + s;
        assert!((entropy_directed_closed_form(s).unwrap() - approx).abs() < 1e-4);
    }

    #[test]
    fn closed_form_agrees_on_grid() {
        let mut s = 1e-3;
        while s <= 50.0 {
            let a = entropy_directed_closed_form(s).unwrap();
            let b = LatticeWalkLaw::poisson(s).unwrap().entropy();
            assert!((a - b).abs() <= 1e-10, "s={s}: {a} vs {b}");
            s *= 1.17;
        }
    }

    #[test]
    fn variance_limits() {
        let v = LatticeWalkLaw::srw(1e4).unwrap().q_moments().var_q1;
        assert!((v - 0.5).abs() <= 0.02, "{v}");
        let s = 1e-3f64;
        let v = LatticeWalkLaw::poisson(s).unwrap().q_moments().var_q1;
        let reference = s * (1.0 / s).ln().powi(2);
        assert!((v / reference - 1.0).abs() <= 0.2, "{v} vs {reference}");
    }

    #[test]
    fn fourth_moment_dominates_variance_squared() {
        for &s in &[0.01, 0.7, 3.0, 40.0] {
            for kind in [WalkKind::Poisson, WalkKind::Srw] {
                let m = LatticeWalkLaw::new(kind, s).unwrap().q_moments();
                assert!(m.var_q1 >= 0.0);
                assert!(m.fourth_central_q1 >= m.var_q1 * m.var_q1 * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn r_and_p_examples() {
        let law = LatticeWalkLaw::poisson(1.0).unwrap();
        // P(|X−1|>0) ≈ 0.632 and P(|X−1|>1) ≈ 0.080 against threshold 1/8
        assert!((law.deviation_tail(0) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((law.deviation_tail(1) - 0.080_301).abs() < 1e-6);
        assert_eq!(law.r_alpha(4), 1);
        for &s in &[1e-3, 0.4, 2.5, 80.0] {
            for kind in [WalkKind::Poisson, WalkKind::Srw] {
                let law = LatticeWalkLaw::new(kind, s).unwrap();
                for k in [2usize, 5, 64, 1024] {
                    let r = law.r_alpha(k);
                    assert!(law.p_alpha(r).unwrap() > 0.0);
                }
            }
        }
    }

    #[test]
    fn tail_stat_examples() {
        let law = LatticeWalkLaw::poisson(1.0).unwrap();
        let t = law.tail_stats(0).unwrap();
        assert!((t.upper_tail - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!(law.tail_stats(0).is_ok());
        assert!(matches!(
            LatticeWalkLaw::poisson(1.5).unwrap().tail_stats(1),
            Err(LawError::OffLattice { .. })
        ));
        assert!(matches!(
            law.tail_stats(500),
            Err(LawError::Truncated { .. })
        ));

        let (s, r) = (100.0, 10.0);
        let t = LatticeWalkLaw::poisson(s).unwrap().tail_stats(r as u64).unwrap();
        let ratio = t.upper_tail / t.upper_point;
        let reference = (s / r).max(1.0);
        assert!(ratio >= 0.1 * reference && ratio <= 10.0 * reference, "{ratio}");

        let (s, r) = (100.0f64, 150.0f64);
        let t = LatticeWalkLaw::srw(s).unwrap().tail_stats(r as u64).unwrap();
        let neg_log = -t.upper_tail.ln();
        let reference = r * (r / s).min(1.0) * (r / s).max(std::f64::consts::E).ln();
        assert!(neg_log >= reference / 10.0 && neg_log <= reference * 10.0, "{neg_log}");
    }

    #[test]
    fn entropy_is_increasing() {
        for kind in [WalkKind::Poisson, WalkKind::Srw] {
            let mut prev = -1.0;
            let mut s = 1e-4;
            while s < 2e4 {
                let h = LatticeWalkLaw::new(kind, s).unwrap().entropy();
                assert!(h > prev, "{kind} s={s}");
                prev = h;
                s *= 1.3;
            }
        }
    }

    #[test]
    fn gaussian_entropy_error_decreases() {
        for kind in [WalkKind::Poisson, WalkKind::Srw] {
            let errs: Vec<f64> = [1e2, 1e3, 1e4]
                .iter()
                .map(|&s| {
                    let g = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * s).ln();
                    (LatticeWalkLaw::new(kind, s).unwrap().entropy() - g).abs()
                })
                .collect();
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "{kind}: {errs:?}");
        }
    }

    #[test]
    fn asymptotic_entropy_matches_tabulated() {
        for kind in [WalkKind::Poisson, WalkKind::Srw] {
            for s in [1e4, 1e5, 1e6] {
                let direct = LatticeWalkLaw::new(kind, s).unwrap().entropy();
                let asym = entropy_asymptotic(kind, s);
                assert!((direct - asym).abs() < 1e-11, "{kind} s={s}: {direct} vs {asym}");
            }
        }
        assert!(matches!(
            LatticeWalkLaw::srw(1e12),
            Err(LawError::TooWide(_))
        ));
        assert!(entropy_of(WalkKind::Srw, 1e12).is_ok());
    }

    #[test]
    fn inverse_cdf_covers_window() {
        let law = LatticeWalkLaw::srw(3.0).unwrap();
        let (lo, hi) = law.window();
        assert_eq!(law.quantile_draw(0.0), lo);
        assert!(law.quantile_draw(0.999_999_999_999) <= hi);
        assert_eq!(law.quantile_draw(0.5), 0);
    }
}
