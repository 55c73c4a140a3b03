//! Bundled property checks of every module, runnable from the CLI.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::entropic::{solve_t0, validate_hypotheses, HypothesisFamily};
use crate::group::AbelianGroup;
use crate::mixingstats::{divisibility_ratio, radius_bounds, srw_unimodal, verify_vz_uniform_with};
use crate::numeric::gcd;
use crate::spectral::CharacterSpectrum;
use crate::typdist::{ball_count_l1, ball_count_linf, ball_count_lp, enumerate_ball};
use crate::walklaw::{entropy_directed_closed_form, LatticeWalkLaw, WalkKind};

/// Result of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    /// The property being checked, in words.
    pub property: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Hooks for mutation testing of the suite itself.
#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    /// gcd used for the claimed law of `v·Z`.
    pub gcd: fn(u64, u64) -> u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { gcd }
    }
}

pub fn run_validation_suite() -> ValidationReport {
    run_validation_suite_with(ValidationOptions::default())
}

pub fn run_validation_suite_with(opts: ValidationOptions) -> ValidationReport {
    let checks = vec![
        check_invariant_factors(),
        check_pmf_mass(),
        check_directed_closed_form(),
        check_solver(),
        check_radius_bounds(),
        check_vz_uniform(opts.gcd),
        check_divisibility(),
        check_unimodality(),
        check_spectral_oracle(),
        check_ball_counts(),
        check_hypotheses_report(),
    ];
    ValidationReport { checks }
}

fn check(name: &'static str, property: &'static str, failures: Vec<String>, total: usize) -> Check {
    Check {
        name,
        property,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{total} cases")
        } else {
            format!("{} of {total} failed: {}", failures.len(), failures.join("; "))
        },
    }
}

fn check_invariant_factors() -> Check {
    let cases: [(&[u64], &[u64]); 5] = [
        (&[2, 3], &[6]),
        (&[4, 6], &[2, 12]),
        (&[2, 2, 2], &[2, 2, 2]),
        (&[12, 18, 5], &[6, 180]),
        (&[65536], &[65536]),
    ];
    let mut bad = Vec::new();
    for (sides, want) in cases {
        let g = AbelianGroup::new(sides).expect("valid sides");
        if g.invariant_factors() != want || g.dim() != want.len() || g.min_side() != want[0] {
            bad.push(format!("{sides:?} -> {:?}", g.invariant_factors()));
        }
        for i in (0..g.order()).step_by(7) {
            if g.index_of(&g.element_of(i).unwrap()).ok() != Some(i) {
                bad.push(format!("{sides:?} index {i} does not round-trip"));
                break;
            }
        }
    }
    check(
        "group.invariant_factors",
        "invariant factors divide each other, multiply to the order, and indexing round-trips",
        bad,
        cases.len(),
    )
}

fn check_pmf_mass() -> Check {
    let mut bad = Vec::new();
    let mut total = 0;
    for kind in [WalkKind::Poisson, WalkKind::Srw] {
        for s in [1e-3, 0.1, 1.0, 7.5, 100.0, 1e4] {
            total += 1;
            let law = LatticeWalkLaw::new(kind, s).unwrap();
            let mass = law.total_mass();
            let mean_err = (law.pmf_mean() - law.mean()).abs();
            if (mass - 1.0).abs() > 1e-12 || mean_err > 1e-9 * s.max(1.0) {
                bad.push(format!("{kind} s={s}: mass {mass}, mean error {mean_err:e}"));
            }
        }
    }
    check("walklaw.mass", "pmf sums to one and has the stated mean", bad, total)
}

fn check_directed_closed_form() -> Check {
    let mut bad = Vec::new();
    let grid: Vec<f64> = (0..=60).map(|i| 1e-3 * (5e4f64).powf(i as f64 / 60.0)).collect();
    for &s in &grid {
        let series = entropy_directed_closed_form(s).unwrap();
        let direct = LatticeWalkLaw::poisson(s).unwrap().entropy();
        if (series - direct).abs() > 1e-10 {
            bad.push(format!("s={s}: {series} vs {direct}"));
        }
    }
    check(
        "walklaw.directed_entropy_series",
        "series for the Poisson entropy agrees with direct summation",
        bad,
        grid.len(),
    )
}

const SOLVER_K: [usize; 5] = [4, 8, 16, 64, 1024];
const SOLVER_N: [u64; 3] = [10_000, 1_000_000, 1_000_000_000];

fn check_solver() -> Check {
    let mut bad = Vec::new();
    let mut total = 0;
    for kind in [WalkKind::Poisson, WalkKind::Srw] {
        for k in SOLVER_K {
            for n in SOLVER_N {
                total += 1;
                match solve_t0(kind, k, n) {
                    Ok(sch) => {
                        let h = LatticeWalkLaw::new(kind, sch.t0 / k as f64).map(|l| l.entropy());
                        let want = (n as f64).ln() / k as f64;
                        match h {
                            Ok(h) if (h - want).abs() <= 1e-10 => {}
                            other => bad.push(format!("{kind} k={k} n={n}: {other:?} vs {want}")),
                        }
                    }
                    Err(e) => bad.push(format!("{kind} k={k} n={n}: {e}")),
                }
            }
        }
    }
    check("entropic.solver", "entropy at t0/k equals log n / k", bad, total)
}

fn check_radius_bounds() -> Check {
    let mut bad = Vec::new();
    let mut total = 0;
    for kind in [WalkKind::Poisson, WalkKind::Srw] {
        for k in SOLVER_K {
            for n in SOLVER_N {
                total += 1;
                let res = solve_t0(kind, k, n)
                    .map_err(|e| e.to_string())
                    .and_then(|s| radius_bounds(&s, 0.0).map_err(|e| e.to_string()));
                match res {
                    Ok(b) if b.holds() => {}
                    other => bad.push(format!("{kind} k={k} n={n}: {other:?}")),
                }
            }
        }
    }
    check(
        "mixingstats.radius_bounds",
        "typicality radius at most r_* and band probability at least p_*",
        bad,
        total,
    )
}

fn check_vz_uniform(gcd_fn: fn(u64, u64) -> u64) -> Check {
    let mut bad = Vec::new();
    let mut total = 0;
    let z12 = AbelianGroup::new(&[12]).unwrap();
    let mut vs: Vec<Vec<i64>> = (0..12).map(|a| vec![a]).collect();
    for a in 0..12 {
        for b in 0..12 {
            vs.push(vec![a, b]);
        }
    }
    let z2z3 = AbelianGroup::new(&[2, 3]).unwrap();
    let mut cases: Vec<(&AbelianGroup, Vec<i64>)> = vs.into_iter().map(|v| (&z12, v)).collect();
    cases.extend((0..6).map(|a| (&z2z3, vec![a])));
    for (g, v) in cases {
        total += 1;
        match verify_vz_uniform_with(g, &v, gcd_fn) {
            Ok(r) if r.matches => {}
            other => bad.push(format!("G={g} v={v:?}: {other:?}")),
        }
    }
    check(
        "mixingstats.vz_uniform",
        "v·Z is uniform on the product of g_j Z_{m_j/g_j} with g_j = gcd(v, m_j)",
        bad,
        total,
    )
}

fn check_divisibility() -> Check {
    let mut bad = Vec::new();
    let mut total = 0;
    for s in [0.5, 2.0, 10.0, 50.0, 200.0] {
        for r in [1u64, 3, 10, 40, 150] {
            total += 1;
            match divisibility_ratio(s, r) {
                Ok(x) if x <= 1.0 + 1e-12 => {}
                other => bad.push(format!("s={s} r={r}: {other:?}")),
            }
        }
    }
    check(
        "mixingstats.divisibility",
        "P(γ divides V | 0 < |V| ≤ 2r) ≤ 1/γ for a symmetric walk increment",
        bad,
        total,
    )
}

fn check_unimodality() -> Check {
    let grid: Vec<f64> = (0..=40).map(|i| 1e-3 * (1e6f64).powf(i as f64 / 40.0)).collect();
    let bad = grid
        .iter()
        .filter(|&&s| !srw_unimodal(s))
        .map(|s| format!("s={s}"))
        .collect();
    check(
        "mixingstats.srw_unimodal",
        "symmetric walk pmf is non-increasing in |x|",
        bad,
        grid.len(),
    )
}

/// Uniformised power series for `exp(t(P − I))` applied to the identity mass.
fn series_oracle(group: &AbelianGroup, steps: &[(Vec<u64>, f64)], t: f64) -> Vec<f64> {
    let n = group.order() as usize;
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    let mut out = vec![0.0; n];
    let mut weight = (-t).exp();
    let terms = (t + 40.0 * t.sqrt() + 60.0) as usize;
    for m in 0..=terms {
        for x in 0..n {
            out[x] += weight * v[x];
        }
        let mut next = vec![0.0; n];
        for (x, &vx) in v.iter().enumerate() {
            if vx != 0.0 {
                for (z, w) in steps {
                    next[group.add_coords_to_index(x as u64, z) as usize] += w * vx;
                }
            }
        }
        v = next;
        weight *= t / (m + 1) as f64;
    }
    out
}

fn check_spectral_oracle() -> Check {
    let groups: [&[u64]; 4] = [&[60], &[4, 6], &[2, 3, 5], &[8, 8]];
    let mut bad = Vec::new();
    let mut total = 0;
    for (i, sides) in groups.iter().enumerate() {
        let g = AbelianGroup::new(sides).unwrap();
        for directed in [false, true] {
            total += 1;
            let gens = g.sample_generators(3, 11 + i as u64).unwrap();
            let k = gens.k() as f64;
            let steps: Vec<(Vec<u64>, f64)> = gens
                .elems()
                .iter()
                .flat_map(|z| {
                    if directed {
                        vec![(z.coords.clone(), 1.0 / k)]
                    } else {
                        vec![(z.coords.clone(), 0.5 / k), (g.neg(z).unwrap().coords, 0.5 / k)]
                    }
                })
                .collect();
            let spec = CharacterSpectrum::new(&g, &gens, directed).unwrap();
            let t = 4.0;
            let want = series_oracle(&g, &steps, t);
            let got = spec.walk_distribution(t).unwrap();
            let err = want
                .iter()
                .zip(got.probs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let l2_direct: f64 = want.iter().map(|p| (g.order() as f64 * p - 1.0).powi(2)).sum::<f64>() / g.order() as f64;
            let parseval = spec.parseval_l2_squared(t);
            if err > 1e-8 || (l2_direct - parseval).abs() > 1e-9 {
                bad.push(format!("G={g} directed={directed}: sup error {err:e}, Parseval gap {:e}", l2_direct - parseval));
            }
        }
    }
    check(
        "spectral.heat_kernel",
        "Fourier heat kernel matches the uniformised series and satisfies Parseval",
        bad,
        total,
    )
}

fn check_ball_counts() -> Check {
    let mut bad = Vec::new();
    let mut total = 0;
    for k in 1..=4 {
        for r in 0..=8 {
            for p in [1.0, 2.0, f64::INFINITY] {
                for directed in [false, true] {
                    total += 1;
                    let brute = enumerate_ball(k, p, r as f64, directed).unwrap();
                    let formula = if p == 1.0 {
                        ball_count_l1(k, r as f64, directed).ok()
                    } else if p.is_infinite() {
                        ball_count_linf(k, r as f64, directed).ok()
                    } else {
                        ball_count_lp(k, p, r as f64, directed).ok().filter(|c| c.count.is_exact())
                    };
                    if let Some(c) = formula {
                        if c.count.to_f64() != brute as f64 {
                            bad.push(format!("k={k} R={r} p={p} directed={directed}: {} vs {brute}", c.count.to_f64()));
                        }
                    }
                }
            }
        }
    }
    for k in 1..=12usize {
        for r in 1..=60u64 {
            total += 1;
            let count = ball_count_l1(k, r as f64, false).unwrap().count;
            let c = count.exact().expect("L1 counts are exact").clone();
            let two_k = BigUint::one() << k;
            let lo = if r as usize >= k { &two_k * binomial(r, k as u64) } else { BigUint::zero() };
            let hi = &two_k * binomial(r + k as u64, k as u64);
            if !(lo <= c && c <= hi) {
                bad.push(format!("k={k} R={r}: {c} outside [{lo}, {hi}]"));
            }
        }
    }
    check(
        "typdist.ball_counts",
        "lattice ball counts agree with enumeration and L1 counts lie between 2^k C(R,k) and 2^k C(R+k,k)",
        bad,
        total,
    )
}

fn binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn check_hypotheses_report() -> Check {
    let g = AbelianGroup::new(&[65536]).unwrap();
    let mut bad = Vec::new();
    for family in [HypothesisFamily::Cutoff, HypothesisFamily::Typdist] {
        match validate_hypotheses(&g, 8, family, 0.1, 1.0) {
            r if !r.clauses.is_empty() && r.dim == 1 && r.min_side == 65536 => {}
            other => bad.push(format!("{family:?}: {other:?}")),
        }
    }
    check(
        "entropic.hypotheses",
        "hypothesis report lists its clauses with d(G) and the minimal side",
        bad,
        2,
    )
}
