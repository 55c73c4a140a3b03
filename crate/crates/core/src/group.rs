//! Finite Abelian groups `Z_{m_1} ⊕ … ⊕ Z_{m_d}`, their canonical invariant
//! factors and uniformly sampled generator multisets.
//!
//! Elements are coordinate vectors; dense per-group arrays are indexed by the
//! mixed-radix bijection with the last coordinate varying fastest.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the group order.
pub const DEFAULT_MAX_ORDER: u64 = 1 << 32;

/// Largest group for which [`AbelianGroup::subgroup_generated`] runs the closure.
pub const MAX_CLOSURE_ORDER: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("side length {0} is smaller than 2")]
    SideTooSmall(u64),
    #[error("empty decomposition")]
    Empty,
    #[error("group order exceeds the configured maximum {max}")]
    OrderOverflow { max: u64 },
    #[error("coordinate {value} out of range for side length {side}")]
    CoordOutOfRange { value: u64, side: u64 },
    #[error("element has {got} coordinates, group has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for group of order {order}")]
    IndexOutOfRange { index: u64, order: u64 },
    #[error("word has length {got}, generator multiset has {expected}")]
    WordLength { expected: usize, got: usize },
    #[error("group of order {order} too large for closure (limit {limit})")]
    TooLargeForClosure { order: u64, limit: u64 },
    #[error("cannot parse group literal {0:?}")]
    Parse(String),
    #[error("need at least one generator")]
    NoGenerators,
}

/// A finite Abelian group given by a decomposition into cyclic factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbelianGroup {
    side_lengths: Vec<u64>,
    strides: Vec<u64>,
    order: u64,
    invariant_factors: Vec<u64>,
}

/// An element of a group, one residue per cyclic factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    pub coords: Vec<u64>,
}

impl GroupElement {
    pub fn new(coords: Vec<u64>) -> Self {
        Self { coords }
    }
}

/// `k` iid uniform group elements; repeats are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMultiset {
    elems: Vec<GroupElement>,
    seed: u64,
}

impl GeneratorMultiset {
    pub fn from_elements(elems: Vec<GroupElement>) -> Self {
        Self { elems, seed: 0 }
    }

    pub fn elems(&self) -> &[GroupElement] {
        &self.elems
    }

    pub fn k(&self) -> usize {
        self.elems.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl AbelianGroup {
    pub fn new(side_lengths: &[u64]) -> Result<Self, GroupError> {
        Self::with_max_order(side_lengths, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(side_lengths: &[u64], max_order: u64) -> Result<Self, GroupError> {
        if side_lengths.is_empty() {
            return Err(GroupError::Empty);
        }
        let mut order: u64 = 1;
        for &m in side_lengths {
            if m < 2 {
                return Err(GroupError::SideTooSmall(m));
            }
            order = order
                .checked_mul(m)
                .filter(|&n| n <= max_order)
                .ok_or(GroupError::OrderOverflow { max: max_order })?;
        }
        let d = side_lengths.len();
        let mut strides = vec![1u64; d];
        for j in (0..d.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * side_lengths[j + 1];
        }
        Ok(Self {
            side_lengths: side_lengths.to_vec(),
            strides,
            order,
            invariant_factors: invariant_factors(side_lengths),
        })
    }

    pub fn side_lengths(&self) -> &[u64] {
        &self.side_lengths
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.invariant_factors
    }

    /// Minimal number of generators, `d(G)`.
    pub fn dim(&self) -> usize {
        self.invariant_factors.len()
    }

    /// Minimal side length `m_*`, the smallest invariant factor.
    pub fn min_side(&self) -> u64 {
        self.invariant_factors[0]
    }

    pub fn strides(&self) -> &[u64] {
        &self.strides
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::new(vec![0; self.side_lengths.len()])
    }

    fn check(&self, a: &GroupElement) -> Result<(), GroupError> {
        if a.coords.len() != self.side_lengths.len() {
            return Err(GroupError::DimensionMismatch {
                expected: self.side_lengths.len(),
                got: a.coords.len(),
            });
        }
        for (&c, &m) in a.coords.iter().zip(&self.side_lengths) {
            if c >= m {
                return Err(GroupError::CoordOutOfRange { value: c, side: m });
            }
        }
        Ok(())
    }

    pub fn index_of(&self, elem: &GroupElement) -> Result<u64, GroupError> {
        self.check(elem)?;
        Ok(elem
            .coords
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c * s)
            .sum())
    }

    pub fn element_of(&self, index: u64) -> Result<GroupElement, GroupError> {
        if index >= self.order {
            return Err(GroupError::IndexOutOfRange {
                index,
                order: self.order,
            });
        }
        Ok(GroupElement::new(
            self.side_lengths
                .iter()
                .zip(&self.strides)
                .map(|(&m, &s)| (index / s) % m)
                .collect(),
        ))
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(GroupElement::new(
            a.coords
                .iter()
                .zip(&b.coords)
                .zip(&self.side_lengths)
                .map(|((&x, &y), &m)| (x + y) % m)
                .collect(),
        ))
    }

    /// `c·a`; negative `c` is reduced modulo each side length.
    pub fn scale(&self, c: i64, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        Ok(GroupElement::new(
            a.coords
                .iter()
                .zip(&self.side_lengths)
                .map(|(&x, &m)| mul_mod(reduce_signed(c, m), x, m))
                .collect(),
        ))
    }

    pub fn neg(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.scale(-1, a)
    }

    /// Index of `a + g` where `a` is an index and `g` a coordinate vector.
    #[inline]
    pub fn add_coords_to_index(&self, a: u64, g: &[u64]) -> u64 {
        let mut out = 0;
        for ((&m, &s), &gj) in self.side_lengths.iter().zip(&self.strides).zip(g) {
            let digit = (a / s) % m;
            let mut nd = digit + gj;
            if nd >= m {
                nd -= m;
            }
            out += nd * s;
        }
        out
    }

    /// `k` iid uniform elements drawn from a ChaCha stream seeded by `seed`.
    pub fn sample_generators(&self, k: usize, seed: u64) -> Result<GeneratorMultiset, GroupError> {
        if k == 0 {
            return Err(GroupError::NoGenerators);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let elems = (0..k)
            .map(|_| {
                GroupElement::new(
                    self.side_lengths
                        .iter()
                        .map(|&m| rng.gen_range(0..m))
                        .collect(),
                )
            })
            .collect();
        Ok(GeneratorMultiset { elems, seed })
    }

    /// `Σ w_i Z_i`.
    pub fn dot(&self, w: &[i64], gens: &GeneratorMultiset) -> Result<GroupElement, GroupError> {
        if w.len() != gens.k() {
            return Err(GroupError::WordLength {
                expected: gens.k(),
                got: w.len(),
            });
        }
        let mut acc = self.identity();
        for (&wi, z) in w.iter().zip(gens.elems()) {
            let term = self.scale(wi, z)?;
            acc = self.add(&acc, &term)?;
        }
        Ok(acc)
    }

    /// Size of the subgroup generated by `gens`.
    pub fn subgroup_generated(&self, gens: &[GroupElement]) -> Result<u64, GroupError> {
        if self.order > MAX_CLOSURE_ORDER {
            return Err(GroupError::TooLargeForClosure {
                order: self.order,
                limit: MAX_CLOSURE_ORDER,
            });
        }
        for g in gens {
            self.check(g)?;
        }
        let n = self.order as usize;
        let mut seen = vec![false; n];
        let mut stack = vec![0u64];
        seen[0] = true;
        let mut count = 1u64;
        while let Some(x) = stack.pop() {
            for g in gens {
                let y = self.add_coords_to_index(x, &g.coords);
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        Ok(count)
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.side_lengths.iter().map(u64::to_string).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl FromStr for AbelianGroup {
    type Err = GroupError;

    /// Parses `"m1xm2x…xmd"`, e.g. `"65536"` or `"6x4"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sides: Result<Vec<u64>, _> = s
            .trim()
            .split(['x', 'X'])
            .map(|p| p.trim().parse::<u64>())
            .collect();
        let sides = sides.map_err(|_| GroupError::Parse(s.to_string()))?;
        Self::new(&sides)
    }
}

fn reduce_signed(c: i64, m: u64) -> u64 {
    (c as i128).rem_euclid(m as i128) as u64
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn factorize(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

/// Canonical invariant factors `f_1 | f_2 | … | f_d` by prime-power regrouping.
pub fn invariant_factors(side_lengths: &[u64]) -> Vec<u64> {
    let mut by_prime: std::collections::BTreeMap<u64, Vec<u32>> = Default::default();
    for &m in side_lengths {
        for (p, e) in factorize(m) {
            by_prime.entry(p).or_default().push(e);
        }
    }
    let d = by_prime.values().map(Vec::len).max().unwrap_or(0);
    // largest factor first: the i-th one collects the i-th largest power of every prime
    let mut factors = vec![1u64; d];
    for (p, exps) in by_prime.iter_mut() {
        exps.sort_unstable_by(|a, b| b.cmp(a));
        for (i, &e) in exps.iter().enumerate() {
            factors[i] *= p.pow(e);
        }
    }
    factors.reverse();
    if factors.is_empty() {
        factors.push(1);
    }
    factors
}
