//! Exact law of the continuous-time walk on `G` through the character transform.
//!
//! Characters are indexed by the same mixed-radix scheme as group elements:
//! `χ = (χ_1, …, χ_d)` acts by `x ↦ exp(2πi Σ_r χ_r x_r / m_r)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::group::{AbelianGroup, GeneratorMultiset};
use crate::numeric::NeumaierSum;

/// Default cap on the group order for spectral computations.
pub const DEFAULT_SPECTRAL_MAX: u64 = 1 << 22;

/// Largest tolerated imaginary part after the inverse transform.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Eigenvalues within this distance of 1 count as trivial.
pub const UNIT_EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("group order {n} exceeds the spectral limit {limit}")]
    TooLarge { n: u64, limit: u64 },
    #[error("generator multiset is empty")]
    NoGenerators,
    #[error("time must be finite and non-negative, got {0}")]
    BadTime(f64),
    #[error("imaginary residue {0:e} after inverse transform")]
    Residue(f64),
}

/// `λ_χ` for every character of `G`.
#[derive(Debug, Clone)]
pub struct CharacterSpectrum {
    group: AbelianGroup,
    directed: bool,
    eigenvalues: Vec<Complex64>,
}

/// A probability vector over `G` in mixed-radix order.
#[derive(Debug, Clone)]
pub struct DistributionOverGroup {
    group: AbelianGroup,
    probs: Vec<f64>,
}

/// One sample of the mixing curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub tv: f64,
    pub l2: f64,
}

impl CharacterSpectrum {
    pub fn new(
        group: &AbelianGroup,
        gens: &GeneratorMultiset,
        directed: bool,
    ) -> Result<Self, SpectralError> {
        Self::with_limit(group, gens, directed, DEFAULT_SPECTRAL_MAX)
    }

    /// Direct `O(nk)` evaluation of the full spectrum.
    pub fn with_limit(
        group: &AbelianGroup,
        gens: &GeneratorMultiset,
        directed: bool,
        limit: u64,
    ) -> Result<Self, SpectralError> {
        let n = group.order();
        if n > limit {
            return Err(SpectralError::TooLarge { n, limit });
        }
        if gens.k() == 0 {
            return Err(SpectralError::NoGenerators);
        }
        let sides = group.side_lengths().to_vec();
        let strides = group.strides().to_vec();
        let k = gens.k() as f64;
        let coords: Vec<&[u64]> = gens.elems().iter().map(|g| g.coords.as_slice()).collect();
        let eigenvalues = (0..n)
            .into_par_iter()
            .map(|chi| {
                if chi == 0 {
                    return Complex64::new(1.0, 0.0);
                }
                let mut re = NeumaierSum::new();
                let mut im = NeumaierSum::new();
                for z in &coords {
                    // phase Σ_r χ_r z_r / m_r reduced mod 1, one exact residue per axis
                    let mut frac = 0.0;
                    for r in 0..sides.len() {
                        let m = sides[r];
                        let c = (chi / strides[r]) % m;
                        let prod = ((c as u128 * z[r] as u128) % m as u128) as f64;
                        frac += prod / m as f64;
                    }
                    let theta = 2.0 * PI * frac.fract();
                    re.add(theta.cos());
                    if directed {
                        im.add(theta.sin());
                    }
                }
                Complex64::new(re.value() / k, im.value() / k)
            })
            .collect();
        Ok(Self {
            group: group.clone(),
            directed,
            eigenvalues,
        })
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// True iff more than one eigenvalue sits at 1, i.e. the generators span a proper subgroup.
    pub fn detect_non_generating(&self) -> bool {
        self.eigenvalues
            .iter()
            .filter(|l| (*l - Complex64::new(1.0, 0.0)).norm() <= UNIT_EIGEN_TOL)
            .count()
            > 1
    }

    /// Heat-kernel multipliers `e^{t(λ_χ − 1)}`.
    pub fn heat_kernel(&self, t: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&l| ((l - 1.0) * t).exp())
            .collect()
    }

    /// Law of `S(t)` started at the identity.
    pub fn walk_distribution(&self, t: f64) -> Result<DistributionOverGroup, SpectralError> {
        if !t.is_finite() || t < 0.0 {
            return Err(SpectralError::BadTime(t));
        }
        let mut data = self.heat_kernel(t);
        transform_axes(&self.group, &mut data);
        let n = self.group.order() as f64;
        let mut residue = 0.0f64;
        let probs = data
            .iter()
            .map(|c| {
                residue = residue.max(c.im.abs() / n);
                c.re / n
            })
            .collect();
        if residue > IMAG_RESIDUE_TOL {
            return Err(SpectralError::Residue(residue));
        }
        Ok(DistributionOverGroup {
            group: self.group.clone(),
            probs,
        })
    }

    /// `n Σ_x (p_t(x) − 1/n)²` computed on the character side.
    pub fn parseval_l2_squared(&self, t: f64) -> f64 {
        let mut acc = NeumaierSum::new();
        for h in self.heat_kernel(t).iter().skip(1) {
            acc.add(h.norm_sqr());
        }
        acc.value()
    }
}

/// Forward DFT along every axis (row–column), in place.
fn transform_axes(group: &AbelianGroup, data: &mut [Complex64]) {
    let mut planner = FftPlanner::<f64>::new();
    for (axis, (&m, &stride)) in group
        .side_lengths()
        .iter()
        .zip(group.strides())
        .enumerate()
    {
        let m = m as usize;
        let stride = stride as usize;
        let fft = planner.plan_fft_forward(m);
        if axis + 1 == group.side_lengths().len() {
            // contiguous rows
            data.par_chunks_mut(m).for_each(|row| fft.process(row));
            continue;
        }
        // lines along this axis: block of m·stride holds `stride` interleaved lines
        data.par_chunks_mut(m * stride).for_each(|block| {
            let mut line = vec![Complex64::new(0.0, 0.0); m];
            for offset in 0..stride {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = block[offset + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    block[offset + i * stride] = *v;
                }
            }
        });
    }
}

impl DistributionOverGroup {
    pub fn new(group: &AbelianGroup, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len() as u64, group.order());
        Self {
            group: group.clone(),
            probs,
        }
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    /// Raw values, which may carry round-off of order `1e-16` below zero.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of the element with mixed-radix index `x`, clipped at 0.
    pub fn prob(&self, x: u64) -> f64 {
        self.probs[x as usize].max(0.0)
    }

    pub fn total(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for &p in &self.probs {
            acc.add(p);
        }
        acc.value()
    }

    /// `½ Σ_x |p(x) − 1/n|`.
    pub fn tv_distance(&self) -> f64 {
        let u = 1.0 / self.probs.len() as f64;
        let mut acc = NeumaierSum::new();
        for &p in &self.probs {
            acc.add((p - u).abs());
        }
        0.5 * acc.value()
    }

    /// `√(n Σ_x (p(x) − 1/n)²)`, the 2-norm relative to the uniform law.
    pub fn l2_distance(&self) -> f64 {
        let n = self.probs.len() as f64;
        let u = 1.0 / n;
        let mut acc = NeumaierSum::new();
        for &p in &self.probs {
            acc.add((p - u) * (p - u));
        }
        (n * acc.value()).sqrt()
    }
}

/// TV and L2 distance at each time, reusing one spectrum.
pub fn tv_curve(spectrum: &CharacterSpectrum, times: &[f64]) -> Result<Vec<CurvePoint>, SpectralError> {
    times
        .iter()
        .map(|&t| {
            let dist = spectrum.walk_distribution(t)?;
            let tv = dist.tv_distance();
            let l2 = dist.l2_distance();
            debug_assert!(tv <= 0.5 * l2 + 1e-9, "TV {tv} above half L2 {l2}");
            Ok(CurvePoint { t, tv, l2 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;

    fn gens(elems: &[&[u64]]) -> GeneratorMultiset {
        GeneratorMultiset::from_elements(elems.iter().map(|c| GroupElement::new(c.to_vec())).collect())
    }

    /// Uniformised series `Σ_m Po(t)(m) δ_0 P^m` with the one-step kernel of the walk.
    fn matrix_exponential(group: &AbelianGroup, g: &GeneratorMultiset, directed: bool, t: f64) -> Vec<f64> {
        let n = group.order() as usize;
        let k = g.k() as f64;
        let steps: Vec<(Vec<u64>, f64)> = g
            .elems()
            .iter()
            .flat_map(|z| {
                if directed {
                    vec![(z.coords.clone(), 1.0 / k)]
                } else {
                    let inv = group.neg(z).unwrap().coords;
                    vec![(z.coords.clone(), 0.5 / k), (inv, 0.5 / k)]
                }
            })
            .collect();
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        let mut out = vec![0.0; n];
        let mut weight = (-t).exp();
        let max_m = (t + 40.0 * t.sqrt() + 60.0) as usize;
        for m in 0..=max_m {
            for x in 0..n {
                out[x] += weight * v[x];
            }
            let mut next = vec![0.0; n];
            for x in 0..n {
                if v[x] == 0.0 {
                    continue;
                }
                for (z, w) in &steps {
                    next[group.add_coords_to_index(x as u64, z) as usize] += w * v[x];
                }
            }
            v = next;
            weight *= t / (m + 1) as f64;
        }
        out
    }

    #[test]
    fn trivial_character_and_two_point_walk() {
        let z2 = AbelianGroup::new(&[2]).unwrap();
        let sp = CharacterSpectrum::new(&z2, &gens(&[&[1]]), false).unwrap();
        assert_eq!(sp.eigenvalues()[0], Complex64::new(1.0, 0.0));
        assert!((sp.eigenvalues()[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        for t in [0.0, 0.3, 1.7] {
            let d = sp.walk_distribution(t).unwrap();
            assert!((d.prob(0) - 0.5 * (1.0 + (-2.0 * t).exp())).abs() < 1e-15);
            assert!((d.tv_distance() - 0.5 * (-2.0 * t).exp()).abs() < 1e-15);
        }
        assert!((sp.walk_distribution(0.0).unwrap().tv_distance() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn point_mass_at_time_zero() {
        let g = AbelianGroup::new(&[3, 5, 4]).unwrap();
        let z = g.sample_generators(3, 11).unwrap();
        let d = CharacterSpectrum::new(&g, &z, true).unwrap().walk_distribution(0.0).unwrap();
        assert!((d.prob(0) - 1.0).abs() < 1e-14);
        assert!(d.probs()[1..].iter().all(|p| p.abs() < 1e-14));
    }

    #[test]
    fn non_generating_detection() {
        let z4 = AbelianGroup::new(&[4]).unwrap();
        assert!(!CharacterSpectrum::new(&z4, &gens(&[&[1]]), false).unwrap().detect_non_generating());
        let sp = CharacterSpectrum::new(&z4, &gens(&[&[2], &[2]]), false).unwrap();
        assert!(sp.detect_non_generating());
        assert_eq!(z4.subgroup_generated(gens(&[&[2], &[2]]).elems()).unwrap(), 2);
        let v22 = AbelianGroup::new(&[2, 2]).unwrap();
        assert!(CharacterSpectrum::new(&v22, &gens(&[&[1, 0]]), true).unwrap().detect_non_generating());
    }

    #[test]
    fn agrees_with_matrix_exponential() {
        for (sides, k, directed, t) in [
            (vec![12u64], 2usize, false, 3.0),
            (vec![6, 4], 3, true, 2.5),
            (vec![2, 3, 5], 4, false, 6.0),
            (vec![7, 7], 2, true, 9.0),
        ] {
            let g = AbelianGroup::new(&sides).unwrap();
            let z = g.sample_generators(k, 5).unwrap();
            let d = CharacterSpectrum::new(&g, &z, directed).unwrap().walk_distribution(t).unwrap();
            let oracle = matrix_exponential(&g, &z, directed, t);
            for (a, b) in d.probs().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "{sides:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn parseval_and_tv_bound() {
        let g = AbelianGroup::new(&[8, 9]).unwrap();
        let z = g.sample_generators(3, 2).unwrap();
        let sp = CharacterSpectrum::new(&g, &z, false).unwrap();
        for t in [0.5, 2.0, 8.0] {
            let d = sp.walk_distribution(t).unwrap();
            let l2 = d.l2_distance();
            assert!((l2 * l2 - sp.parseval_l2_squared(t)).abs() < 1e-9);
            assert!(d.tv_distance() <= 0.5 * l2 + 1e-12);
            assert!((d.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_is_non_increasing_and_converges() {
        let g = AbelianGroup::new(&[64]).unwrap();
        let z = gens(&[&[1], &[5], &[12]]);
        let sp = CharacterSpectrum::new(&g, &z, false).unwrap();
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 5.0).collect();
        let curve = tv_curve(&sp, &times).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].tv <= w[0].tv + 1e-12);
        }
        let far = sp.walk_distribution(1e6).unwrap();
        assert!(far.probs().iter().all(|p| (p - 1.0 / 64.0).abs() <= 1e-9));
        let single = sp.walk_distribution(times[3]).unwrap();
        assert_eq!(single.tv_distance(), curve[3].tv);
    }

    #[test]
    fn undirected_spectrum_is_real() {
        let g = AbelianGroup::new(&[10, 6]).unwrap();
        let z = g.sample_generators(5, 3).unwrap();
        let sp = CharacterSpectrum::new(&g, &z, false).unwrap();
        assert!(sp.eigenvalues().iter().all(|l| l.im.abs() <= 1e-12 && l.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn size_limit() {
        let g = AbelianGroup::new(&[1 << 12, 1 << 11]).unwrap();
        let z = g.sample_generators(2, 1).unwrap();
        assert!(matches!(
            CharacterSpectrum::new(&g, &z, false),
            Err(SpectralError::TooLarge { .. })
        ));
    }
}
