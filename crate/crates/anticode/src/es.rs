//! The orthogonal decomposition f = sum_S f^{=S} over a product measure,
//! built from conditional means by inclusion-exclusion:
//! f^{⊂J}(x) = E[f(y) | y_J = x_J], f^{=S} = sum_{J ⊆ S} (-1)^{|S\J|} f^{⊂J}.

use std::collections::BTreeMap;

use crate::measure::ProductMeasure;
use crate::realfn::{RealFn, Weights};
use crate::space::MixedShape;
use crate::{Error, Result};

/// Coordinate sets are bitmasks over 0..n.
pub type CoordMask = u64;

pub fn mask_from_coords(coords: &[usize]) -> CoordMask {
    coords.iter().fold(0, |acc, &i| acc | 1 << i)
}

pub fn coords_from_mask(mask: CoordMask) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

/// E[f(y) | y_J = x_J] as a function on the full space, constant on each
/// fiber of the J-coordinates.
pub fn conditional_mean(f: &RealFn, nu: &ProductMeasure, keep: CoordMask) -> Result<RealFn> {
    check_measure(f.shape(), nu)?;
    let factors: Vec<Vec<f64>> = (0..f.shape().n()).map(|i| nu.factor_f64(i)).collect();
    conditional_mean_f64(f, &factors, keep)
}

/// Same conditional mean with the measure given directly as f64 factors,
/// for measures that only exist numerically (chain stationaries).
pub fn conditional_mean_f64(f: &RealFn, factors: &[Vec<f64>], keep: CoordMask) -> Result<RealFn> {
    let shape = f.shape().clone();
    let n = shape.n();
    if n > 63 {
        return Err(Error::Budget("coordinate masks support n <= 63".into()));
    }
    if factors.len() != n || (0..n).any(|i| factors[i].len() != shape.radix(i)) {
        return Err(Error::ShapeMismatch("factor list does not match the space".into()));
    }
    let kept: Vec<usize> = (0..n).filter(|i| keep >> i & 1 == 1).collect();

    // Accumulate weighted sums per J-pattern; complement weights sum to 1
    // per fiber, so no renormalisation is needed.
    let mut pattern_size = 1usize;
    for &i in &kept {
        pattern_size *= shape.radix(i);
    }
    let mut acc = vec![0.0f64; pattern_size.max(1)];
    let pattern_rank = |coords: &[u16]| -> usize {
        let mut idx = 0;
        for &i in &kept {
            idx = idx * shape.radix(i) + coords[i] as usize;
        }
        idx
    };
    for idx in 0..shape.size() {
        let p = shape.unrank(idx);
        let mut w = 1.0;
        for (i, &c) in p.coords().iter().enumerate() {
            if keep >> i & 1 == 0 {
                w *= factors[i][c as usize];
            }
        }
        acc[pattern_rank(p.coords())] += w * f.at_rank(idx);
    }
    let values = (0..shape.size())
        .map(|idx| acc[pattern_rank(shape.unrank(idx).coords())])
        .collect();
    RealFn::new(shape, values)
}

fn check_measure(shape: &MixedShape, nu: &ProductMeasure) -> Result<()> {
    if nu.n() != shape.n() || (0..shape.n()).any(|i| nu.radix(i) != shape.radix(i)) {
        return Err(Error::ShapeMismatch("measure does not match the space".into()));
    }
    Ok(())
}

/// One orthogonal component by inclusion-exclusion over subsets of S.
pub fn component(f: &RealFn, nu: &ProductMeasure, s: CoordMask) -> Result<RealFn> {
    check_measure(f.shape(), nu)?;
    let factors: Vec<Vec<f64>> = (0..f.shape().n()).map(|i| nu.factor_f64(i)).collect();
    component_f64(f, &factors, s)
}

pub fn component_f64(f: &RealFn, factors: &[Vec<f64>], s: CoordMask) -> Result<RealFn> {
    let mut out = RealFn::constant(f.shape().clone(), 0.0);
    // Iterate all subsets J of s, including the empty set.
    let mut j = s;
    loop {
        let sign = if (s ^ j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        out = out.add(&conditional_mean_f64(f, factors, j)?.scale(sign));
        if j == 0 {
            break;
        }
        j = (j - 1) & s;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ESDecomposition {
    nu: ProductMeasure,
    weights: Weights,
    /// f^{=S} for every |S| <= degree_cap, keyed by coordinate mask.
    components: BTreeMap<CoordMask, RealFn>,
    /// f minus all stored components; zero when degree_cap >= n.
    tail: RealFn,
    degree_cap: usize,
}

pub const DEFAULT_DEGREE_CAP: usize = 6;

pub fn efron_stein(f: &RealFn, nu: &ProductMeasure, degree_cap: usize) -> Result<ESDecomposition> {
    let shape = f.shape().clone();
    check_measure(&shape, nu)?;
    let n = shape.n();
    if n > 63 {
        return Err(Error::Budget("coordinate masks support n <= 63".into()));
    }
    let cap = degree_cap.min(n);
    let mut components = BTreeMap::new();
    let mut rest = f.clone();
    for s in 0..(1u64 << n) {
        if s.count_ones() as usize > cap {
            continue;
        }
        let comp = component(f, nu, s)?;
        rest = rest.sub(&comp);
        components.insert(s, comp);
    }
    let weights = Weights::new(&shape, nu)?;
    Ok(ESDecomposition { nu: nu.clone(), weights, components, tail: rest, degree_cap: cap })
}

impl ESDecomposition {
    pub fn shape(&self) -> &MixedShape {
        self.weights.shape()
    }

    pub fn measure(&self) -> &ProductMeasure {
        &self.nu
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn component(&self, s: CoordMask) -> Option<&RealFn> {
        self.components.get(&s)
    }

    pub fn components(&self) -> impl Iterator<Item = (CoordMask, &RealFn)> {
        self.components.iter().map(|(&s, f)| (s, f))
    }

    pub fn tail(&self) -> &RealFn {
        &self.tail
    }

    pub fn recompose(&self) -> RealFn {
        let mut out = self.tail.clone();
        for f in self.components.values() {
            out = out.add(f);
        }
        out
    }

    /// ||f^{=S}||_2^2 for a stored component.
    pub fn component_energy(&self, s: CoordMask) -> Option<f64> {
        self.components.get(&s).map(|c| self.weights.norm_l2_sq(c))
    }

    /// Energy by degree: entry k sums ||f^{=S}||^2 over |S| = k; the tail
    /// energy is returned separately.
    pub fn energy_profile(&self) -> (Vec<f64>, f64) {
        let n = self.shape().n();
        let mut by_degree = vec![0.0; n + 1];
        for (&s, c) in &self.components {
            by_degree[s.count_ones() as usize] += self.weights.norm_l2_sq(c);
        }
        (by_degree, self.weights.norm_l2_sq(&self.tail))
    }

    /// |E f^2 - sum_S ||f^{=S}||^2 - ||tail||^2|.
    pub fn parseval_gap(&self, f: &RealFn) -> f64 {
        let total = self.weights.norm_l2_sq(f);
        let (by_degree, tail) = self.energy_profile();
        let sum: f64 = by_degree.iter().sum::<f64>() + tail;
        (total - sum).abs()
    }

    /// Largest |<f^{=S}, f^{=T}>| over distinct stored pairs, including
    /// each component against the tail.
    pub fn orthogonality_defect(&self) -> f64 {
        let comps: Vec<&RealFn> = self.components.values().collect();
        let mut worst = 0.0f64;
        for i in 0..comps.len() {
            for j in (i + 1)..comps.len() {
                worst = worst.max(self.weights.inner(comps[i], comps[j]).abs());
            }
            worst = worst.max(self.weights.inner(comps[i], &self.tail).abs());
        }
        worst
    }
}

/// Restricting a pure component keeps it pure: g = (f^{=T})_{S→x} equals
/// its own (T \ S)-component in the restricted space. Returns the largest
/// pointwise defect together with the verdict at the given tolerance.
pub fn restriction_commutes_check(
    f: &RealFn,
    nu: &ProductMeasure,
    s: CoordMask,
    t: CoordMask,
    x: &[u16],
    tol: f64,
) -> Result<(bool, f64)> {
    if s & !t != 0 {
        return Err(Error::Invalid("need S ⊆ T".into()));
    }
    let s_coords = coords_from_mask(s);
    if x.len() != s_coords.len() {
        return Err(Error::Invalid("one fixed value per restricted coordinate".into()));
    }
    let pure = component(f, nu, t)?;
    if s == 0 {
        // Nothing restricted; the component of a pure function is itself.
        let again = component(&pure, nu, t)?;
        let defect = pure.distance_inf(&again);
        return Ok((defect <= tol, defect));
    }
    let g = pure.restrict(&s_coords, x)?;
    let sub_nu = nu.drop_coords(&s_coords)?;
    // Re-index T \ S into the restricted space.
    let mut rest_mask: CoordMask = 0;
    for &i in &coords_from_mask(t & !s) {
        let new_i = i - s_coords.iter().filter(|&&j| j < i).count();
        rest_mask |= 1 << new_i;
    }
    let g_comp = component(&g, &sub_nu, rest_mask)?;
    let defect = g.distance_inf(&g_comp);
    Ok((defect <= tol, defect))
}
