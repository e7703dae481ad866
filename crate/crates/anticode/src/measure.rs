//! Product measures on [m_1] × ... × [m_n] with exact rational entries.

use num::{One, Signed, Zero};
use rand::Rng;

use crate::{rat, rat_to_f64, Error, Rat, Result};

/// ν = ν_1 ⊗ ... ⊗ ν_n; each ν_i is a probability vector on [m_i].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProductMeasure {
    factors: Vec<Vec<Rat>>,
}

impl ProductMeasure {
    /// Zero factors is the point mass on the empty tuple, matching the
    /// empty `MixedShape`.
    pub fn new(factors: Vec<Vec<Rat>>) -> Result<ProductMeasure> {
        for (i, f) in factors.iter().enumerate() {
            if f.len() < 2 {
                return Err(Error::Invalid(format!("factor {i} needs at least two symbols")));
            }
            if f.iter().any(|p| p.is_negative()) {
                return Err(Error::Invalid(format!("factor {i} has a negative entry")));
            }
            let total: Rat = f.iter().sum();
            if !total.is_one() {
                return Err(Error::Invalid(format!("factor {i} sums to {total}, not 1")));
            }
        }
        Ok(ProductMeasure { factors })
    }

    /// Uniform measure on [m]^n.
    pub fn uniform(m: usize, n: usize) -> ProductMeasure {
        ProductMeasure { factors: vec![vec![rat(1, m); m]; n] }
    }

    /// The same factor in every coordinate.
    pub fn power(factor: Vec<Rat>, n: usize) -> Result<ProductMeasure> {
        ProductMeasure::new(vec![factor; n])
    }

    /// The p-biased factor (p, 1-p, ..., 1-p scaled): symbol 1 gets mass p,
    /// the remaining m-1 symbols share 1-p equally.
    pub fn biased(m: usize, p: Rat, n: usize) -> Result<ProductMeasure> {
        if p.is_negative() || p > rat(1, 1) {
            return Err(Error::Invalid("bias must lie in [0,1]".into()));
        }
        let rest = (rat(1, 1) - p.clone()) / rat(m - 1, 1);
        let mut factor = vec![rest; m];
        factor[0] = p;
        ProductMeasure::new(vec![factor; n])
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn radix(&self, i: usize) -> usize {
        self.factors[i].len()
    }

    pub fn entry(&self, i: usize, a: usize) -> &Rat {
        &self.factors[i][a]
    }

    pub fn entry_f64(&self, i: usize, a: usize) -> f64 {
        rat_to_f64(&self.factors[i][a])
    }

    pub fn factor(&self, i: usize) -> &[Rat] {
        &self.factors[i]
    }

    pub fn factor_f64(&self, i: usize) -> Vec<f64> {
        self.factors[i].iter().map(rat_to_f64).collect()
    }

    /// Weight of a full point given as 0-based coordinates.
    pub fn point_weight(&self, coords: &[u16]) -> Rat {
        coords
            .iter()
            .enumerate()
            .map(|(i, &c)| self.factors[i][c as usize].clone())
            .product()
    }

    /// Drop the factors at the given sorted coordinate set.
    pub fn drop_coords(&self, coords: &[usize]) -> Result<ProductMeasure> {
        let keep: Vec<Vec<Rat>> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(i, _)| !coords.contains(i))
            .map(|(_, f)| f.clone())
            .collect();
        ProductMeasure::new(keep)
    }

    /// Keep only the factors at the given sorted coordinate set.
    pub fn keep_coords(&self, coords: &[usize]) -> Result<ProductMeasure> {
        let keep: Vec<Vec<Rat>> =
            coords.iter().map(|&i| self.factors[i].clone()).collect();
        ProductMeasure::new(keep)
    }

    pub fn is_uniform(&self) -> bool {
        self.factors
            .iter()
            .all(|f| f.iter().all(|p| *p == rat(1, f.len())))
    }

    /// min_i min_a ν_i(a) as a rational.
    pub fn min_entry(&self) -> Rat {
        self.factors
            .iter()
            .flat_map(|f| f.iter())
            .min()
            .cloned()
            .expect("measure is nonempty")
    }

    /// max_i max_a ν_i(a) as a rational.
    pub fn max_entry(&self) -> Rat {
        self.factors
            .iter()
            .flat_map(|f| f.iter())
            .max()
            .cloned()
            .expect("measure is nonempty")
    }

    /// Sample one point (0-based coordinates) by inverse transform per
    /// coordinate, using exact cumulative comparisons against a rational
    /// draw with 2^32 resolution.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<u16> {
        self.factors
            .iter()
            .map(|f| {
                let draw = rat(rng.random_range(0..1u64 << 32) as usize, 1) / rat(1 << 32, 1);
                let mut acc = Rat::zero();
                for (a, p) in f.iter().enumerate() {
                    acc += p.clone();
                    if draw < acc {
                        return a as u16;
                    }
                }
                (f.len() - 1) as u16
            })
            .collect()
    }
}

/// Draw a random probability vector on [m] with denominator `grid`, every
/// entry strictly positive.
pub fn random_factor(m: usize, grid: usize, rng: &mut impl Rng) -> Vec<Rat> {
    assert!(grid >= 2 * m, "grid too coarse for strictly positive entries");
    // Composition of `grid` units into m positive parts.
    loop {
        let mut cuts: Vec<usize> = (0..m - 1).map(|_| rng.random_range(1..grid)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        if cuts.len() != m - 1 {
            continue;
        }
        let mut parts = Vec::with_capacity(m);
        let mut prev = 0;
        for &c in &cuts {
            parts.push(c - prev);
            prev = c;
        }
        parts.push(grid - prev);
        if parts.iter().any(|&p| p == 0) {
            continue;
        }
        return parts.into_iter().map(|p| rat(p, grid)).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_entries() {
        let nu = ProductMeasure::uniform(3, 4);
        assert_eq!(nu.n(), 4);
        assert_eq!(*nu.entry(2, 1), rat(1, 3));
        assert!(nu.is_uniform());
        assert_eq!(nu.min_entry(), rat(1, 3));
    }

    #[test]
    fn biased_sums_to_one() {
        let nu = ProductMeasure::biased(4, rat(1, 2), 3).unwrap();
        assert_eq!(*nu.entry(0, 0), rat(1, 2));
        assert_eq!(*nu.entry(0, 3), rat(1, 6));
        assert!(!nu.is_uniform());
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(ProductMeasure::new(vec![vec![rat(1, 2), rat(1, 3)]]).is_err());
        assert!(ProductMeasure::new(vec![vec![rat(3, 2), -rat(1, 2)]]).is_err());
    }

    #[test]
    fn point_weight_multiplies() {
        let nu = ProductMeasure::biased(3, rat(1, 2), 2).unwrap();
        assert_eq!(nu.point_weight(&[0, 1]), rat(1, 8));
    }

    #[test]
    fn random_factors_are_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 2..=6 {
            let f = random_factor(m, 1000, &mut rng);
            assert_eq!(f.len(), m);
            let total: Rat = f.iter().sum();
            assert_eq!(total, rat(1, 1));
            assert!(f.iter().all(|p| *p > rat(0, 1)));
        }
    }

    #[test]
    fn sampling_respects_support() {
        let nu = ProductMeasure::new(vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(1, 1)]])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..32 {
            assert_eq!(nu.sample(&mut rng), vec![0, 1]);
        }
    }
}
