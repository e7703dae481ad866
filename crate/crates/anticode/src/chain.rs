//! Markov chains on a single coordinate, their stationary measures and
//! absolute spectral gaps, and correlations through product chains.
//!
//! The gap is defined through the operator norm on mean-zero functions:
//! (1 - gap)^2 = sup { E[(Tf)^2] : Ef = 0, Ef^2 = 1 }, all moments under
//! the stationary measure.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::realfn::RealFn;
use crate::space::Point;
use crate::{Error, Result, TOL};

const POWER_TOL: f64 = 1e-14;
const POWER_MAX_ITERS: usize = 100_000;

/// Row-stochastic matrix; rows index the current state, columns the next.
#[derive(Clone, PartialEq, Debug)]
pub struct MarkovChain {
    p: Vec<Vec<f64>>,
}

impl MarkovChain {
    pub fn new(p: Vec<Vec<f64>>) -> Result<MarkovChain> {
        let n = p.len();
        if n < 2 {
            return Err(Error::Invalid("chain needs at least two states".into()));
        }
        for (x, row) in p.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Invalid("chain matrix is not square".into()));
            }
            if row.iter().any(|&v| v < -TOL) {
                return Err(Error::Invalid(format!("row {x} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!("row {x} sums to {sum}, not 1")));
            }
        }
        Ok(MarkovChain { p })
    }

    /// Resample uniformly among the other m-1 symbols.
    pub fn disagreement(m: usize) -> MarkovChain {
        let off = 1.0 / (m - 1) as f64;
        let p = (0..m)
            .map(|x| (0..m).map(|y| if y == x { 0.0 } else { off }).collect())
            .collect();
        MarkovChain { p }
    }

    /// Keep the symbol with probability rho, otherwise resample from nu.
    pub fn noise(rho: f64, nu: &[f64]) -> MarkovChain {
        let m = nu.len();
        let p = (0..m)
            .map(|x| {
                (0..m)
                    .map(|y| (1.0 - rho) * nu[y] + if y == x { rho } else { 0.0 })
                    .collect()
            })
            .collect();
        MarkovChain { p }
    }

    /// Zero diagonal, off-diagonal mass proportional to nu: P_xy =
    /// nu(y) / (1 - nu(x)) for y != x.
    /// Resample from nu conditioned on actually changing symbol. The
    /// stationary law is proportional to nu(x)(1 - nu(x)), and the chain
    /// is reversible with respect to it; for uniform nu this is the
    /// disagreement chain.
    pub fn resample_off_diagonal(nu: &[f64]) -> Result<MarkovChain> {
        let m = nu.len();
        if nu.iter().any(|&v| v >= 1.0 - 1e-12) {
            return Err(Error::Invalid("a symbol with full mass has no off-diagonal chain".into()));
        }
        let p = (0..m)
            .map(|x| {
                (0..m)
                    .map(|y| if y == x { 0.0 } else { nu[y] / (1.0 - nu[x]) })
                    .collect()
            })
            .collect();
        Ok(MarkovChain { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.p[x][y]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.p
    }

    /// (Tf)(x) = sum_y P_xy f(y).
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.p
            .iter()
            .map(|row| row.iter().zip(f).map(|(&p, &v)| p * v).sum())
            .collect()
    }

    /// Adjoint with respect to nu: (T*g)(x) = sum_y nu(y) P_yx g(y) / nu(x).
    pub fn apply_adjoint(&self, g: &[f64], nu: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|x| {
                let s: f64 = (0..n).map(|y| nu[y] * self.p[y][x] * g[y]).sum();
                s / nu[x]
            })
            .collect()
    }

    /// Stationary distribution, by least squares on pi P = pi with the
    /// normalisation row appended. Assumes the chain is irreducible.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let mut a = DMatrix::<f64>::zeros(n + 1, n);
        for x in 0..n {
            for y in 0..n {
                a[(y, x)] += self.p[x][y];
            }
            a[(x, x)] -= 1.0;
            a[(n, x)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n + 1);
        b[n] = 1.0;
        let svd = a.svd(true, true);
        let pi = svd
            .solve(&b, 1e-13)
            .map_err(|e| Error::Invalid(format!("stationary solve failed: {e}")))?;
        let mut out: Vec<f64> = pi.iter().copied().collect();
        for v in &mut out {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        let total: f64 = out.iter().sum();
        if (total - 1.0).abs() > 1e-7 || out.iter().any(|&v| v < 0.0) {
            return Err(Error::Invalid("stationary solve left the simplex".into()));
        }
        for v in &mut out {
            *v /= total;
        }
        Ok(out)
    }

    pub fn is_reversible(&self, nu: &[f64]) -> bool {
        let n = self.len();
        (0..n).all(|x| {
            (0..n).all(|y| (nu[x] * self.p[x][y] - nu[y] * self.p[y][x]).abs() <= 1e-9)
        })
    }

    /// Absolute spectral gap by power iteration on T*T over mean-zero
    /// functions, restarted from each projected basis vector.
    pub fn abs_spectral_gap(&self) -> Result<f64> {
        let nu = self.stationary()?;
        let n = self.len();
        let project = |v: &mut Vec<f64>| {
            let mean: f64 = v.iter().zip(&nu).map(|(&a, &w)| a * w).sum();
            for x in v.iter_mut() {
                *x -= mean;
            }
        };
        let norm = |v: &[f64]| -> f64 {
            v.iter().zip(&nu).map(|(&a, &w)| a * a * w).sum::<f64>().sqrt()
        };
        let mut sup_sq: f64 = 0.0;
        for start in 0..n {
            let mut v = vec![0.0; n];
            v[start] = 1.0;
            project(&mut v);
            let mut len = norm(&v);
            if len < 1e-12 {
                continue;
            }
            for x in v.iter_mut() {
                *x /= len;
            }
            let mut rq_prev = f64::NAN;
            for _ in 0..POWER_MAX_ITERS {
                let tv = self.apply(&v);
                let mut mv = self.apply_adjoint(&tv, &nu);
                project(&mut mv);
                // Rayleigh quotient <v, Mv> = ||Tv||^2 since v is unit.
                let rq: f64 = tv.iter().zip(&nu).map(|(&a, &w)| a * a * w).sum();
                len = norm(&mv);
                if len < 1e-15 {
                    sup_sq = sup_sq.max(rq);
                    break;
                }
                for x in mv.iter_mut() {
                    *x /= len;
                }
                v = mv;
                if !rq_prev.is_nan() && (rq - rq_prev).abs() < POWER_TOL {
                    sup_sq = sup_sq.max(rq);
                    break;
                }
                rq_prev = rq;
                sup_sq = sup_sq.max(rq);
            }
        }
        Ok(1.0 - sup_sq.max(0.0).sqrt())
    }

    /// Gap through the spectrum: 1 - max |eigenvalue != 1|. Only valid for
    /// reversible chains, where it matches the operator-norm definition.
    pub fn abs_spectral_gap_eigen(&self) -> Result<f64> {
        let nu = self.stationary()?;
        if !self.is_reversible(&nu) {
            return Err(Error::Invalid("eigenvalue route needs a reversible chain".into()));
        }
        let n = self.len();
        // Symmetrise: S_xy = sqrt(nu_x / nu_y) P_xy shares the spectrum.
        let mut s = DMatrix::<f64>::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                s[(x, y)] = (nu[x] / nu[y]).sqrt() * self.p[x][y];
            }
        }
        let s = (s.clone() + s.transpose()) * 0.5;
        let eigen = s.symmetric_eigen();
        let mut vals: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // Drop one copy of the top eigenvalue (the constant direction).
        let second = vals
            .iter()
            .skip(1)
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
            .max(if vals.len() > 1 { vals[vals.len() - 1].abs() } else { 0.0 });
        Ok(1.0 - second.min(1.0))
    }

    /// Largest alpha with P_xy >= alpha nu(y) for all x, y; the gap is at
    /// least this floor.
    pub fn uniform_floor(&self) -> Result<f64> {
        let nu = self.stationary()?;
        let n = self.len();
        let mut alpha = f64::INFINITY;
        for x in 0..n {
            for y in 0..n {
                if nu[y] > 0.0 {
                    alpha = alpha.min(self.p[x][y] / nu[y]);
                }
            }
        }
        Ok(alpha.clamp(0.0, 1.0))
    }

    /// Sample the next state from row x.
    pub fn sample_row(&self, x: usize, rng: &mut impl Rng) -> usize {
        sample_index(&self.p[x], rng)
    }
}

/// Checks the floor-to-gap bound on a concrete chain: computes the largest
/// alpha with P_xy >= alpha nu(y) and verifies gap >= alpha - tol.
#[derive(Clone, Debug)]
pub struct GapBound {
    pub alpha: f64,
    pub gap: f64,
    pub holds: bool,
}

pub fn gap_lower_bound_check(chain: &MarkovChain, tol: f64) -> Result<GapBound> {
    let alpha = chain.uniform_floor()?;
    let gap = chain.abs_spectral_gap()?;
    Ok(GapBound { alpha, gap, holds: gap >= alpha - tol })
}

/// Apply the product chain U_1 x ... x U_n to f, one coordinate at a time.
pub fn product_chain_apply(chains: &[MarkovChain], f: &RealFn) -> Result<RealFn> {
    let shape = f.shape().clone();
    if chains.len() != shape.n() {
        return Err(Error::ShapeMismatch("one chain per coordinate required".into()));
    }
    for (i, c) in chains.iter().enumerate() {
        if c.len() != shape.radix(i) {
            return Err(Error::ShapeMismatch(format!(
                "chain {i} has {} states, coordinate has radix {}",
                c.len(),
                shape.radix(i)
            )));
        }
    }
    let mut values = f.values().to_vec();
    for (i, chain) in chains.iter().enumerate() {
        let m = shape.radix(i);
        let mut next = vec![0.0; values.len()];
        for (idx, slot) in next.iter_mut().enumerate() {
            let mut p = shape.unrank(idx);
            let x = p.get(i) as usize;
            let mut acc = 0.0;
            for y in 0..m {
                p.set(i, y as u16);
                acc += chain.entry(x, y) * values[shape.rank(&p)];
            }
            *slot = acc;
        }
        values = next;
    }
    RealFn::new(shape, values)
}

/// <1_F, U 1_G> under the product stationary measure, both exactly (dense
/// sweep) and by seeded Monte Carlo over (x, y) with x stationary and y
/// drawn from the product rows at x.
#[derive(Clone, Debug)]
pub struct Correlation {
    pub exact: f64,
    pub estimate: f64,
    pub trials: usize,
}

pub fn chain_correlation(
    chains: &[MarkovChain],
    f: &crate::code::Code,
    g: &crate::code::Code,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<Correlation> {
    if f.shape() != g.shape() {
        return Err(Error::ShapeMismatch("codes live on different spaces".into()));
    }
    let shape = f.shape().mixed();
    let stationaries: Vec<Vec<f64>> =
        chains.iter().map(|c| c.stationary()).collect::<Result<_>>()?;
    let ind_g = RealFn::indicator(g);
    let ug = product_chain_apply(chains, &ind_g)?;
    let mut exact = 0.0;
    for r in f.member_ranks() {
        let p = shape.unrank(r);
        let w: f64 = p
            .coords()
            .iter()
            .enumerate()
            .map(|(i, &c)| stationaries[i][c as usize])
            .product();
        exact += w * ug.at_rank(r);
    }
    let mut hits = 0usize;
    for _ in 0..trials {
        let x: Vec<u16> = stationaries
            .iter()
            .map(|nu| sample_index(nu, rng) as u16)
            .collect();
        let y: Vec<u16> = x
            .iter()
            .enumerate()
            .map(|(i, &c)| chains[i].sample_row(c as usize, rng) as u16)
            .collect();
        if f.contains(&Point::from_raw(x)) && g.contains(&Point::from_raw(y)) {
            hits += 1;
        }
    }
    let estimate = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
    Ok(Correlation { exact, estimate, trials })
}

fn sample_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let draw: f64 = rng.random_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if draw < acc {
            return i;
        }
    }
    weights.len() - 1
}
