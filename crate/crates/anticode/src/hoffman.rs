//! Operator contraction through product chains, its reduction to noise
//! stability, and the Hoffman bound for cross-intersecting families.

use num::{One, Zero};

use crate::chain::{product_chain_apply, MarkovChain};
use crate::code::Code;
use crate::es::{component_f64, CoordMask};
use crate::measure::ProductMeasure;
use crate::realfn::{RealFn, Weights};
use crate::{rat, Error, Rat, Result};

/// ||U f^{=S}||_2 <= ||f^{=S}||_2 * prod_{i in S} (1 - gap(U_i)), with all
/// norms under the product of the chain stationaries.
#[derive(Clone, Debug)]
pub struct ContractionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub component_norm: f64,
    pub holds: bool,
}

pub fn contraction_check(
    chains: &[MarkovChain],
    f: &RealFn,
    s: CoordMask,
    tol: f64,
) -> Result<ContractionCheck> {
    let shape = f.shape().clone();
    if chains.len() != shape.n() {
        return Err(Error::ShapeMismatch("one chain per coordinate required".into()));
    }
    let factors: Vec<Vec<f64>> =
        chains.iter().map(|c| c.stationary()).collect::<Result<_>>()?;
    let comp = component_f64(f, &factors, s)?;
    let image = product_chain_apply(chains, &comp)?;
    let w = Weights::from_factors(&shape, &factors)?;
    let lhs = w.norm_l2(&image);
    let comp_norm = w.norm_l2(&comp);
    let mut factor = 1.0;
    for (i, chain) in chains.iter().enumerate() {
        if s >> i & 1 == 1 {
            factor *= 1.0 - chain.abs_spectral_gap()?;
        }
    }
    let rhs = comp_norm * factor;
    Ok(ContractionCheck { lhs, rhs, component_norm: comp_norm, holds: lhs <= rhs + tol })
}

/// <f, U f> <= Stab_{1-lambda}(f) where lambda is the smallest coordinate
/// gap; both sides under the product stationary measure.
#[derive(Clone, Debug)]
pub struct OpToStabCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lambda: f64,
    pub holds: bool,
}

pub fn op_to_stab_check(chains: &[MarkovChain], f: &RealFn, tol: f64) -> Result<OpToStabCheck> {
    let shape = f.shape().clone();
    if chains.len() != shape.n() {
        return Err(Error::ShapeMismatch("one chain per coordinate required".into()));
    }
    let factors: Vec<Vec<f64>> =
        chains.iter().map(|c| c.stationary()).collect::<Result<_>>()?;
    let w = Weights::from_factors(&shape, &factors)?;
    let uf = product_chain_apply(chains, f)?;
    let lhs = w.inner(f, &uf);
    let mut lambda = 1.0f64;
    for chain in chains {
        lambda = lambda.min(chain.abs_spectral_gap()?);
    }
    let noise: Vec<MarkovChain> =
        factors.iter().map(|nu| MarkovChain::noise(1.0 - lambda, nu)).collect();
    let rhs = w.inner(f, &product_chain_apply(&noise, f)?);
    Ok(OpToStabCheck { lhs, rhs, lambda, holds: lhs <= rhs + tol })
}

/// The Hoffman bound, checked exactly in rational arithmetic.
#[derive(Clone, Debug)]
pub struct HoffmanCheck {
    /// nu_i(x) <= lambda <= 1/2 everywhere.
    pub premise_ok: bool,
    pub cross_intersecting: bool,
    pub alpha1: Rat,
    pub alpha2: Rat,
    pub lhs: Rat,
    pub rhs: Rat,
    /// premise + cross-intersecting imply lhs <= rhs; vacuously true when
    /// either hypothesis fails.
    pub holds: bool,
    /// Equality achieved (bound is tight for this pair).
    pub tight: bool,
}

pub fn hoffman_check(
    nu: &ProductMeasure,
    g1: &Code,
    g2: &Code,
    lambda: &Rat,
) -> Result<HoffmanCheck> {
    if g1.shape() != g2.shape() {
        return Err(Error::ShapeMismatch("families live on different spaces".into()));
    }
    let premise_ok = !lambda.is_zero()
        && *lambda <= rat(1, 2)
        && (0..nu.n()).all(|i| (0..nu.radix(i)).all(|a| nu.entry(i, a) <= lambda));
    let cross = g1.cross_t_intersecting(g2, 1);
    let alpha1 = g1.measure_under(nu)?;
    let alpha2 = g2.measure_under(nu)?;
    let lhs = alpha1.clone() * alpha2.clone();
    let ratio = lambda.clone() / (Rat::one() - lambda.clone());
    let rhs = ratio.clone() * ratio * (Rat::one() - alpha1.clone()) * (Rat::one() - alpha2.clone());
    let satisfied = lhs <= rhs;
    Ok(HoffmanCheck {
        premise_ok,
        cross_intersecting: cross,
        holds: !(premise_ok && cross) || satisfied,
        tight: premise_ok && cross && lhs == rhs && !lhs.is_zero(),
        alpha1,
        alpha2,
        lhs,
        rhs,
    })
}

/// Uniform-measure case: alpha1 alpha2 <= (1-alpha1)(1-alpha2) / (m-1)^2.
pub fn hoffman_uniform_check(g1: &Code, g2: &Code) -> Result<HoffmanCheck> {
    let m = g1.shape().m();
    let nu = ProductMeasure::uniform(m, g1.shape().n());
    hoffman_check(&nu, g1, g2, &rat(1, m))
}
