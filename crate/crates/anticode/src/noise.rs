//! Noise operators T_ρ per coordinate, noise stability, and the moment
//! comparison Stab_ρ(f) ≤ ||f||_2^{2(1-1/t)} Stab_{ρ^t}(f)^{1/t} for t = 2^d.

use crate::chain::{product_chain_apply, MarkovChain};
use crate::es::ESDecomposition;
use crate::measure::ProductMeasure;
use crate::realfn::{RealFn, Weights};
use crate::{Error, Result};

fn noise_chains(nu: &ProductMeasure, rho: f64) -> Result<Vec<MarkovChain>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Invalid(format!("noise rate {rho} outside [0,1]")));
    }
    Ok((0..nu.n()).map(|i| MarkovChain::noise(rho, &nu.factor_f64(i))).collect())
}

/// T_ρ f through the per-coordinate transition matrices.
pub fn noise_apply(f: &RealFn, nu: &ProductMeasure, rho: f64) -> Result<RealFn> {
    product_chain_apply(&noise_chains(nu, rho)?, f)
}

/// T_ρ f through the decomposition: sum_S ρ^{|S|} f^{=S}. Needs a full
/// decomposition (tail-free), so the caller controls the degree cap.
pub fn noise_apply_es(dec: &ESDecomposition, rho: f64) -> Result<RealFn> {
    if dec.weights().norm_l2_sq(dec.tail()) > 1e-20 {
        return Err(Error::Invalid("decomposition has a tail; use a full cap".into()));
    }
    let mut out = RealFn::constant(dec.shape().clone(), 0.0);
    for (s, comp) in dec.components() {
        out = out.add(&comp.scale(rho.powi(s.count_ones() as i32)));
    }
    Ok(out)
}

/// Stab_ρ(f) = <f, T_ρ f>.
pub fn noise_stability(f: &RealFn, nu: &ProductMeasure, rho: f64) -> Result<f64> {
    let w = Weights::new(f.shape(), nu)?;
    Ok(w.inner(f, &noise_apply(f, nu, rho)?))
}

/// Stab_ρ(f) from stored energies: sum_S ρ^{|S|} ||f^{=S}||^2.
pub fn noise_stability_es(dec: &ESDecomposition, rho: f64) -> Result<f64> {
    if dec.weights().norm_l2_sq(dec.tail()) > 1e-20 {
        return Err(Error::Invalid("decomposition has a tail; use a full cap".into()));
    }
    let mut total = 0.0;
    for (s, comp) in dec.components() {
        total += rho.powi(s.count_ones() as i32) * dec.weights().norm_l2_sq(comp);
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct NoiseChange {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Stab_ρ(f) ≤ ||f||_2^{2(1-1/t)} Stab_{ρ^t}(f)^{1/t} with t = 2^d.
pub fn changenoise_check(
    f: &RealFn,
    nu: &ProductMeasure,
    rho: f64,
    d: u32,
    tol: f64,
) -> Result<NoiseChange> {
    if d == 0 {
        return Err(Error::Invalid("noise change needs d >= 1".into()));
    }
    let t = 2f64.powi(d as i32);
    let w = Weights::new(f.shape(), nu)?;
    let lhs = noise_stability(f, nu, rho)?;
    let stab_t = noise_stability(f, nu, rho.powf(t))?;
    let rhs = w.norm_l2_sq(f).powf(1.0 - 1.0 / t) * stab_t.max(0.0).powf(1.0 / t);
    Ok(NoiseChange { lhs, rhs, holds: lhs <= rhs + tol })
}
