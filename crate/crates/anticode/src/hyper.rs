//! Global hypercontractivity checks: the fourth-moment bound for T_ρ, the
//! Laplacian-norm consequence of globalness, and the small-set noise
//! stability reporter.

use itertools::Itertools;

use crate::code::Code;
use crate::es::mask_from_coords;
use crate::laplacian::laplacian_combinatorial;
use crate::measure::ProductMeasure;
use crate::noise::{noise_apply, noise_stability};
use crate::realfn::{RealFn, Weights};
use crate::space::MixedShape;
use crate::{rat_to_f64, Error, Result};

/// The ρ regime in which the fourth-moment inequality is guaranteed.
pub const HYPER_RHO: f64 = 1.0 / 160.0;

#[derive(Clone, Debug)]
pub struct HyperCheck {
    /// ||T_ρ f||_4^4.
    pub lhs: f64,
    /// Σ_S E_{y~ν_S} ||(L_S f)_{S→y}||_2^4.
    pub rhs: f64,
    pub in_regime: bool,
    pub holds: bool,
}

/// ||T_ρ f||_4^4 ≤ Σ_S E_{y~ν_S} ||(L_S f)_{S→y}||_2^4, guaranteed for
/// ρ ≤ 1/160; the checker runs at any ρ and reports.
pub fn hypercontract_check(
    f: &RealFn,
    nu: &ProductMeasure,
    rho: f64,
    tol: f64,
) -> Result<HyperCheck> {
    let shape = f.shape().clone();
    let n = shape.n();
    if n > 20 {
        return Err(Error::Budget("sum over subsets enumerates 2^n terms".into()));
    }
    let w = Weights::new(&shape, nu)?;
    let lhs = w.moment(&noise_apply(f, nu, rho)?, 4.0);

    let mut rhs = 0.0;
    for k in 0..=n {
        for coords in (0..n).combinations(k) {
            let lap = laplacian_combinatorial(f, nu, mask_from_coords(&coords))?;
            rhs += expected_restricted_l2_pow(&lap, nu, &coords, 4.0)?;
        }
    }
    Ok(HyperCheck { lhs, rhs, in_regime: rho <= HYPER_RHO + 1e-15, holds: lhs <= rhs + tol })
}

/// E_{y~ν_S} ||g_{S→y}||_2^p for a sorted coordinate set S; the inner norm
/// is over the remaining coordinates.
fn expected_restricted_l2_pow(
    g: &RealFn,
    nu: &ProductMeasure,
    coords: &[usize],
    p: f64,
) -> Result<f64> {
    if coords.is_empty() {
        let w = Weights::new(g.shape(), nu)?;
        return Ok(w.norm_l2_sq(g).sqrt().powf(p));
    }
    let shape = g.shape();
    let pattern_shape = MixedShape::new(
        coords.iter().map(|&i| shape.radix(i) as u16).collect(),
    )?;
    let whole_space = coords.len() == shape.n();
    let sub_nu = if whole_space { None } else { Some(nu.drop_coords(coords)?) };
    let mut total = 0.0;
    for pat_idx in 0..pattern_shape.size() {
        let pat = pattern_shape.unrank(pat_idx);
        let weight: f64 = coords
            .iter()
            .zip(pat.coords())
            .map(|(&i, &a)| rat_to_f64(nu.entry(i, a as usize)))
            .product();
        if weight == 0.0 {
            continue;
        }
        let norm = if whole_space {
            g.at(&crate::space::Point::from_raw(pat.coords().to_vec())).abs()
        } else {
            let restricted = g.restrict(coords, pat.coords())?;
            let w = Weights::new(restricted.shape(), sub_nu.as_ref().unwrap())?;
            w.norm_l2_sq(&restricted).max(0.0).sqrt()
        };
        total += weight * norm.powf(p);
    }
    Ok(total)
}

/// ||g_{S→y}||_2 under the remaining measure, for a full restriction of
/// the coordinates in `coords` to `y`.
pub fn restricted_l2(
    g: &RealFn,
    nu: &ProductMeasure,
    coords: &[usize],
    y: &[u16],
) -> Result<f64> {
    if coords.is_empty() {
        let w = Weights::new(g.shape(), nu)?;
        return Ok(w.norm_l2(g));
    }
    if coords.len() == g.shape().n() {
        // Everything is fixed; the norm of a point value is its magnitude.
        return Ok(g.at(&crate::space::Point::from_raw(y.to_vec())).abs());
    }
    let restricted = g.restrict(coords, y)?;
    let sub_nu = nu.drop_coords(coords)?;
    Ok(Weights::new(restricted.shape(), &sub_nu)?.norm_l2(&restricted))
}

#[derive(Clone, Debug)]
pub struct GlobalCheck {
    pub is_global: bool,
    /// Largest restriction energy ||f_{R→a}||_2^2 over |R| ≤ r.
    pub worst: f64,
    pub witness: Option<(Vec<usize>, Vec<u16>)>,
}

/// Globalness for functions: ||f_{R→a}||_2^2 ≤ eps for every |R| ≤ r
/// (the empty restriction included).
pub fn fn_is_global(f: &RealFn, nu: &ProductMeasure, r: usize, eps: f64) -> Result<GlobalCheck> {
    let n = f.shape().n();
    let mut worst = 0.0f64;
    let mut witness = None;
    if r >= n {
        // Full restrictions pin a single point.
        for idx in 0..f.shape().size() {
            let energy = f.at_rank(idx).powi(2);
            if energy > worst {
                worst = energy;
                let p = f.shape().unrank(idx);
                witness = Some(((0..n).collect(), p.coords().to_vec()));
            }
        }
    }
    for k in 0..=r.min(n.saturating_sub(1)) {
        for coords in (0..n).combinations(k) {
            let pattern_shape = if k == 0 {
                None
            } else {
                Some(MixedShape::new(
                    coords.iter().map(|&i| f.shape().radix(i) as u16).collect(),
                )?)
            };
            let pats = pattern_shape.as_ref().map_or(1, |s| s.size());
            for pat_idx in 0..pats {
                let y: Vec<u16> = match &pattern_shape {
                    Some(s) => s.unrank(pat_idx).coords().to_vec(),
                    None => Vec::new(),
                };
                let energy = restricted_l2(f, nu, &coords, &y)?.powi(2);
                if energy > worst {
                    worst = energy;
                    witness = Some((coords.clone(), y));
                }
            }
        }
    }
    Ok(GlobalCheck { is_global: worst <= eps, worst, witness })
}

/// The smallest eps for which f is (r, eps)-global.
pub fn global_eps(f: &RealFn, nu: &ProductMeasure, r: usize) -> Result<f64> {
    Ok(fn_is_global(f, nu, r, f64::INFINITY)?.worst)
}

#[derive(Clone, Debug)]
pub struct LaplacianBoundCheck {
    pub premise_ok: bool,
    /// ||(L_T f)_{T→y}||_2.
    pub lhs: f64,
    /// 2^{|T|} sqrt(eps).
    pub rhs: f64,
    /// premise → lhs ≤ rhs; vacuously true if the premise fails.
    pub holds: bool,
}

pub fn global_laplacian_bound_check(
    f: &RealFn,
    nu: &ProductMeasure,
    t_coords: &[usize],
    y: &[u16],
    r: usize,
    eps: f64,
    tol: f64,
) -> Result<LaplacianBoundCheck> {
    if t_coords.len() != y.len() {
        return Err(Error::Invalid("one value per restricted coordinate".into()));
    }
    let premise_ok = t_coords.len() <= r && fn_is_global(f, nu, r, eps)?.is_global;
    let lap = laplacian_combinatorial(f, nu, mask_from_coords(t_coords))?;
    let lhs = restricted_l2(&lap, nu, t_coords, y)?;
    let rhs = 2f64.powi(t_coords.len() as i32) * eps.max(0.0).sqrt();
    Ok(LaplacianBoundCheck { premise_ok, lhs, rhs, holds: !premise_ok || lhs <= rhs + tol })
}

/// Small-set noise stability report: Stab_ρ(1_F) against μ^{1+c} under the
/// globalness hypothesis (log2(1/μ), μ^{1-c}). Reported, never asserted:
/// the constants behind the statement are asymptotic.
#[derive(Clone, Debug)]
pub struct StabReport {
    pub mu: f64,
    pub r_used: usize,
    pub eps_used: f64,
    pub premise_ok: bool,
    pub mu_in_range: bool,
    pub stab: f64,
    pub bound: f64,
    pub within: bool,
}

pub fn global_stab_check(
    code: &Code,
    nu: &ProductMeasure,
    rho: f64,
    c: f64,
) -> Result<StabReport> {
    let f = RealFn::indicator(code);
    let w = Weights::new(f.shape(), nu)?;
    let mu = w.norm_l2_sq(&f);
    let mu_in_range = mu > 0.0 && mu < 1.0 / 16.0;
    let (r_used, eps_used, premise_ok) = if mu_in_range {
        let r = (1.0 / mu).log2().ceil() as usize;
        let r = r.min(f.shape().n());
        let eps = mu.powf(1.0 - c);
        (r, eps, fn_is_global(&f, nu, r, eps)?.is_global)
    } else {
        (0, f64::NAN, false)
    };
    let stab = noise_stability(&f, nu, rho)?;
    let bound = if mu > 0.0 { mu.powf(1.0 + c) } else { 0.0 };
    Ok(StabReport {
        mu,
        r_used,
        eps_used,
        premise_ok,
        mu_in_range,
        stab,
        bound,
        within: stab <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Shape;
    use crate::{rat, TOL};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_function_is_tight() {
        let shape = Shape::new(3, 2).unwrap().mixed();
        let f = RealFn::constant(shape, 0.7);
        let nu = ProductMeasure::uniform(3, 2);
        let check = hypercontract_check(&f, &nu, HYPER_RHO, TOL).unwrap();
        assert_abs_diff_eq!(check.lhs, 0.7f64.powi(4), epsilon = 1e-12);
        assert_abs_diff_eq!(check.rhs, 0.7f64.powi(4), epsilon = 1e-12);
        assert!(check.holds && check.in_regime);
    }

    #[test]
    fn dictator_in_regime_holds() {
        let shape = Shape::new(3, 2).unwrap();
        let f = RealFn::indicator(&Code::dictator(&shape, 0, 0));
        let nu = ProductMeasure::uniform(3, 2);
        let check = hypercontract_check(&f, &nu, HYPER_RHO, TOL).unwrap();
        assert!(check.holds, "lhs={} rhs={}", check.lhs, check.rhs);
    }

    #[test]
    fn random_functions_hold_in_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let shape = Shape::new(2, 3).unwrap().mixed();
        let nu = ProductMeasure::uniform(2, 3);
        for _ in 0..10 {
            let f = RealFn::from_fn(shape.clone(), |_| rng.random_range(-1.0..1.0));
            let check = hypercontract_check(&f, &nu, HYPER_RHO, TOL).unwrap();
            assert!(check.holds, "lhs={} rhs={}", check.lhs, check.rhs);
        }
    }

    #[test]
    fn empty_restriction_bound_is_norm_bound() {
        let shape = Shape::new(3, 2).unwrap();
        let f = RealFn::indicator(&Code::dictator(&shape, 0, 0));
        let nu = ProductMeasure::uniform(3, 2);
        let eps = global_eps(&f, &nu, 0).unwrap();
        assert_abs_diff_eq!(eps, 1.0 / 3.0, epsilon = 1e-12);
        let check = global_laplacian_bound_check(&f, &nu, &[], &[], 0, eps, TOL).unwrap();
        assert!(check.premise_ok && check.holds);
        assert_abs_diff_eq!(check.lhs, (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn dictator_with_its_own_eps_holds() {
        let shape = Shape::new(3, 2).unwrap();
        let f = RealFn::indicator(&Code::dictator(&shape, 0, 0));
        let nu = ProductMeasure::uniform(3, 2);
        // Smallest eps making the dictator (1, eps)-global is 1 (restrict
        // its own coordinate to the accepted symbol).
        let eps = global_eps(&f, &nu, 1).unwrap();
        assert_abs_diff_eq!(eps, 1.0, epsilon = 1e-12);
        for y in 0..3u16 {
            let check =
                global_laplacian_bound_check(&f, &nu, &[0], &[y], 1, eps, TOL).unwrap();
            assert!(check.premise_ok && check.holds, "y={y} lhs={} rhs={}", check.lhs, check.rhs);
        }
    }

    #[test]
    fn laplacian_bound_on_verified_global_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let shape = Shape::new(3, 3).unwrap().mixed();
        let nu = ProductMeasure::uniform(3, 3);
        for _ in 0..8 {
            let f = RealFn::from_fn(shape.clone(), |_| rng.random_range(0.0..1.0));
            let r = 2;
            let eps = global_eps(&f, &nu, r).unwrap();
            for coords in [vec![0], vec![1, 2]] {
                let pat_shape =
                    MixedShape::new(coords.iter().map(|_| 3u16).collect()).unwrap();
                for pi in 0..pat_shape.size() {
                    let y = pat_shape.unrank(pi).coords().to_vec();
                    let check =
                        global_laplacian_bound_check(&f, &nu, &coords, &y, r, eps, TOL).unwrap();
                    assert!(check.premise_ok);
                    assert!(check.holds, "lhs={} rhs={}", check.lhs, check.rhs);
                }
            }
        }
    }

    #[test]
    fn stab_report_flags_non_global_families() {
        let shape = Shape::new(3, 4).unwrap();
        let dict = Code::dictator(&shape, 0, 0);
        let nu = ProductMeasure::uniform(3, 4);
        // Dictator measure 1/3 is outside (0, 1/16).
        let report = global_stab_check(&dict, &nu, HYPER_RHO, 0.1).unwrap();
        assert!(!report.mu_in_range && !report.premise_ok);

        // A single point is small but heavily captured, so not global.
        let point = Code::from_ranks(&shape, [0]);
        let report = global_stab_check(&point, &nu, HYPER_RHO, 0.1).unwrap();
        assert!(report.mu_in_range);
        assert!(!report.premise_ok);
        assert_abs_diff_eq!(report.mu, 1.0 / 81.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_family_report() {
        let shape = Shape::new(3, 3).unwrap();
        let nu = ProductMeasure::uniform(3, 3);
        let report = global_stab_check(&Code::empty(&shape), &nu, HYPER_RHO, 0.1).unwrap();
        assert_eq!(report.stab, 0.0);
        assert!(report.within);
    }

    #[test]
    fn hoelder_style_regime_flag() {
        let shape = Shape::new(2, 3).unwrap();
        let f = RealFn::indicator(&Code::dictator(&shape, 0, 0));
        let nu = ProductMeasure::uniform(2, 3);
        let check = hypercontract_check(&f, &nu, 0.9, TOL).unwrap();
        assert!(!check.in_regime);
    }
}
