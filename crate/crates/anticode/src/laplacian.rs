//! Laplacians L_T f = sum_{S ⊇ T} f^{=S}, computed both through the
//! orthogonal decomposition and through the signed-restriction formula
//! L_T f(z) = sum_{S ⊆ T} (-1)^{|S|} E_{a ~ ν_S}[f(x_S = a, x_rest = z)].

use crate::es::{component, conditional_mean, CoordMask};
use crate::measure::ProductMeasure;
use crate::realfn::RealFn;
use crate::{Error, Result};

/// Route through the decomposition: sum the components over supersets of T.
pub fn laplacian_es(f: &RealFn, nu: &ProductMeasure, t: CoordMask) -> Result<RealFn> {
    let n = f.shape().n();
    if n > 20 {
        return Err(Error::Budget("superset sum enumerates 2^n components".into()));
    }
    let mut out = RealFn::constant(f.shape().clone(), 0.0);
    for s in 0..(1u64 << n) {
        if s & t == t {
            out = out.add(&component(f, nu, s)?);
        }
    }
    Ok(out)
}

/// Combinatorial route: inclusion-exclusion of coordinate averagings. The
/// average over a ~ ν_S of f with x_S replaced by a is the conditional
/// mean keeping the complement of S.
pub fn laplacian_combinatorial(f: &RealFn, nu: &ProductMeasure, t: CoordMask) -> Result<RealFn> {
    let n = f.shape().n();
    if n > 63 {
        return Err(Error::Budget("coordinate masks support n <= 63".into()));
    }
    let full: CoordMask = (1u64 << n) - 1;
    let mut out = RealFn::constant(f.shape().clone(), 0.0);
    let mut s = t;
    loop {
        let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        out = out.add(&conditional_mean(f, nu, full & !s)?.scale(sign));
        if s == 0 {
            break;
        }
        s = (s - 1) & t;
    }
    Ok(out)
}

/// Largest pointwise difference between the two routes.
pub fn laplacian_route_gap(f: &RealFn, nu: &ProductMeasure, t: CoordMask) -> Result<f64> {
    let a = laplacian_es(f, nu, t)?;
    let b = laplacian_combinatorial(f, nu, t)?;
    Ok(a.distance_inf(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::Code;
    use crate::space::Shape;
    use crate::TOL;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_set_is_identity() {
        let shape = Shape::new(3, 2).unwrap();
        let f = RealFn::indicator(&Code::dictator(&shape, 0, 0));
        let nu = ProductMeasure::uniform(3, 2);
        assert!(laplacian_es(&f, &nu, 0).unwrap().distance_inf(&f) <= TOL);
        assert!(laplacian_combinatorial(&f, &nu, 0).unwrap().distance_inf(&f) <= TOL);
    }

    #[test]
    fn dictator_laplacians() {
        let shape = Shape::new(3, 3).unwrap();
        let f = RealFn::indicator(&Code::dictator(&shape, 0, 0));
        let nu = ProductMeasure::uniform(3, 3);
        // L_{1} subtracts the coordinate mean.
        let l1 = laplacian_combinatorial(&f, &nu, 0b001).unwrap();
        for idx in 0..27 {
            let want = f.at_rank(idx) - 1.0 / 3.0;
            assert_abs_diff_eq!(l1.at_rank(idx), want, epsilon = 1e-12);
        }
        // No dependence on coordinate 2.
        let l2 = laplacian_combinatorial(&f, &nu, 0b010).unwrap();
        assert!(l2.max_abs() <= TOL);
        assert!(laplacian_route_gap(&f, &nu, 0b001).unwrap() <= TOL);
        assert!(laplacian_route_gap(&f, &nu, 0b011).unwrap() <= TOL);
    }

    #[test]
    fn routes_agree_on_random_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let shape = Shape::new(3, 3).unwrap().mixed();
        let nu = ProductMeasure::uniform(3, 3);
        for _ in 0..15 {
            let f = RealFn::from_fn(shape.clone(), |_| rng.random_range(-1.0..1.0));
            let t: CoordMask = rng.random_range(0..8);
            assert!(laplacian_route_gap(&f, &nu, t).unwrap() <= TOL);
        }
        // Also under a biased measure.
        let shape2 = Shape::new(2, 4).unwrap().mixed();
        let nu2 = ProductMeasure::biased(2, crate::rat(1, 3), 4).unwrap();
        for _ in 0..10 {
            let f = RealFn::from_fn(shape2.clone(), |_| rng.random_range(-1.0..1.0));
            let t: CoordMask = rng.random_range(0..16);
            assert!(laplacian_route_gap(&f, &nu2, t).unwrap() <= TOL);
        }
    }
}
