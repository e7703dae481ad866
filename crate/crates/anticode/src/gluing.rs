//! Balanced gluings of alphabets: coordinatewise surjections [m] -> [k]
//! with bounded fibers, the pushforward measure they induce, and the
//! measure-boosting loop that alternates restrictions (when the code is
//! not global) with random gluings (when it is).
//!
//! The one exact fact everything rests on: gluing never loses measure,
//! nu^pi(F^pi) >= nu(F), with equality when F is a full preimage.

use crate::code::{Code, Restriction};
use crate::measure::ProductMeasure;
use crate::space::{Point, Shape};
use crate::{rat, rat_to_f64, Error, Rat, Result};
use num::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// How many rejected random surjections the b > 1 sampler tolerates.
pub const REJECTION_CAP: usize = 10_000;
/// Default excess-gain exponent for the boosting loop.
pub const BOOST_DEFAULT_C: f64 = 0.1;
/// Desk-scale cap on the restriction size used by the boosting loop's
/// globalness test.
pub const BOOST_R_CAP: usize = 4;
/// Iteration cap for the boosting loop.
pub const BOOST_STEP_CAP: usize = 64;

/// Per-coordinate symbol maps pi_i: [m_i] -> [k_i], stored 0-based.
/// Every map is surjective onto its target by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gluing {
    maps: Vec<Vec<u16>>,
}

impl Gluing {
    pub fn new(maps: Vec<Vec<u16>>) -> Result<Gluing> {
        if maps.is_empty() {
            return Err(Error::Invalid("gluing needs at least one coordinate".into()));
        }
        for (i, map) in maps.iter().enumerate() {
            if map.is_empty() {
                return Err(Error::Invalid(format!("gluing map {i} is empty")));
            }
            let k = *map.iter().max().unwrap() as usize + 1;
            let mut seen = vec![false; k];
            for &img in map {
                seen[img as usize] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::Invalid(format!(
                    "gluing map {i} is not surjective onto its target"
                )));
            }
        }
        Ok(Gluing { maps })
    }

    pub fn identity(m: usize, n: usize) -> Gluing {
        let map: Vec<u16> = (0..m as u16).collect();
        Gluing { maps: vec![map; n] }
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    /// Source alphabet size at coordinate i.
    pub fn source(&self, i: usize) -> usize {
        self.maps[i].len()
    }

    /// Target alphabet size at coordinate i.
    pub fn target(&self, i: usize) -> usize {
        *self.maps[i].iter().max().unwrap() as usize + 1
    }

    pub fn map(&self, i: usize) -> &[u16] {
        &self.maps[i]
    }

    pub fn apply_symbol(&self, i: usize, a: u16) -> u16 {
        self.maps[i][a as usize]
    }

    pub fn apply_point(&self, p: &Point) -> Point {
        let coords = p
            .coords()
            .iter()
            .enumerate()
            .map(|(i, &a)| self.apply_symbol(i, a))
            .collect();
        Point::from_raw(coords)
    }

    /// Uniform source size, or an error when coordinates disagree.
    pub fn uniform_source(&self) -> Result<usize> {
        let m = self.source(0);
        if (0..self.n()).all(|i| self.source(i) == m) {
            Ok(m)
        } else {
            Err(Error::ShapeMismatch("gluing source alphabets differ".into()))
        }
    }

    /// Uniform target size, or an error when coordinates disagree.
    pub fn uniform_target(&self) -> Result<usize> {
        let k = self.target(0);
        if (0..self.n()).all(|i| self.target(i) == k) {
            Ok(k)
        } else {
            Err(Error::ShapeMismatch("gluing target alphabets differ".into()))
        }
    }

    /// Fiber sizes |pi_i^{-1}(j)| for j in the target of coordinate i.
    pub fn fiber_sizes(&self, i: usize) -> Vec<usize> {
        let mut sizes = vec![0usize; self.target(i)];
        for &img in &self.maps[i] {
            sizes[img as usize] += 1;
        }
        sizes
    }

    /// Checks |pi_i^{-1}(j)| <= b * m_i / k_i for every coordinate and
    /// target symbol, by exact integer comparison.
    pub fn is_balanced(&self, b: usize) -> bool {
        (0..self.n()).all(|i| {
            let m = self.source(i);
            let k = self.target(i);
            self.fiber_sizes(i).iter().all(|&c| c * k <= b * m)
        })
    }

    /// Composition: apply self first, then `after`.
    pub fn compose(&self, after: &Gluing) -> Result<Gluing> {
        if self.n() != after.n() {
            return Err(Error::ShapeMismatch("gluing composition length mismatch".into()));
        }
        let mut maps = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            if after.source(i) < self.target(i) {
                return Err(Error::ShapeMismatch(format!(
                    "composition at coordinate {i}: target {} exceeds next source {}",
                    self.target(i),
                    after.source(i)
                )));
            }
            maps.push(self.maps[i].iter().map(|&a| after.maps[i][a as usize]).collect());
        }
        Gluing::new(maps)
    }
}

/// Samples one b-balanced surjection [m] -> [k]. For b = 1 this requires
/// k | m and draws a uniformly random equal-fiber partition; for b > 1 it
/// rejection-samples random surjections until the fiber bound holds.
pub fn sample_coord_map(m: usize, k: usize, b: usize, rng: &mut ChaCha8Rng) -> Result<Vec<u16>> {
    if k > m || k == 0 || b == 0 {
        return Err(Error::Infeasible(format!("no {b}-balanced gluing [{m}] -> [{k}]")));
    }
    if k * (b * m / k) < m {
        return Err(Error::Infeasible(format!(
            "fiber cap {} cannot cover [{m}] with {k} fibers",
            b * m / k
        )));
    }
    if b == 1 {
        if m % k != 0 {
            return Err(Error::Infeasible(format!(
                "1-balanced gluing [{m}] -> [{k}] needs {k} | {m}"
            )));
        }
        let fiber = m / k;
        let mut symbols: Vec<u16> = (0..m as u16).collect();
        symbols.shuffle(rng);
        let mut map = vec![0u16; m];
        for (pos, &a) in symbols.iter().enumerate() {
            map[a as usize] = (pos / fiber) as u16;
        }
        return Ok(map);
    }
    let cap = b * m / k;
    for _ in 0..REJECTION_CAP {
        let map: Vec<u16> = (0..m).map(|_| rng.random_range(0..k as u16)).collect();
        let mut sizes = vec![0usize; k];
        for &img in &map {
            sizes[img as usize] += 1;
        }
        if sizes.iter().all(|&c| c > 0 && c <= cap) {
            return Ok(map);
        }
    }
    Err(Error::Budget(format!(
        "rejection sampling of a {b}-balanced gluing [{m}] -> [{k}] exceeded {REJECTION_CAP} tries"
    )))
}

/// Samples a b-balanced gluing of [m]^n to [k]^n with independent
/// coordinate maps.
pub fn sample_gluing(m: usize, k: usize, n: usize, b: usize, rng: &mut ChaCha8Rng) -> Result<Gluing> {
    let maps = (0..n).map(|_| sample_coord_map(m, k, b, rng)).collect::<Result<Vec<_>>>()?;
    Gluing::new(maps)
}

/// Image code F^pi = pi(F) over the glued alphabet.
pub fn glue_code(f: &Code, pi: &Gluing) -> Result<Code> {
    let shape = f.shape();
    if pi.n() != shape.n() {
        return Err(Error::ShapeMismatch("gluing length differs from code length".into()));
    }
    if pi.uniform_source()? != shape.m() {
        return Err(Error::ShapeMismatch("gluing source differs from code alphabet".into()));
    }
    let k = pi.uniform_target()?;
    let out_shape = Shape::new(k as u32, shape.n() as u32)?;
    let mut out = Code::empty(&out_shape);
    for p in f.members() {
        out.insert(&pi.apply_point(&p));
    }
    Ok(out)
}

/// Pushforward measure nu^pi, with nu^pi(j) the exact sum of nu over the
/// fiber of j.
pub fn glue_measure(nu: &ProductMeasure, pi: &Gluing) -> Result<ProductMeasure> {
    if pi.n() != nu.n() {
        return Err(Error::ShapeMismatch("gluing length differs from measure length".into()));
    }
    let mut factors = Vec::with_capacity(nu.n());
    for i in 0..nu.n() {
        if pi.source(i) != nu.radix(i) {
            return Err(Error::ShapeMismatch(format!(
                "gluing source at coordinate {i} differs from measure radix"
            )));
        }
        let mut pushed = vec![Rat::zero(); pi.target(i)];
        for (a, &img) in pi.map(i).iter().enumerate() {
            pushed[img as usize] += nu.entry(i, a).clone();
        }
        factors.push(pushed);
    }
    ProductMeasure::new(factors)
}

/// First member preimages of two glued points. When the glued points
/// disagree everywhere, so does any preimage pair: pi(x)_i = pi(y)_i
/// whenever x_i = y_i.
pub fn pull_back_disagreement(
    f: &Code,
    g: &Code,
    pi: &Gluing,
    u: &Point,
    v: &Point,
) -> Option<(Point, Point)> {
    let x = f.members().find(|p| pi.apply_point(p).coords() == u.coords())?;
    let y = g.members().find(|p| pi.apply_point(p).coords() == v.coords())?;
    Some((x, y))
}

/// Monte Carlo estimate of E_pi[nu^pi(F^pi)] over uniform-fiber gluings
/// [m] -> [k]. Every sample is an exact rational, and every sample is at
/// least nu(F).
#[derive(Debug, Clone)]
pub struct GlueEstimate {
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    pub nu_f: Rat,
    pub sample_min: Rat,
    pub all_at_least_nu_f: bool,
    /// s = m/k; the theorem regime wants s >= 4 and nu s-balanced.
    pub s: usize,
    pub premise_balanced: bool,
}

pub fn expected_glued_measure(
    f: &Code,
    nu: &ProductMeasure,
    k: usize,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<GlueEstimate> {
    let shape = f.shape();
    let m = shape.m();
    let n = shape.n();
    if nu.n() != n || nu.radix(0) != m {
        return Err(Error::ShapeMismatch("measure does not match the code".into()));
    }
    if k == 0 || m % k != 0 {
        return Err(Error::Infeasible(format!("expected gluing needs {k} | {m}")));
    }
    let s = m / k;
    let s_bound = rat(s, m);
    let premise_balanced = s >= 4
        && (0..n).all(|i| (0..m).all(|a| *nu.entry(i, a) <= s_bound));
    let nu_f = f.measure_under(nu)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut sample_min: Option<Rat> = None;
    let mut all_ge = true;
    for _ in 0..trials {
        let pi = sample_gluing(m, k, n, 1, rng)?;
        let glued = glue_code(f, &pi)?;
        let pushed = glue_measure(nu, &pi)?;
        let value = glued.measure_under(&pushed)?;
        if value < nu_f {
            all_ge = false;
        }
        if sample_min.as_ref().map(|b| value < *b).unwrap_or(true) {
            sample_min = Some(value.clone());
        }
        let v = rat_to_f64(&value);
        sum += v;
        sum_sq += v * v;
    }
    let t = trials.max(1) as f64;
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean).max(0.0);
    let stderr = (var / t).sqrt();
    Ok(GlueEstimate {
        trials,
        mean,
        stderr,
        nu_f,
        sample_min: sample_min.unwrap_or_else(Rat::zero),
        all_at_least_nu_f: all_ge,
        s,
        premise_balanced,
    })
}

/// Worst nu-restricted measure over restrictions of at most r coordinates,
/// with the lexicographically first maximal witness. The restricted
/// measure of F_{R->a} under the free coordinates of nu is computed as
/// nu(F and x_R = a) / nu_R(a) when nu_R(a) > 0, and directly otherwise.
fn worst_weighted_restriction(
    f: &Code,
    nu: &ProductMeasure,
    r: usize,
) -> (Rat, Restriction, Rat) {
    use itertools::Itertools;
    let n = f.shape().n();
    let m = f.shape().m();
    let rows: Vec<Vec<u16>> = f.members().map(|p| p.coords().to_vec()).collect();
    let weights: Vec<Rat> = rows.iter().map(|row| nu.point_weight(row)).collect();
    let mut worst = Rat::zero();
    let mut arg = Restriction::empty();
    let mut first = true;
    for k in 0..=r.min(n) {
        for coords in (0..n).combinations(k) {
            let mut vals = vec![0u16; k];
            loop {
                let mut fixed_weight = Rat::one();
                for (&i, &a) in coords.iter().zip(&vals) {
                    fixed_weight = fixed_weight * nu.entry(i, a as usize).clone();
                }
                let matches = |row: &[u16]| coords.iter().zip(&vals).all(|(&i, &a)| row[i] == a);
                let value: Rat = if fixed_weight > Rat::zero() {
                    let mass: Rat = rows
                        .iter()
                        .zip(&weights)
                        .filter(|(row, _)| matches(row))
                        .map(|(_, w)| w.clone())
                        .sum();
                    mass / fixed_weight
                } else {
                    rows.iter()
                        .filter(|row| matches(row))
                        .map(|row| {
                            row.iter()
                                .enumerate()
                                .filter(|(i, _)| !coords.contains(i))
                                .map(|(i, &a)| nu.entry(i, a as usize).clone())
                                .product::<Rat>()
                        })
                        .sum()
                };
                if first || value > worst {
                    worst = value.clone();
                    arg = Restriction::new(coords.clone(), vals.clone())
                        .expect("combinations are strictly increasing");
                    first = false;
                }
                if !crate::pseudo::next_word(&mut vals, m as u16) {
                    break;
                }
            }
        }
    }
    let mu = worst.clone();
    (worst, arg, mu)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoostAction {
    /// Restriction on the listed original coordinates.
    Restrict { coords: Vec<usize> },
    /// Gluing down to the given alphabet size.
    Glue { to: usize },
}

#[derive(Debug, Clone)]
pub struct BoostLedgerEntry {
    pub action: BoostAction,
    pub alphabet: usize,
    pub mu: Rat,
    pub r_used: usize,
}

/// Outcome of the boosting loop. `gluing` is the per-coordinate
/// composition of every glue step (defined on all original coordinates),
/// `restriction` collects the fixed coordinates with values pushed
/// forward into the final alphabet, and `reassembled_mu` recounts
/// nu^pi((F^pi)_{R->alpha}), which always dominates the loop's own final
/// measure.
#[derive(Debug, Clone)]
pub struct BoostReport {
    pub gluing: Gluing,
    pub restriction: Restriction,
    pub final_mu: Rat,
    pub reassembled_mu: Rat,
    pub target: f64,
    pub reached: bool,
    pub cap_hit: bool,
    pub premise_in_regime: bool,
    pub ledger: Vec<BoostLedgerEntry>,
}

/// Boosts nu(F) to at least nu(F)^eps by alternating the two steps of the
/// sharp-threshold argument: restrict on a witness when the current code
/// is not (log(1/mu), mu^(1-c))-global under the current measure, glue
/// the alphabet down by b^2 when it is. An initial b-balanced gluing
/// takes the alphabet to the largest power of b first.
pub fn boost_measure(
    f: &Code,
    nu: &ProductMeasure,
    eps: f64,
    b: usize,
    c: f64,
    r_cap: usize,
    step_cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BoostReport> {
    let shape = f.shape();
    let n = shape.n();
    let m = shape.m();
    if nu.n() != n || nu.radix(0) != m {
        return Err(Error::ShapeMismatch("measure does not match the code".into()));
    }
    if !(0.0 < eps && eps <= 1.0) || !(0.0 < c && c < 1.0) || b < 2 {
        return Err(Error::Invalid("boost needs 0 < eps <= 1, 0 < c < 1, b >= 2".into()));
    }
    let mu_start = f.measure_under(nu)?;
    let mu_start_f = rat_to_f64(&mu_start);
    let target = mu_start_f.powf(eps);
    let premise_in_regime = mu_start_f < 16f64.powf(-1.0 / eps)
        && {
            let bound = rat(b, m);
            (0..n).all(|i| (0..m).all(|a| *nu.entry(i, a) <= bound))
        };

    let mut composite = Gluing::identity(m, n);
    let mut fixed: Vec<(usize, u16)> = Vec::new();
    let mut ledger = Vec::new();
    let mut cur = f.clone();
    let mut cur_nu = nu.clone();
    let mut cur_m = m;
    let mut reached = rat_to_f64(&mu_start) >= target - 1e-12;
    let mut cap_hit = false;

    if !reached {
        // Initial gluing to the largest power of b.
        let mut m0 = 1usize;
        while m0 * b <= m {
            m0 *= b;
        }
        if m0 >= 2 && m0 < m {
            let pi = sample_gluing(cur_m, m0, n, b, rng)?;
            cur = glue_code(&cur, &pi)?;
            cur_nu = glue_measure(&cur_nu, &pi)?;
            composite = composite.compose(&pi)?;
            cur_m = m0;
            let mu = cur.measure_under(&cur_nu)?;
            ledger.push(BoostLedgerEntry {
                action: BoostAction::Glue { to: m0 },
                alphabet: m0,
                mu,
                r_used: 0,
            });
        }
    }

    let mut forced_mu: Option<Rat> = None;
    for _ in 0..step_cap {
        let mu = cur.measure_under(&cur_nu)?;
        let mu_f = rat_to_f64(&mu);
        if mu_f >= target - 1e-12 {
            reached = true;
            break;
        }
        let r_used = ((1.0 / mu_f).log2().ceil() as usize).clamp(1, r_cap);
        let threshold = mu_f.powf(1.0 - c);
        let (worst, witness, _) = worst_weighted_restriction(&cur, &cur_nu, r_used);
        if rat_to_f64(&worst) > threshold {
            // Not global: restrict on the maximal witness.
            let free: Vec<usize> = (0..n).filter(|i| !fixed.iter().any(|&(x, _)| x == *i)).collect();
            let orig: Vec<usize> = witness.coords().iter().map(|&j| free[j]).collect();
            for (&o, &v) in orig.iter().zip(witness.values()) {
                fixed.push((o, v));
            }
            if witness.coords().len() == cur.shape().n() {
                // The witness pins every remaining coordinate; a positive
                // density ratio means that point is a member, so the
                // restricted family is a single point of measure one.
                ledger.push(BoostLedgerEntry {
                    action: BoostAction::Restrict { coords: orig },
                    alphabet: cur_m,
                    mu: Rat::one(),
                    r_used,
                });
                forced_mu = Some(Rat::one());
                reached = true;
                break;
            }
            cur = cur.restrict(&witness);
            cur_nu = cur_nu.drop_coords(witness.coords())?;
            let mu_after = cur.measure_under(&cur_nu)?;
            ledger.push(BoostLedgerEntry {
                action: BoostAction::Restrict { coords: orig },
                alphabet: cur_m,
                mu: mu_after,
                r_used,
            });
        } else {
            // Global: glue the alphabet down by b^2.
            let shrink = b * b;
            if cur_m % shrink != 0 || cur_m / shrink < 2 {
                cap_hit = true;
                break;
            }
            let next_m = cur_m / shrink;
            let pi_small = sample_gluing(cur_m, next_m, cur.shape().n(), 1, rng)?;
            // Extend to every original coordinate so the composite and the
            // frozen restriction values can be pushed through.
            let survivors: Vec<usize> =
                (0..n).filter(|i| !fixed.iter().any(|&(x, _)| x == *i)).collect();
            let mut full_maps = Vec::with_capacity(n);
            let mut local = 0usize;
            for i in 0..n {
                if survivors.contains(&i) {
                    full_maps.push(pi_small.map(local).to_vec());
                    local += 1;
                } else {
                    full_maps.push(sample_coord_map(cur_m, next_m, 1, rng)?);
                }
            }
            let pi_full = Gluing::new(full_maps)?;
            cur = glue_code(&cur, &pi_small)?;
            cur_nu = glue_measure(&cur_nu, &pi_small)?;
            composite = composite.compose(&pi_full)?;
            for (i, v) in fixed.iter_mut() {
                *v = pi_full.apply_symbol(*i, *v);
            }
            cur_m = next_m;
            let mu_after = cur.measure_under(&cur_nu)?;
            ledger.push(BoostLedgerEntry {
                action: BoostAction::Glue { to: next_m },
                alphabet: next_m,
                mu: mu_after,
                r_used,
            });
        }
    }
    if !reached {
        let mu = cur.measure_under(&cur_nu)?;
        if rat_to_f64(&mu) >= target - 1e-12 {
            reached = true;
        } else if !cap_hit {
            cap_hit = true;
        }
    }

    // Reassemble (F^pi)_{R->alpha} in the original coordinate frame and
    // recount: the loop's final code embeds into it.
    fixed.sort_unstable_by_key(|&(i, _)| i);
    let restriction = Restriction::new(
        fixed.iter().map(|&(i, _)| i).collect(),
        fixed.iter().map(|&(_, v)| v).collect(),
    )?;
    let glued_all = glue_code(f, &composite)?;
    let pushed_all = glue_measure(nu, &composite)?;
    let final_mu = match forced_mu {
        Some(v) => v,
        None => cur.measure_under(&cur_nu)?,
    };
    let reassembled_mu = if restriction.is_empty() {
        glued_all.measure_under(&pushed_all)?
    } else if restriction.coords().len() == glued_all.shape().n() {
        // Fully pinned: the reassembled family is one point.
        let p = Point::from_raw(restriction.values().to_vec());
        if glued_all.contains(&p) {
            Rat::one()
        } else {
            Rat::zero()
        }
    } else {
        glued_all
            .restrict(&restriction)
            .measure_under(&pushed_all.drop_coords(restriction.coords())?)?
    };
    Ok(BoostReport {
        gluing: composite,
        restriction,
        final_mu,
        reassembled_mu,
        target,
        reached,
        cap_hit,
        premise_in_regime,
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::random_factor;
    use crate::space::agreement;
    use rand::SeedableRng;

    #[test]
    fn identity_gluing_changes_nothing() {
        let shape = Shape::new(3, 2).unwrap();
        let f = Code::from_ranks(&shape, [0, 4, 7]);
        let pi = Gluing::identity(3, 2);
        let glued = glue_code(&f, &pi).unwrap();
        assert_eq!(glued.len(), 3);
        assert_eq!(glued.measure(), f.measure());
        let nu = ProductMeasure::uniform(3, 2);
        assert_eq!(glue_measure(&nu, &pi).unwrap().factor(0), nu.factor(0));
    }

    #[test]
    fn one_balanced_fibers_are_exactly_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pi = sample_gluing(4, 2, 3, 1, &mut rng).unwrap();
        for i in 0..3 {
            assert_eq!(pi.fiber_sizes(i), vec![2, 2]);
        }
        assert!(pi.is_balanced(1));
    }

    #[test]
    fn one_balanced_needs_divisibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_coord_map(3, 2, 1, &mut rng).is_err());
        assert!(sample_coord_map(7, 3, 1, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_deterministic_under_a_seed() {
        let mut rng1 = ChaCha8Rng::seed_from_u64(99);
        let mut rng2 = ChaCha8Rng::seed_from_u64(99);
        let a = sample_gluing(6, 3, 4, 1, &mut rng1).unwrap();
        let b = sample_gluing(6, 3, 4, 1, &mut rng2).unwrap();
        assert_eq!(a, b);
        assert!(a.is_balanced(1));
    }

    #[test]
    fn rejection_sampler_returns_balanced_surjections() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let map = sample_coord_map(5, 2, 2, &mut rng).unwrap();
            let pi = Gluing::new(vec![map]).unwrap();
            assert!(pi.is_balanced(2));
            assert_eq!(pi.target(0), 2);
        }
    }

    #[test]
    fn majority_preimage_example_keeps_its_measure() {
        // F = words in [3]^6 with at least 4 coordinates in {1,2}; glue
        // {1,2} -> 1 and 3 -> 2 in every coordinate. F is a full preimage,
        // so the pushforward measure is unchanged, while the uniform
        // measure of the image is much smaller.
        let shape = Shape::new(3, 6).unwrap();
        let f = Code::from_fn(&shape, |p| {
            p.coords().iter().filter(|&&a| a <= 1).count() >= 4
        });
        assert_eq!(f.measure(), rat(496, 729));
        let pi = Gluing::new(vec![vec![0, 0, 1]; 6]).unwrap();
        let glued = glue_code(&f, &pi).unwrap();
        let pushed = glue_measure(&ProductMeasure::uniform(3, 6), &pi).unwrap();
        assert_eq!(pushed.entry(0, 0), &rat(2, 3));
        assert_eq!(pushed.entry(0, 1), &rat(1, 3));
        assert_eq!(glued.measure_under(&pushed).unwrap(), rat(496, 729));
        assert_eq!(glued.measure(), rat(22, 64));
    }

    #[test]
    fn gluing_never_loses_measure() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shape = Shape::new(4, 3).unwrap();
        let uniform = ProductMeasure::uniform(4, 3);
        let biased = ProductMeasure::new(
            (0..3).map(|_| random_factor(4, 64, &mut rng)).collect(),
        )
        .unwrap();
        for trial in 0..50 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.4));
            let b = 1 + trial % 2;
            let k = if b == 1 { 2 } else { 3 };
            let pi = sample_gluing(4, k, 3, b, &mut rng).unwrap();
            let glued = glue_code(&f, &pi).unwrap();
            for nu in [&uniform, &biased] {
                let pushed = glue_measure(nu, &pi).unwrap();
                assert!(
                    glued.measure_under(&pushed).unwrap() >= f.measure_under(nu).unwrap()
                );
            }
        }
    }

    #[test]
    fn gluing_preserves_t_intersecting() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let shape = Shape::new(4, 3).unwrap();
        let ball = crate::code::ball(&shape, crate::code::BallSpec { t: 2, r: 0 }).unwrap();
        for _ in 0..30 {
            // Random subfamilies of a 2-intersecting ball stay
            // 2-intersecting; so must their gluings.
            let f = Code::from_fn(&shape, |p| ball.contains(p) && rng.random_bool(0.7));
            assert!(f.is_t_intersecting(2));
            let pi = sample_gluing(4, 2, 3, 1, &mut rng).unwrap();
            let glued = glue_code(&f, &pi).unwrap();
            assert!(glued.is_t_intersecting(2));
        }
    }

    #[test]
    fn glued_disagreements_pull_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let shape = Shape::new(4, 3).unwrap();
        for _ in 0..20 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.5));
            let g = Code::from_fn(&shape, |_| rng.random_bool(0.5));
            let pi = sample_gluing(4, 2, 3, 1, &mut rng).unwrap();
            let fg = glue_code(&f, &pi).unwrap();
            let gg = glue_code(&g, &pi).unwrap();
            let pair = fg.members().find_map(|u| {
                gg.members()
                    .find(|v| agreement(&u, v) == 0)
                    .map(|v| (u.clone(), v))
            });
            if let Some((u, v)) = pair {
                let (x, y) = pull_back_disagreement(&f, &g, &pi, &u, &v).unwrap();
                assert_eq!(agreement(&x, &y), 0);
                assert!(f.contains(&x) && g.contains(&y));
            }
        }
    }

    #[test]
    fn expected_glued_measure_of_the_full_cube_is_one() {
        let shape = Shape::new(4, 2).unwrap();
        let f = Code::full(&shape);
        let nu = ProductMeasure::uniform(4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = expected_glued_measure(&f, &nu, 2, 20, &mut rng).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.sample_min, rat(1, 1));
        assert!(est.all_at_least_nu_f);
    }

    #[test]
    fn expected_glued_measure_of_a_dictator_in_a_wide_alphabet() {
        let shape = Shape::new(8, 3).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        let nu = ProductMeasure::uniform(8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let est = expected_glued_measure(&f, &nu, 2, 30, &mut rng).unwrap();
        assert!(est.all_at_least_nu_f);
        assert_eq!(est.s, 4);
        assert!(est.premise_balanced);
        assert!(est.mean >= 1.0 / 8.0);
    }

    #[test]
    fn boost_returns_immediately_on_the_full_cube() {
        let shape = Shape::new(4, 3).unwrap();
        let f = Code::full(&shape);
        let nu = ProductMeasure::uniform(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rep = boost_measure(&f, &nu, 0.5, 2, BOOST_DEFAULT_C, BOOST_R_CAP, 16, &mut rng)
            .unwrap();
        assert!(rep.reached);
        assert!(rep.ledger.is_empty());
        assert!(rep.restriction.is_empty());
        assert_eq!(rep.final_mu, rat(1, 1));
    }

    #[test]
    fn boost_restricts_a_thin_subcube_up_to_full_measure() {
        // Co-dimension-2 subcube in [9]^4: globalness fails at its fixed
        // coordinates, so restriction steps lift the measure to 1.
        let shape = Shape::new(9, 4).unwrap();
        let rho = Restriction::new(vec![0, 1], vec![4, 7]).unwrap();
        let f = crate::code::Subcube::new(&shape, rho).unwrap().as_code();
        let nu = ProductMeasure::uniform(9, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rep = boost_measure(&f, &nu, 0.5, 4, BOOST_DEFAULT_C, BOOST_R_CAP, 16, &mut rng)
            .unwrap();
        assert!(rep.reached);
        assert_eq!(rep.final_mu, rat(1, 1));
        assert!(rep
            .ledger
            .iter()
            .any(|e| matches!(e.action, BoostAction::Restrict { .. })));
        assert!(rep.reassembled_mu >= rep.final_mu);
    }

    #[test]
    fn boost_glues_a_perfectly_pseudorandom_family() {
        // The mod-16 sum family is global at every scale the loop tests
        // (restricted measures are all exactly 1/16), so the loop glues.
        // Any gluing [16] -> [4] leaves at least 16 of the 64 glued cells
        // occupied, so one glue step reaches the target 1/4.
        let shape = Shape::new(16, 3).unwrap();
        let f = Code::from_fn(&shape, |p| {
            p.coords().iter().map(|&a| a as usize).sum::<usize>() % 16 == 0
        });
        let nu = ProductMeasure::uniform(16, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rep = boost_measure(&f, &nu, 0.5, 2, BOOST_DEFAULT_C, 2, 16, &mut rng).unwrap();
        assert!(rep.reached);
        assert!(rep
            .ledger
            .iter()
            .any(|e| matches!(e.action, BoostAction::Glue { .. })));
        assert!(rat_to_f64(&rep.final_mu) >= rep.target - 1e-12);
        assert!(rep.reassembled_mu >= rep.final_mu);
    }

    #[test]
    fn boost_is_deterministic_under_a_seed() {
        let shape = Shape::new(4, 3).unwrap();
        let f = Code::from_ranks(&shape, [0, 5, 9, 13, 22, 40]);
        let nu = ProductMeasure::uniform(4, 3);
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            boost_measure(&f, &nu, 0.5, 2, BOOST_DEFAULT_C, BOOST_R_CAP, 16, &mut rng).unwrap()
        };
        let a = run(4);
        let b = run(4);
        assert_eq!(a.final_mu, b.final_mu);
        assert_eq!(a.restriction.coords(), b.restriction.coords());
        assert_eq!(a.gluing, b.gluing);
        assert_eq!(a.ledger.len(), b.ledger.len());
    }
}
