//! Codes F ⊆ [m]^n as dense indicators, and the exact combinatorics the
//! rest of the crate is built on: agreement predicates, balls, restrictions,
//! subcubes, juntas and budgeted isomorphism search.

use bitvec::prelude::*;

use crate::measure::ProductMeasure;
use crate::space::{agreement, Point, Shape};
use crate::{rat, Error, Rat, Result};

/// A set of points of [m]^n, one bit per rank. The raw bit order matches
/// the hex file encoding: byte j bit k (LSB first) is the point of rank
/// 8j + k.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Code {
    shape: Shape,
    bits: BitVec<u8, Lsb0>,
}

impl Code {
    pub fn empty(shape: &Shape) -> Code {
        Code { shape: shape.clone(), bits: bitvec![u8, Lsb0; 0; shape.size()] }
    }

    pub fn full(shape: &Shape) -> Code {
        Code { shape: shape.clone(), bits: bitvec![u8, Lsb0; 1; shape.size()] }
    }

    pub fn from_ranks(shape: &Shape, ranks: impl IntoIterator<Item = usize>) -> Code {
        let mut code = Code::empty(shape);
        for r in ranks {
            code.bits.set(r, true);
        }
        code
    }

    pub fn from_points<'a>(shape: &Shape, points: impl IntoIterator<Item = &'a Point>) -> Code {
        let mut code = Code::empty(shape);
        for p in points {
            let r = shape.rank(p);
            code.bits.set(r, true);
        }
        code
    }

    pub fn from_fn(shape: &Shape, mut pred: impl FnMut(&Point) -> bool) -> Code {
        let mut code = Code::empty(shape);
        for idx in 0..shape.size() {
            if pred(&shape.unrank(idx)) {
                code.bits.set(idx, true);
            }
        }
        code
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains_rank(&self, rank: usize) -> bool {
        self.bits[rank]
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.bits[self.shape.rank(p)]
    }

    pub fn insert(&mut self, p: &Point) {
        let r = self.shape.rank(p);
        self.bits.set(r, true);
    }

    pub fn insert_rank(&mut self, rank: usize) {
        self.bits.set(rank, true);
    }

    pub fn remove_rank(&mut self, rank: usize) {
        self.bits.set(rank, false);
    }

    pub fn member_ranks(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn members(&self) -> impl Iterator<Item = Point> + '_ {
        self.bits.iter_ones().map(move |r| self.shape.unrank(r))
    }

    /// Raw indicator bytes, little-endian by rank, padded to whole bytes.
    pub fn indicator_bytes(&self) -> &[u8] {
        self.bits.as_raw_slice()
    }

    pub fn from_indicator_bytes(shape: &Shape, bytes: &[u8]) -> Result<Code> {
        let need = shape.size().div_ceil(8);
        if bytes.len() != need {
            return Err(Error::Parse(format!(
                "indicator needs {} bytes for {} points, got {}",
                need,
                shape.size(),
                bytes.len()
            )));
        }
        let mut bits = BitVec::<u8, Lsb0>::from_slice(bytes);
        // Padding bits beyond the last rank must be zero for round-trips.
        if bits[shape.size()..].any() {
            return Err(Error::Parse("nonzero padding bits in indicator".into()));
        }
        bits.truncate(shape.size());
        Ok(Code { shape: shape.clone(), bits })
    }

    fn check_same_shape(&self, other: &Code) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "[{}]^{} vs [{}]^{}",
                self.shape.m(),
                self.shape.n(),
                other.shape.m(),
                other.shape.n()
            )));
        }
        Ok(())
    }

    pub fn union(&self, other: &Code) -> Code {
        self.check_same_shape(other).expect("union needs equal shapes");
        let mut bits = self.bits.clone();
        bits |= &other.bits;
        Code { shape: self.shape.clone(), bits }
    }

    pub fn intersection(&self, other: &Code) -> Code {
        self.check_same_shape(other).expect("intersection needs equal shapes");
        let mut bits = self.bits.clone();
        bits &= &other.bits;
        Code { shape: self.shape.clone(), bits }
    }

    pub fn minus(&self, other: &Code) -> Code {
        self.check_same_shape(other).expect("difference needs equal shapes");
        let mut bits = self.bits.clone();
        for r in other.bits.iter_ones() {
            bits.set(r, false);
        }
        Code { shape: self.shape.clone(), bits }
    }

    pub fn complement(&self) -> Code {
        let mut bits = self.bits.clone();
        for mut b in bits.iter_mut() {
            *b = !*b;
        }
        Code { shape: self.shape.clone(), bits }
    }

    pub fn is_subset(&self, other: &Code) -> bool {
        self.bits.iter_ones().all(|r| other.bits[r])
    }

    /// Exact uniform measure |F| / m^n.
    pub fn measure(&self) -> Rat {
        rat(self.len(), self.shape.size())
    }

    /// ν(F) = Σ_{x ∈ F} Π_i ν_i(x_i), exact.
    pub fn measure_under(&self, nu: &ProductMeasure) -> Result<Rat> {
        if nu.n() != self.shape.n() || (0..nu.n()).any(|i| nu.radix(i) != self.shape.m()) {
            return Err(Error::ShapeMismatch("measure does not match code shape".into()));
        }
        let mut total = rat(0, 1);
        for p in self.members() {
            let mut w = rat(1, 1);
            for (i, &c) in p.coords().iter().enumerate() {
                w *= nu.entry(i, c as usize).clone();
            }
            total += w;
        }
        Ok(total)
    }

    /// Every pair of distinct members agrees on at least t coordinates.
    pub fn is_t_intersecting(&self, t: usize) -> bool {
        let pts: Vec<Point> = self.members().collect();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if agreement(&pts[i], &pts[j]) < t {
                    return false;
                }
            }
        }
        true
    }

    /// No pair of distinct members agrees on exactly s coordinates.
    pub fn is_s_avoiding(&self, s: usize) -> bool {
        let pts: Vec<Point> = self.members().collect();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if agreement(&pts[i], &pts[j]) == s {
                    return false;
                }
            }
        }
        true
    }

    /// Every x ∈ self, y ∈ other agrees on at least t coordinates (x = y
    /// pairs included; cross-intersection quantifies over all pairs).
    pub fn cross_t_intersecting(&self, other: &Code, t: usize) -> bool {
        let xs: Vec<Point> = self.members().collect();
        let ys: Vec<Point> = other.members().collect();
        for x in &xs {
            for y in &ys {
                if agreement(x, y) < t {
                    return false;
                }
            }
        }
        true
    }

    /// Sorted multiset of pairwise agreements over distinct member pairs.
    /// Invariant under isomorphism; used for pruning and as a test oracle.
    pub fn agreement_multiset(&self) -> Vec<usize> {
        let pts: Vec<Point> = self.members().collect();
        let mut out = Vec::new();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                out.push(agreement(&pts[i], &pts[j]));
            }
        }
        out.sort_unstable();
        out
    }

    /// The restriction F(α) ⊆ [m]^([n] \ R): words whose extension by α on
    /// R lies in F.
    pub fn restrict(&self, rho: &Restriction) -> Code {
        rho.validate(&self.shape).expect("restriction must fit the shape");
        let sub_shape = self.shape.drop_coords(rho.len()).expect("sub-shape is smaller");
        let mut out = Code::empty(&sub_shape);
        let free: Vec<usize> =
            (0..self.shape.n()).filter(|i| !rho.coords.contains(i)).collect();
        let mut full = vec![0u16; self.shape.n()];
        for (&i, &a) in rho.coords.iter().zip(&rho.values) {
            full[i] = a;
        }
        for sub_idx in 0..sub_shape.size() {
            let y = sub_shape.unrank(sub_idx);
            for (k, &i) in free.iter().enumerate() {
                full[i] = y.get(k);
            }
            if self.contains_rank(self.shape.rank(&Point::from_raw(full.clone()))) {
                out.bits.set(sub_idx, true);
            }
        }
        out
    }

    /// The subcode F[α] ⊆ [m]^n: members of F with x_R = α.
    pub fn subcode(&self, rho: &Restriction) -> Code {
        rho.validate(&self.shape).expect("restriction must fit the shape");
        let mut out = Code::empty(&self.shape);
        for r in self.member_ranks() {
            let p = self.shape.unrank(r);
            if rho.matches(&p) {
                out.bits.set(r, true);
            }
        }
        out
    }

    /// The dictator D_{i→a} = {x : x_i = a} (0-based i and a).
    pub fn dictator(shape: &Shape, i: usize, a: u16) -> Code {
        Code::from_fn(shape, |p| p.get(i) == a)
    }

    /// Membership depends only on coordinates in J, with accepted patterns
    /// listed as 0-based words over J (in the order of `coords`).
    pub fn junta_from(shape: &Shape, coords: &[usize], patterns: &[Vec<u16>]) -> Result<Code> {
        for &i in coords {
            if i >= shape.n() {
                return Err(Error::Invalid(format!("junta coordinate {i} out of range")));
            }
        }
        for pat in patterns {
            if pat.len() != coords.len() {
                return Err(Error::Invalid("junta pattern length mismatch".into()));
            }
        }
        Ok(Code::from_fn(shape, |p| {
            let key: Vec<u16> = coords.iter().map(|&i| p.get(i)).collect();
            patterns.iter().any(|pat| *pat == key)
        }))
    }

    /// The exact set of coordinates membership depends on: i is included
    /// iff changing coordinate i alone can change membership. This is the
    /// minimal J such that F is a J-junta.
    pub fn junta_support(&self, op_budget: usize) -> Result<Vec<usize>> {
        let n = self.shape.n();
        let m = self.shape.m();
        let cost = self.shape.size().saturating_mul(n).saturating_mul(m);
        if cost > op_budget {
            return Err(Error::Budget(format!(
                "junta_support needs ~{cost} membership probes, budget {op_budget}"
            )));
        }
        let mut support = Vec::new();
        'coord: for i in 0..n {
            for idx in 0..self.shape.size() {
                let p = self.shape.unrank(idx);
                let here = self.contains_rank(idx);
                for v in 0..m as u16 {
                    if v == p.get(i) {
                        continue;
                    }
                    let mut q = p.clone();
                    q.set(i, v);
                    if self.contains(&q) != here {
                        support.push(i);
                        continue 'coord;
                    }
                }
            }
        }
        Ok(support)
    }

    pub fn apply_isomorphism(&self, iso: &Isomorphism) -> Code {
        iso.validate(&self.shape).expect("isomorphism must fit the shape");
        let mut out = Code::empty(&self.shape);
        for p in self.members() {
            out.insert(&iso.apply(&p));
        }
        out
    }
}

/// A partial assignment R → α of values to a sorted set of coordinates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Restriction {
    coords: Vec<usize>,
    values: Vec<u16>,
}

impl Restriction {
    /// 0-based coordinates (strictly increasing) and 0-based values.
    pub fn new(coords: Vec<usize>, values: Vec<u16>) -> Result<Restriction> {
        if coords.len() != values.len() {
            return Err(Error::Invalid("restriction coords/values length mismatch".into()));
        }
        if coords.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("restriction coordinates must strictly increase".into()));
        }
        Ok(Restriction { coords, values })
    }

    pub fn empty() -> Restriction {
        Restriction { coords: Vec::new(), values: Vec::new() }
    }

    pub fn single(i: usize, a: u16) -> Restriction {
        Restriction { coords: vec![i], values: vec![a] }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn validate(&self, shape: &Shape) -> Result<()> {
        for (&i, &a) in self.coords.iter().zip(&self.values) {
            if i >= shape.n() {
                return Err(Error::Invalid(format!("restricted coordinate {i} out of range")));
            }
            if a as usize >= shape.m() {
                return Err(Error::SymbolOutOfRange { value: a as u32 + 1, m: shape.m() as u32 });
            }
        }
        Ok(())
    }

    pub fn matches(&self, p: &Point) -> bool {
        self.coords.iter().zip(&self.values).all(|(&i, &a)| p.get(i) == a)
    }

    /// Merge two restrictions on disjoint coordinate sets.
    pub fn merge(&self, other: &Restriction) -> Result<Restriction> {
        let mut pairs: Vec<(usize, u16)> = self
            .coords
            .iter()
            .copied()
            .zip(self.values.iter().copied())
            .chain(other.coords.iter().copied().zip(other.values.iter().copied()))
            .collect();
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Invalid("restrictions overlap".into()));
        }
        let (coords, values) = pairs.into_iter().unzip();
        Restriction::new(coords, values)
    }
}

/// The subcube D_{R→α} as a code-producing description.
#[derive(Clone, Debug)]
pub struct Subcube {
    pub restriction: Restriction,
    pub shape: Shape,
}

impl Subcube {
    pub fn new(shape: &Shape, restriction: Restriction) -> Result<Subcube> {
        restriction.validate(shape)?;
        Ok(Subcube { restriction, shape: shape.clone() })
    }

    pub fn codimension(&self) -> usize {
        self.restriction.len()
    }

    pub fn as_code(&self) -> Code {
        Code::from_fn(&self.shape, |p| self.restriction.matches(p))
    }
}

/// The ball S_{t,r}: words with at least t+r of the first t+2r coordinates
/// equal to the symbol 1.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct BallSpec {
    pub t: usize,
    pub r: usize,
}

impl BallSpec {
    pub fn feasible(&self, shape: &Shape) -> bool {
        self.t >= 1 && self.t + 2 * self.r <= shape.n()
    }
}

pub fn ball(shape: &Shape, spec: BallSpec) -> Result<Code> {
    if !spec.feasible(shape) {
        return Err(Error::Infeasible(format!(
            "ball t={} r={} needs t+2r <= n={}",
            spec.t,
            spec.r,
            shape.n()
        )));
    }
    let window = spec.t + 2 * spec.r;
    let need = spec.t + spec.r;
    Ok(Code::from_fn(shape, |p| {
        p.coords()[..window].iter().filter(|&&c| c == 0).count() >= need
    }))
}

/// Largest ball for given t, over all feasible radii; ties go to the
/// smallest radius.
pub fn best_ball(shape: &Shape, t: usize) -> Result<(usize, usize, Code)> {
    if t < 1 || t > shape.n() {
        return Err(Error::Infeasible(format!("best_ball needs 1 <= t <= n, got t={t}")));
    }
    let mut best: Option<(usize, usize, Code)> = None;
    let mut r = 0;
    while t + 2 * r <= shape.n() {
        let code = ball(shape, BallSpec { t, r })?;
        let size = code.len();
        match &best {
            Some((_, best_size, _)) if size <= *best_size => {}
            _ => best = Some((r, size, code)),
        }
        r += 1;
    }
    Ok(best.expect("r = 0 is always feasible"))
}

/// A symmetry of [m]^n: a coordinate permutation σ composed with an
/// independent symbol bijection per coordinate. The image point y of x has
/// y_{σ(i)} = τ_i(x_i).
#[derive(Clone, Debug)]
pub struct Isomorphism {
    pub sigma: Vec<usize>,
    pub taus: Vec<Vec<u16>>,
}

impl Isomorphism {
    pub fn identity(shape: &Shape) -> Isomorphism {
        Isomorphism {
            sigma: (0..shape.n()).collect(),
            taus: vec![(0..shape.m() as u16).collect(); shape.n()],
        }
    }

    pub fn validate(&self, shape: &Shape) -> Result<()> {
        let n = shape.n();
        let m = shape.m();
        let mut seen = vec![false; n];
        if self.sigma.len() != n || self.taus.len() != n {
            return Err(Error::Invalid("isomorphism arity mismatch".into()));
        }
        for &j in &self.sigma {
            if j >= n || seen[j] {
                return Err(Error::Invalid("sigma is not a permutation".into()));
            }
            seen[j] = true;
        }
        for tau in &self.taus {
            let mut hit = vec![false; m];
            if tau.len() != m {
                return Err(Error::Invalid("tau arity mismatch".into()));
            }
            for &b in tau {
                if b as usize >= m || hit[b as usize] {
                    return Err(Error::Invalid("tau is not a bijection".into()));
                }
                hit[b as usize] = true;
            }
        }
        Ok(())
    }

    pub fn apply(&self, p: &Point) -> Point {
        let mut out = vec![0u16; p.len()];
        for (i, &c) in p.coords().iter().enumerate() {
            out[self.sigma[i]] = self.taus[i][c as usize];
        }
        Point::from_raw(out)
    }
}

/// Outcome of a budgeted isomorphism search.
#[derive(Clone, Debug)]
pub enum IsoVerdict {
    Isomorphic(Isomorphism),
    NotIsomorphic,
    /// Search budget exhausted before the space was covered.
    Unknown,
}

/// Exhaustive isomorphism test for tiny shapes. Prunes with size,
/// agreement-multiset and per-coordinate symbol-frequency invariants, then
/// backtracks over (σ, τ) assignments; `node_budget` caps the number of
/// search nodes visited.
pub fn is_isomorphic_small(f: &Code, g: &Code, node_budget: usize) -> IsoVerdict {
    if f.shape() != g.shape() {
        return IsoVerdict::NotIsomorphic;
    }
    if f.len() != g.len() {
        return IsoVerdict::NotIsomorphic;
    }
    if f.agreement_multiset() != g.agreement_multiset() {
        return IsoVerdict::NotIsomorphic;
    }
    let shape = f.shape().clone();
    let n = shape.n();
    let m = shape.m();

    // freq[i][a] = number of members with coordinate i equal to a.
    let freq = |code: &Code| -> Vec<Vec<usize>> {
        let mut out = vec![vec![0usize; m]; n];
        for p in code.members() {
            for (i, &c) in p.coords().iter().enumerate() {
                out[i][c as usize] += 1;
            }
        }
        out
    };
    let ff = freq(f);
    let fg = freq(g);
    let sorted = |v: &[usize]| {
        let mut s = v.to_vec();
        s.sort_unstable();
        s
    };

    struct Search<'a> {
        f: &'a Code,
        g: &'a Code,
        ff: &'a [Vec<usize>],
        fg: &'a [Vec<usize>],
        n: usize,
        m: usize,
        nodes: usize,
        budget: usize,
        exhausted: bool,
    }

    impl Search<'_> {
        fn spend(&mut self) -> bool {
            self.nodes += 1;
            if self.nodes > self.budget {
                self.exhausted = true;
            }
            self.exhausted
        }

        // Assign σ coordinate by coordinate, then symbol bijections.
        fn go(&mut self, sigma: &mut Vec<usize>, used: &mut Vec<bool>) -> Option<Isomorphism> {
            if self.spend() {
                return None;
            }
            let i = sigma.len();
            if i == self.n {
                let mut taus: Vec<Vec<u16>> = Vec::with_capacity(self.n);
                return self.taus(sigma, &mut taus);
            }
            for j in 0..self.n {
                if used[j] {
                    continue;
                }
                // σ(i) = j requires matching frequency profiles up to
                // symbol relabelling.
                let mut a = self.ff[i].clone();
                let mut b = self.fg[j].clone();
                a.sort_unstable();
                b.sort_unstable();
                if a != b {
                    continue;
                }
                sigma.push(j);
                used[j] = true;
                if let Some(found) = self.go(sigma, used) {
                    return Some(found);
                }
                sigma.pop();
                used[j] = false;
                if self.exhausted {
                    return None;
                }
            }
            None
        }

        fn taus(&mut self, sigma: &[usize], taus: &mut Vec<Vec<u16>>) -> Option<Isomorphism> {
            if self.spend() {
                return None;
            }
            let i = taus.len();
            if i == self.n {
                let iso = Isomorphism { sigma: sigma.to_vec(), taus: taus.clone() };
                if self.f.apply_isomorphism(&iso) == *self.g {
                    return Some(iso);
                }
                return None;
            }
            let j = sigma[i];
            let mut tau = vec![u16::MAX; self.m];
            if let Some(found) = self.tau_symbols(sigma, taus, i, j, &mut tau, 0, 0) {
                return Some(found);
            }
            None
        }

        #[allow(clippy::too_many_arguments)]
        fn tau_symbols(
            &mut self,
            sigma: &[usize],
            taus: &mut Vec<Vec<u16>>,
            i: usize,
            j: usize,
            tau: &mut Vec<u16>,
            a: usize,
            taken: u64,
        ) -> Option<Isomorphism> {
            if self.spend() {
                return None;
            }
            if a == self.m {
                taus.push(tau.clone());
                let out = self.taus(sigma, taus);
                if out.is_some() {
                    return out;
                }
                taus.pop();
                return None;
            }
            for b in 0..self.m {
                if taken >> b & 1 == 1 || self.ff[i][a] != self.fg[j][b] {
                    continue;
                }
                tau[a] = b as u16;
                if let Some(found) =
                    self.tau_symbols(sigma, taus, i, j, tau, a + 1, taken | 1 << b)
                {
                    return Some(found);
                }
                if self.exhausted {
                    return None;
                }
            }
            None
        }
    }

    // Cheap necessary condition before searching: the sorted frequency
    // profiles of the two codes must agree as multisets of vectors.
    let mut pf: Vec<Vec<usize>> = ff.iter().map(|v| sorted(v)).collect();
    let mut pg: Vec<Vec<usize>> = fg.iter().map(|v| sorted(v)).collect();
    pf.sort();
    pg.sort();
    if pf != pg {
        return IsoVerdict::NotIsomorphic;
    }

    let mut search = Search {
        f,
        g,
        ff: &ff,
        fg: &fg,
        n,
        m,
        nodes: 0,
        budget: node_budget,
        exhausted: false,
    };
    let mut sigma = Vec::new();
    let mut used = vec![false; n];
    match search.go(&mut sigma, &mut used) {
        Some(iso) => IsoVerdict::Isomorphic(iso),
        None if search.exhausted => IsoVerdict::Unknown,
        None => IsoVerdict::NotIsomorphic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(m: u32, n: u32) -> Shape {
        Shape::new(m, n).unwrap()
    }

    fn pt(shape: &Shape, symbols: &[u32]) -> Point {
        Point::from_symbols(symbols, shape).unwrap()
    }

    #[test]
    fn ball_counts() {
        assert_eq!(ball(&shape(3, 2), BallSpec { t: 1, r: 0 }).unwrap().len(), 3);
        assert_eq!(ball(&shape(3, 3), BallSpec { t: 1, r: 0 }).unwrap().len(), 9);
        assert_eq!(ball(&shape(3, 3), BallSpec { t: 1, r: 1 }).unwrap().len(), 7);
        assert_eq!(ball(&shape(3, 4), BallSpec { t: 2, r: 0 }).unwrap().len(), 9);
        assert_eq!(ball(&shape(3, 4), BallSpec { t: 2, r: 1 }).unwrap().len(), 9);
        assert!(ball(&shape(3, 2), BallSpec { t: 1, r: 1 }).is_err());
    }

    #[test]
    fn balls_are_t_intersecting() {
        for (m, n) in [(2, 4), (3, 3), (3, 4), (4, 3)] {
            let sh = shape(m, n);
            for t in 1..=n as usize {
                let mut r = 0;
                while t + 2 * r <= n as usize {
                    let b = ball(&sh, BallSpec { t, r }).unwrap();
                    assert!(b.is_t_intersecting(t), "S_{{{t},{r}}}[{m}]^{n} not {t}-intersecting");
                    r += 1;
                }
            }
        }
    }

    #[test]
    fn best_ball_ties_take_smallest_radius() {
        let (r, size, _) = best_ball(&shape(3, 3), 1).unwrap();
        assert_eq!((r, size), (0, 9));
        let (r, size, _) = best_ball(&shape(2, 3), 1).unwrap();
        assert_eq!((r, size), (0, 4));
        let (r, size, _) = best_ball(&shape(3, 4), 2).unwrap();
        assert_eq!((r, size), (0, 9));
    }

    #[test]
    fn intersecting_and_avoiding() {
        let sh = shape(3, 2);
        let dict = Code::dictator(&sh, 0, 0);
        assert!(dict.is_t_intersecting(1));
        let two = Code::from_points(&sh, [&pt(&sh, &[1, 1]), &pt(&sh, &[2, 2])]);
        assert!(!two.is_s_avoiding(0));
        let b = ball(&shape(3, 3), BallSpec { t: 1, r: 1 }).unwrap();
        assert!(b.is_t_intersecting(1));
    }

    #[test]
    fn avoiding_matches_naive_oracle() {
        // Independent double-loop oracle over raw symbol vectors.
        let sh = shape(3, 2);
        for mask in 0u32..512 {
            let code = Code::from_ranks(&sh, (0..9).filter(|i| mask >> i & 1 == 1));
            for s in 0..=2usize {
                let pts: Vec<Point> = code.members().collect();
                let mut naive = true;
                for i in 0..pts.len() {
                    for j in 0..pts.len() {
                        if i != j && agreement(&pts[i], &pts[j]) == s {
                            naive = false;
                        }
                    }
                }
                assert_eq!(code.is_s_avoiding(s), naive);
            }
        }
    }

    #[test]
    fn restriction_and_subcode_measures() {
        let sh = shape(3, 2);
        let f = Code::dictator(&sh, 0, 0);
        let r1 = f.restrict(&Restriction::single(0, 0));
        assert_eq!(r1.len(), 3); // full [3]^1
        let r2 = f.restrict(&Restriction::single(0, 1));
        assert!(r2.is_empty());
        let sub = f.subcode(&Restriction::single(0, 0));
        assert_eq!(sub.len(), r1.len());
        // m^{|R|} * mu(subcode) = mu(restrict)
        assert_eq!(rat(3, 1) * sub.measure(), r1.measure());
    }

    #[test]
    fn averaging_over_patterns() {
        let sh = shape(3, 3);
        let f = ball(&sh, BallSpec { t: 1, r: 1 }).unwrap();
        for coords in [vec![0], vec![1, 2]] {
            let mut total = 0;
            let k = coords.len();
            let pat_shape = shape(3, k as u32);
            for pat in pat_shape.points() {
                let rho = Restriction::new(coords.clone(), pat.coords().to_vec()).unwrap();
                total += f.subcode(&rho).len();
            }
            assert_eq!(total, f.len());
        }
    }

    #[test]
    fn junta_support_examples() {
        let sh = shape(3, 4);
        let b = ball(&sh, BallSpec { t: 1, r: 1 }).unwrap();
        assert_eq!(b.junta_support(usize::MAX).unwrap(), vec![0, 1, 2]);
        assert_eq!(Code::full(&sh).junta_support(usize::MAX).unwrap(), Vec::<usize>::new());
        let sh2 = shape(3, 2);
        let j = Code::junta_from(&sh2, &[0], &[vec![0]]).unwrap();
        assert_eq!(j, Code::dictator(&sh2, 0, 0));
    }

    #[test]
    fn isomorphism_action_and_search() {
        let sh = shape(3, 2);
        let f = Code::dictator(&sh, 0, 0);
        let id = Isomorphism::identity(&sh);
        assert_eq!(f.apply_isomorphism(&id), f);

        // Swap symbols 1 and 2 in coordinate 1.
        let mut iso = Isomorphism::identity(&sh);
        iso.taus[0] = vec![1, 0, 2];
        assert_eq!(f.apply_isomorphism(&iso), Code::dictator(&sh, 0, 1));

        // {x_1 = 1} is isomorphic to {x_2 = 3} by coordinate swap + relabel.
        let g = Code::dictator(&sh, 1, 2);
        match is_isomorphic_small(&f, &g, 1 << 20) {
            IsoVerdict::Isomorphic(iso) => assert_eq!(f.apply_isomorphism(&iso), g),
            other => panic!("expected isomorphic, got {other:?}"),
        }

        // Different sizes are never isomorphic.
        let h = Code::from_ranks(&sh, [0]);
        assert!(matches!(is_isomorphic_small(&f, &h, 1 << 20), IsoVerdict::NotIsomorphic));
    }

    #[test]
    fn isomorphism_preserves_agreement_multiset() {
        let sh = shape(3, 3);
        let b = ball(&sh, BallSpec { t: 1, r: 1 }).unwrap();
        let mut iso = Isomorphism::identity(&sh);
        iso.sigma = vec![2, 0, 1];
        iso.taus[1] = vec![2, 1, 0];
        let image = b.apply_isomorphism(&iso);
        assert_eq!(image.len(), b.len());
        assert_eq!(image.agreement_multiset(), b.agreement_multiset());
        assert_eq!(image.is_t_intersecting(1), b.is_t_intersecting(1));
    }

    #[test]
    fn indicator_bytes_roundtrip() {
        let sh = shape(3, 2);
        let f = Code::from_ranks(&sh, [0, 3, 8]);
        let bytes = f.indicator_bytes().to_vec();
        assert_eq!(bytes.len(), 2);
        let back = Code::from_indicator_bytes(&sh, &bytes).unwrap();
        assert_eq!(back, f);
    }
}
