//! Symbol compression towards 1, the reduction to the binary cube, and
//! the measure comparison pipeline built on both.
//!
//! T_{i,j} replaces symbol j by 1 in coordinate i. On families it moves
//! each member x with x_i = j to its compressed image unless that image is
//! already present, so the size never changes.

use bitvec::prelude::*;
use num::{One, Signed, Zero};

use crate::code::Code;
use crate::space::Point;
use crate::{rat, Error, Rat, Result};

/// T_{i,j}(x): 0-based coordinate i, 0-based symbol j (so j >= 1; the
/// target symbol is 0).
pub fn compress_point(p: &Point, i: usize, j: u16) -> Point {
    let mut out = p.clone();
    if out.get(i) == j {
        out.set(i, 0);
    }
    out
}

/// T_{i,j}(F) = {x in F : T_{i,j}(x) in F} ∪ {T_{i,j}(x) : x in F}.
pub fn compress_family(f: &Code, i: usize, j: u16) -> Code {
    let shape = f.shape().clone();
    let mut out = Code::empty(&shape);
    for p in f.members() {
        let image = compress_point(&p, i, j);
        if f.contains(&image) {
            // Either p was already compressed here or its image is taken;
            // both p and the image stay.
            out.insert(&p);
        }
        out.insert(&image);
    }
    out
}

/// T_i = T_{i,2} ∘ ... ∘ T_{i,m}: the highest symbol is compressed first.
pub fn compress_coord(f: &Code, i: usize) -> Code {
    let m = f.shape().m();
    let mut out = f.clone();
    for j in (1..m as u16).rev() {
        out = compress_family(&out, i, j);
    }
    out
}

/// T = T_1 ∘ ... ∘ T_n: coordinate n is compressed first.
pub fn compress_full(f: &Code) -> Code {
    let n = f.shape().n();
    let mut out = f.clone();
    for i in (0..n).rev() {
        out = compress_coord(&out, i);
    }
    out
}

/// Fixed by every single compression.
pub fn is_compressed(f: &Code) -> bool {
    let n = f.shape().n();
    let m = f.shape().m();
    for i in 0..n {
        for j in 1..m as u16 {
            if compress_family(f, i, j) != *f {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct CompressionPreserved {
    pub hypothesis: bool,
    pub conclusion: bool,
    /// hypothesis → conclusion.
    pub holds: bool,
}

/// Cross-t-intersection survives a single compression step.
pub fn preserved_under_compression_check(
    f: &Code,
    g: &Code,
    t: usize,
    i: usize,
    j: u16,
) -> CompressionPreserved {
    let hypothesis = f.cross_t_intersecting(g, t);
    let conclusion =
        compress_family(f, i, j).cross_t_intersecting(&compress_family(g, i, j), t);
    CompressionPreserved { hypothesis, conclusion, holds: !hypothesis || conclusion }
}

/// A subset of {0,1}^n; bit true means the coordinate carries a one. Rank
/// order puts coordinate 1 most significant, ones before zeros, matching
/// the symbol order of a Code with m = 2 (symbol 1 = one, symbol 2 = zero).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryFamily {
    n: usize,
    bits: BitVec<u8, Lsb0>,
}

impl BinaryFamily {
    pub fn empty(n: usize) -> BinaryFamily {
        BinaryFamily { n, bits: bitvec![u8, Lsb0; 0; 1 << n] }
    }

    pub fn full(n: usize) -> BinaryFamily {
        BinaryFamily { n, bits: bitvec![u8, Lsb0; 1; 1 << n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rank of a word: coordinate 1 most significant, a one contributes 0
    /// (so the all-ones word has rank 0, like the all-1s word of a Code).
    pub fn rank(&self, word: &[bool]) -> usize {
        word.iter().fold(0, |acc, &b| acc * 2 + usize::from(!b))
    }

    pub fn unrank(&self, mut idx: usize) -> Vec<bool> {
        let mut word = vec![false; self.n];
        for i in (0..self.n).rev() {
            word[i] = idx % 2 == 0;
            idx /= 2;
        }
        word
    }

    pub fn contains(&self, word: &[bool]) -> bool {
        self.bits[self.rank(word)]
    }

    pub fn insert(&mut self, word: &[bool]) {
        let r = self.rank(word);
        self.bits.set(r, true);
    }

    pub fn members(&self) -> impl Iterator<Item = Vec<bool>> + '_ {
        self.bits.iter_ones().map(move |r| self.unrank(r))
    }

    /// Closed upwards: flipping any zero to one stays inside.
    pub fn is_monotone(&self) -> bool {
        for word in self.members().collect::<Vec<_>>() {
            for i in 0..self.n {
                if !word[i] {
                    let mut up = word.clone();
                    up[i] = true;
                    if !self.contains(&up) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Exact p-biased measure: sum over members of p^{#ones} (1-p)^{#zeros}.
    pub fn mu_p(&self, p: &Rat) -> Result<Rat> {
        if p.is_negative() || *p > Rat::one() {
            return Err(Error::Invalid("bias must lie in [0,1]".into()));
        }
        let q = Rat::one() - p.clone();
        let mut total = Rat::zero();
        for word in self.members() {
            let ones = word.iter().filter(|&&b| b).count();
            let mut w = Rat::one();
            for _ in 0..ones {
                w *= p.clone();
            }
            for _ in 0..(self.n - ones) {
                w *= q.clone();
            }
            total += w;
        }
        Ok(total)
    }

    pub fn mu_p_f64(&self, p: f64) -> f64 {
        self.members()
            .map(|word| {
                let ones = word.iter().filter(|&&b| b).count() as i32;
                p.powi(ones) * (1.0 - p).powi(self.n as i32 - ones)
            })
            .sum()
    }

    /// Every pair (x, y) with x in self, y in other agrees in some
    /// coordinate.
    pub fn cross_agreeing(&self, other: &BinaryFamily) -> bool {
        let xs: Vec<Vec<bool>> = self.members().collect();
        let ys: Vec<Vec<bool>> = other.members().collect();
        xs.iter().all(|x| {
            ys.iter().all(|y| x.iter().zip(y).any(|(a, b)| a == b))
        })
    }

    /// Every pair shares at least t coordinates that are one in both.
    pub fn cross_common_ones(&self, other: &BinaryFamily, t: usize) -> bool {
        let xs: Vec<Vec<bool>> = self.members().collect();
        let ys: Vec<Vec<bool>> = other.members().collect();
        xs.iter().all(|x| {
            ys.iter()
                .all(|y| x.iter().zip(y).filter(|(&a, &b)| a && b).count() >= t)
        })
    }
}

/// Image of F under the coordinatewise map sending symbol 1 to one and
/// everything else to zero. The guarantees (monotone image, measure
/// comparison) hold for compressed F.
pub fn reduce(f: &Code) -> BinaryFamily {
    let mut out = BinaryFamily::empty(f.shape().n());
    for p in f.members() {
        let word: Vec<bool> = p.coords().iter().map(|&c| c == 0).collect();
        out.insert(&word);
    }
    out
}

#[derive(Clone, Debug)]
pub struct MeasureSumCheck {
    pub cross_agreeing: bool,
    pub sum: Rat,
    /// cross-agreeing → μ(A) + μ(B) ≤ 1.
    pub holds: bool,
}

pub fn measure_sum_check(a: &BinaryFamily, b: &BinaryFamily) -> Result<MeasureSumCheck> {
    if a.n() != b.n() {
        return Err(Error::ShapeMismatch("binary families of different lengths".into()));
    }
    let half = rat(1, 2);
    let sum = a.mu_p(&half)? + b.mu_p(&half)?;
    let cross = a.cross_agreeing(b);
    Ok(MeasureSumCheck { cross_agreeing: cross, holds: !cross || sum <= Rat::one(), sum })
}

#[derive(Clone, Debug)]
pub struct BumpCheck {
    pub monotone: bool,
    pub premise_ok: bool,
    pub mu_q: f64,
    pub bound: f64,
    /// premises → μ_q ≥ q^α.
    pub holds: bool,
}

/// Monotone A with μ_p(A) ≥ p ^ alpha and p ≤ q gives μ_q(A) ≥ q ^ alpha.
pub fn isoperimetric_bump_check(
    a: &BinaryFamily,
    p: f64,
    q: f64,
    alpha: f64,
    tol: f64,
) -> BumpCheck {
    let monotone = a.is_monotone();
    let premise_ok = monotone && p <= q && a.mu_p_f64(p) >= p.powf(alpha) - tol;
    let mu_q = a.mu_p_f64(q);
    let bound = q.powf(alpha);
    BumpCheck { monotone, premise_ok, mu_q, bound, holds: !premise_ok || mu_q >= bound - tol }
}

/// End-to-end comparison pipeline: compress both codes, reduce to the
/// binary cube, compare measures at 1/m and 1/2, and when the binary
/// measures exceed 1 exhibit a pair of words agreeing nowhere.
#[derive(Clone, Debug)]
pub struct BootReport {
    pub mu_g: Rat,
    pub mu_h: Rat,
    pub mu_g_reduced_at_inv_m: Rat,
    pub mu_h_reduced_at_inv_m: Rat,
    pub mu_g_half: Rat,
    pub mu_h_half: Rat,
    /// μ_{1/2} sum exceeds 1, so the reduced families cannot be
    /// cross-agreeing and a disagreeing pair must exist upstream.
    pub contradiction: bool,
    pub witness: Option<(Point, Point)>,
}

pub fn boot_pipeline(g: &Code, h: &Code) -> Result<BootReport> {
    if g.shape() != h.shape() {
        return Err(Error::ShapeMismatch("codes live on different spaces".into()));
    }
    let m = g.shape().m();
    let inv_m = rat(1, m);
    let half = rat(1, 2);
    let gc = compress_full(g);
    let hc = compress_full(h);
    let gr = reduce(&gc);
    let hr = reduce(&hc);
    let mu_g_half = gr.mu_p(&half)?;
    let mu_h_half = hr.mu_p(&half)?;
    let contradiction = mu_g_half.clone() + mu_h_half.clone() > Rat::one();
    let witness = if contradiction {
        let mut found = None;
        'outer: for x in g.members() {
            for y in h.members() {
                if crate::space::agreement(&x, &y) == 0 {
                    found = Some((x, y));
                    break 'outer;
                }
            }
        }
        found
    } else {
        None
    };
    Ok(BootReport {
        mu_g: g.measure(),
        mu_h: h.measure(),
        mu_g_reduced_at_inv_m: gr.mu_p(&inv_m)?,
        mu_h_reduced_at_inv_m: hr.mu_p(&inv_m)?,
        mu_g_half,
        mu_h_half,
        contradiction,
        witness,
    })
}
