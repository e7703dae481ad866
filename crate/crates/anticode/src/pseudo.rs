//! Pseudorandomness of codes and the decompositions built on it.
//!
//! Three nested notions are checked exhaustively: a code is
//! (r,eps)-pseudorandom when no restriction of at most r coordinates moves
//! its measure by more than eps, (r,eps)-global when every such restriction
//! has measure at most eps, and (r,eps)-uncapturable when no r dictators
//! cover all but eps of it. On top of the checkers sit the two regularity
//! decompositions (pseudorandom pieces for small alphabets, uncapturable
//! subcube pieces for large ones), the junta approximation they induce,
//! measure boosting by restrictions, and a sampled fairness estimator.
//!
//! All code measures here are exact rationals; verdicts never depend on
//! floating point.

use crate::code::{Code, Restriction, Subcube};
use crate::{rat, Error, Rat, Result};
use itertools::Itertools;
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Cap on the number of (R, a) pairs a restriction scan will enumerate.
pub const DEFAULT_SCAN_BUDGET: usize = 1 << 22;
/// Cap on the number of dictator sets the exact capturability search visits.
pub const DEFAULT_SET_BUDGET: usize = 1_000_000;
/// Exact capturability search is guaranteed (never falls back to greedy)
/// for r up to this value.
pub const EXACT_CAPTURE_R: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Holds,
    Fails,
    Unknown,
}

/// Outcome of an exhaustive restriction scan (pseudorandomness or
/// globalness). `worst` is the largest score seen: the deviation
/// |mu(F_{R->a}) - mu(F)| for the pseudorandom check, the restricted
/// measure itself for the global check. On `Fails` the witness carries the
/// first restriction attaining the worst score, with its exact measure.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub status: CheckStatus,
    pub worst: Option<Rat>,
    pub witness: Option<(Restriction, Rat)>,
    pub restrictions_checked: usize,
}

/// Rows of member coordinates, the cheap representation every scan in this
/// module works on.
fn member_rows(f: &Code) -> Vec<Vec<u16>> {
    f.members().map(|p| p.coords().to_vec()).collect()
}

fn count_matching(rows: &[Vec<u16>], coords: &[usize], vals: &[u16]) -> usize {
    rows.iter()
        .filter(|row| coords.iter().zip(vals).all(|(&i, &a)| row[i] == a))
        .count()
}

/// Odometer step through [m]^k in lexicographic order (first coordinate
/// most significant). Returns false after the last word.
pub(crate) fn next_word(vals: &mut [u16], m: u16) -> bool {
    for pos in (0..vals.len()).rev() {
        vals[pos] += 1;
        if vals[pos] < m {
            return true;
        }
        vals[pos] = 0;
    }
    false
}

/// Number of restrictions (R, a) with |R| <= r, or None on overflow.
pub fn restriction_scan_size(n: usize, m: usize, r: usize) -> Option<usize> {
    let mut total = 0usize;
    for k in 0..=r.min(n) {
        let mut c = 1usize;
        for j in 0..k {
            c = c.checked_mul(n - j)? / (j + 1);
        }
        let words = m.checked_pow(k as u32)?;
        total = total.checked_add(c.checked_mul(words)?)?;
    }
    Some(total)
}

/// Scans every restriction of at most r of the n coordinates and returns
/// (worst score, witness restriction, witness restricted measure, count).
/// With `base = Some(mu)` the score is |mu_restricted - mu|, otherwise the
/// restricted measure itself. Ties keep the first restriction in scan
/// order (sizes ascending, coordinate sets then values lexicographic), so
/// the witness is the lexicographically first maximal one.
fn worst_restriction(
    rows: &[Vec<u16>],
    n: usize,
    m: usize,
    r: usize,
    base: Option<&Rat>,
) -> (Rat, Restriction, Rat, usize) {
    let mut worst = Rat::zero() - Rat::one();
    let mut arg = Restriction::empty();
    let mut arg_mu = Rat::zero();
    let mut checked = 0usize;
    for k in 0..=r.min(n) {
        let denom = m.pow((n - k) as u32);
        for coords in (0..n).combinations(k) {
            let mut vals = vec![0u16; k];
            loop {
                let mu_res = rat(count_matching(rows, &coords, &vals), denom);
                let score = match base {
                    Some(mu) => (mu_res.clone() - mu).abs(),
                    None => mu_res.clone(),
                };
                checked += 1;
                if score > worst {
                    worst = score;
                    arg = Restriction::new(coords.clone(), vals.clone())
                        .expect("combinations are strictly increasing");
                    arg_mu = mu_res;
                }
                if !next_word(&mut vals, m as u16) {
                    break;
                }
            }
        }
    }
    (worst, arg, arg_mu, checked)
}

/// Checks |mu(F_{R->a}) - mu(F)| <= eps for every R with |R| <= r and
/// every a, by exhaustive scan.
pub fn is_pseudorandom(f: &Code, r: usize, eps: &Rat, budget: usize) -> ScanReport {
    let n = f.shape().n();
    let m = f.shape().m();
    match restriction_scan_size(n, m, r) {
        Some(size) if size <= budget => {}
        _ => {
            return ScanReport {
                status: CheckStatus::Unknown,
                worst: None,
                witness: None,
                restrictions_checked: 0,
            }
        }
    }
    let rows = member_rows(f);
    let mu = f.measure();
    let (worst, arg, arg_mu, checked) = worst_restriction(&rows, n, m, r, Some(&mu));
    let fails = worst > *eps;
    ScanReport {
        status: if fails { CheckStatus::Fails } else { CheckStatus::Holds },
        worst: Some(worst),
        witness: if fails { Some((arg, arg_mu)) } else { None },
        restrictions_checked: checked,
    }
}

/// Checks mu(F_{R->a}) <= eps for every R with |R| <= r and every a. This
/// is globalness of the indicator function under the uniform measure, as
/// an exact statement about restricted measures.
pub fn is_global(f: &Code, r: usize, eps: &Rat, budget: usize) -> ScanReport {
    let n = f.shape().n();
    let m = f.shape().m();
    match restriction_scan_size(n, m, r) {
        Some(size) if size <= budget => {}
        _ => {
            return ScanReport {
                status: CheckStatus::Unknown,
                worst: None,
                witness: None,
                restrictions_checked: 0,
            }
        }
    }
    let rows = member_rows(f);
    let (worst, arg, arg_mu, checked) = worst_restriction(&rows, n, m, r, None);
    let fails = worst > *eps;
    ScanReport {
        status: if fails { CheckStatus::Fails } else { CheckStatus::Holds },
        worst: Some(worst),
        witness: if fails { Some((arg, arg_mu)) } else { None },
        restrictions_checked: checked,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureStatus {
    Capturable,
    Uncapturable,
    Unknown,
}

/// Verdict of the dictator-cover search. `Capturable` always carries the
/// covering dictators (0-based (coordinate, symbol) pairs) and their exact
/// leftover; `Uncapturable` only ever comes out of the exhaustive search
/// and reports the best (smallest) leftover any candidate set achieved.
#[derive(Debug, Clone)]
pub struct CaptureReport {
    pub status: CaptureStatus,
    pub exhaustive: bool,
    pub dictators: Option<Vec<(usize, u16)>>,
    pub leftover: Option<Rat>,
}

/// Exact leftover measure mu(F \ union of dictators).
pub fn capture_leftover(f: &Code, dictators: &[(usize, u16)]) -> Rat {
    let shape = f.shape();
    let mut union = Code::empty(shape);
    for &(i, a) in dictators {
        union = union.union(&Code::dictator(shape, i, a));
    }
    f.minus(&union).measure()
}

/// Per-member cover bitmasks for the nonempty dictators, used by both the
/// exact and the greedy capturability search.
struct CoverTable {
    dictators: Vec<(usize, u16)>,
    masks: Vec<Vec<u64>>,
    words: usize,
    members: usize,
}

impl CoverTable {
    fn build(rows: &[Vec<u16>], n: usize, m: usize) -> CoverTable {
        let members = rows.len();
        let words = members.div_ceil(64);
        let mut dictators = Vec::new();
        let mut masks = Vec::new();
        for i in 0..n {
            for a in 0..m as u16 {
                let mut mask = vec![0u64; words];
                let mut any = false;
                for (idx, row) in rows.iter().enumerate() {
                    if row[i] == a {
                        mask[idx / 64] |= 1 << (idx % 64);
                        any = true;
                    }
                }
                if any {
                    dictators.push((i, a));
                    masks.push(mask);
                }
            }
        }
        CoverTable { dictators, masks, words, members }
    }

    fn uncovered(&self, set: &[usize]) -> usize {
        let mut left = self.members;
        for w in 0..self.words {
            let mut covered = 0u64;
            for &d in set {
                covered |= self.masks[d][w];
            }
            left -= covered.count_ones() as usize;
        }
        left
    }
}

fn subset_count(d: usize, r: usize) -> Option<usize> {
    let mut total = 0usize;
    for k in 0..=r.min(d) {
        let mut c = 1usize;
        for j in 0..k {
            c = c.checked_mul(d - j)? / (j + 1);
        }
        total = total.checked_add(c)?;
    }
    Some(total)
}

/// Searches for at most r dictators covering all but eps of F. Exhaustive
/// (over dictators that meet F at all) when r <= EXACT_CAPTURE_R or the
/// candidate-set count fits the budget; otherwise greedy max-coverage,
/// which can certify "capturable" but never "uncapturable".
pub fn is_uncapturable(f: &Code, r: usize, eps: &Rat, set_budget: usize) -> CaptureReport {
    let n = f.shape().n();
    let m = f.shape().m();
    let size = f.shape().size();
    let rows = member_rows(f);
    let table = CoverTable::build(&rows, n, m);
    let d = table.dictators.len();
    let exact = r <= EXACT_CAPTURE_R
        || subset_count(d, r).map(|c| c <= set_budget).unwrap_or(false);
    if exact {
        let mut best: Option<(Rat, Vec<(usize, u16)>)> = None;
        for k in 0..=r.min(d) {
            for set in (0..d).combinations(k) {
                let leftover = rat(table.uncovered(&set), size);
                if *eps >= leftover {
                    let dicts: Vec<_> = set.iter().map(|&j| table.dictators[j]).collect();
                    return CaptureReport {
                        status: CaptureStatus::Capturable,
                        exhaustive: true,
                        dictators: Some(dicts),
                        leftover: Some(leftover),
                    };
                }
                if best.as_ref().map(|(b, _)| leftover < *b).unwrap_or(true) {
                    let dicts = set.iter().map(|&j| table.dictators[j]).collect();
                    best = Some((leftover, dicts));
                }
            }
        }
        let (leftover, dicts) = best.expect("the empty set is always a candidate");
        return CaptureReport {
            status: CaptureStatus::Uncapturable,
            exhaustive: true,
            dictators: Some(dicts),
            leftover: Some(leftover),
        };
    }
    // Greedy max-coverage fallback.
    let mut covered = vec![0u64; table.words];
    let mut picked = Vec::new();
    for _ in 0..r.min(d) {
        let mut best_gain = 0usize;
        let mut best_j = None;
        for j in 0..d {
            let gain: usize = (0..table.words)
                .map(|w| (table.masks[j][w] & !covered[w]).count_ones() as usize)
                .sum();
            if gain > best_gain {
                best_gain = gain;
                best_j = Some(j);
            }
        }
        let Some(j) = best_j else { break };
        for w in 0..table.words {
            covered[w] |= table.masks[j][w];
        }
        picked.push(j);
    }
    let leftover = rat(table.uncovered(&picked), size);
    let dicts: Vec<_> = picked.iter().map(|&j| table.dictators[j]).collect();
    if *eps >= leftover {
        CaptureReport {
            status: CaptureStatus::Capturable,
            exhaustive: false,
            dictators: Some(dicts),
            leftover: Some(leftover),
        }
    } else {
        CaptureReport {
            status: CaptureStatus::Unknown,
            exhaustive: false,
            dictators: Some(dicts),
            leftover: Some(leftover),
        }
    }
}

/// If nonempty G is (1, mu(G)/gamma)-global then G is
/// (floor(gamma*m/4), mu(G)/2)-uncapturable.
#[derive(Debug, Clone)]
pub struct GlobalUncapCheck {
    pub premise_ok: bool,
    pub r_used: usize,
    pub capture: Option<CaptureReport>,
    pub holds: Option<bool>,
}

pub fn global_implies_uncapturable_check(g: &Code, gamma: &Rat) -> GlobalUncapCheck {
    let m = g.shape().m();
    let mu = g.measure();
    let r_used = (gamma.clone() * rat(m, 4))
        .floor()
        .to_integer()
        .to_usize()
        .unwrap_or(0);
    if g.is_empty() {
        return GlobalUncapCheck { premise_ok: false, r_used, capture: None, holds: Some(true) };
    }
    let eps_global = mu.clone() / gamma.clone();
    let premise =
        is_global(g, 1, &eps_global, DEFAULT_SCAN_BUDGET).status == CheckStatus::Holds;
    if !premise {
        return GlobalUncapCheck { premise_ok: false, r_used, capture: None, holds: Some(true) };
    }
    let eps_uncap = mu / rat(2, 1);
    let capture = is_uncapturable(g, r_used, &eps_uncap, DEFAULT_SET_BUDGET);
    let holds = match capture.status {
        CaptureStatus::Uncapturable => Some(true),
        CaptureStatus::Capturable => Some(false),
        CaptureStatus::Unknown => None,
    };
    GlobalUncapCheck { premise_ok: true, r_used, capture: Some(capture), holds }
}

/// One boosting step: the restriction applied (original coordinates) and
/// the measure after it.
#[derive(Debug, Clone)]
pub struct BoostStep {
    pub restriction: Restriction,
    pub mu: Rat,
}

/// Result of iterated restriction boosting: G' = G_{R->alpha} is
/// (r, mu(G')/gamma)-global with mu(G') >= mu(G) and
/// |R| <= r * log_{1/gamma}(1/mu(G)).
#[derive(Debug, Clone)]
pub struct MakeGlobal {
    pub restriction: Restriction,
    pub result: Code,
    pub steps: Vec<BoostStep>,
    pub mu_start: Rat,
    pub mu_final: Rat,
    pub coord_bound: f64,
    pub coord_bound_ok: bool,
    pub verified_global: bool,
}

/// Restricts G until it is (r, mu/gamma)-global, always taking the
/// lexicographically first restriction of maximal restricted measure.
pub fn make_global(g: &Code, r: usize, gamma: &Rat) -> Result<MakeGlobal> {
    if g.is_empty() {
        return Err(Error::Invalid("make_global needs a nonempty code".into()));
    }
    if !(*gamma > Rat::zero() && *gamma < Rat::one()) {
        return Err(Error::Invalid("make_global needs 0 < gamma < 1".into()));
    }
    let n = g.shape().n();
    let m = g.shape().m();
    let mu_start = g.measure();
    let log_bound =
        (1.0 / crate::rat_to_f64(&mu_start)).ln() / (1.0 / crate::rat_to_f64(gamma)).ln();
    let max_iters = log_bound.ceil() as usize + 2;

    let mut cur = g.clone();
    let mut fixed = Restriction::empty();
    let mut steps = Vec::new();
    for _ in 0..=max_iters {
        let cur_n = cur.shape().n();
        let eps = cur.measure() / gamma.clone();
        let rows = member_rows(&cur);
        let (worst, arg, arg_mu, _) = worst_restriction(&rows, cur_n, m, r, None);
        if worst <= eps {
            let verified =
                is_global(&cur, r, &eps, DEFAULT_SCAN_BUDGET).status == CheckStatus::Holds;
            let mu_final = cur.measure();
            let coord_bound = r as f64 * log_bound;
            let coord_bound_ok = (fixed.len() as f64) <= coord_bound + 1e-9;
            return Ok(MakeGlobal {
                restriction: fixed,
                result: cur,
                steps,
                mu_start,
                mu_final,
                coord_bound,
                coord_bound_ok,
                verified_global: verified,
            });
        }
        // Lift the witness from the current restricted cube back to
        // original coordinates: local coordinate j is the j-th original
        // coordinate not yet fixed.
        let free: Vec<usize> = (0..n).filter(|i| !fixed.coords().contains(i)).collect();
        let lifted_coords: Vec<usize> = arg.coords().iter().map(|&j| free[j]).collect();
        let lifted = Restriction::new(lifted_coords, arg.values().to_vec())?;
        fixed = fixed.merge(&lifted)?;
        cur = cur.restrict(&arg);
        steps.push(BoostStep { restriction: lifted, mu: arg_mu });
    }
    Err(Error::Budget("make_global exceeded its iteration bound".into()))
}

/// Mean-square restricted density E(T) = E_a[mu(F_{T->a})^2], exact.
pub fn mean_square_energy(f: &Code, t_coords: &[usize]) -> Result<Rat> {
    let n = f.shape().n();
    let m = f.shape().m();
    for (k, &i) in t_coords.iter().enumerate() {
        if i >= n {
            return Err(Error::Invalid(format!("energy coordinate {i} out of range")));
        }
        if t_coords[..k].contains(&i) {
            return Err(Error::Invalid("energy coordinates must be distinct".into()));
        }
    }
    let patterns = m
        .checked_pow(t_coords.len() as u32)
        .filter(|&p| p <= crate::space::DEFAULT_POINT_CAP)
        .ok_or_else(|| Error::Budget("energy pattern space too large".into()))?;
    let mut counts = vec![0usize; patterns];
    for p in f.members() {
        let idx = t_coords.iter().fold(0usize, |acc, &i| acc * m + p.get(i) as usize);
        counts[idx] += 1;
    }
    let mut sum = BigInt::zero();
    for c in counts {
        sum += BigInt::from(c) * BigInt::from(c);
    }
    // E(T) = sum_a c_a^2 / m^(2n - |T|).
    Ok(Rat::new(sum, BigInt::from(m).pow((2 * n - t_coords.len()) as u32)))
}

/// Ledger entry for one state of the small-alphabet regularity process.
#[derive(Debug, Clone)]
pub struct SmallMStep {
    pub t_coords: Vec<usize>,
    pub energy: Rat,
    pub bad_mass: Rat,
}

/// Output of the small-alphabet regularity decomposition: a coordinate set
/// T such that all but a delta-fraction of the patterns a in [m]^T leave
/// F_{T->a} (r,eps)-pseudorandom. The ledger holds one entry per state
/// visited, ending with the accepted one.
#[derive(Debug, Clone)]
pub struct SmallMDecomposition {
    pub t_coords: Vec<usize>,
    pub ledger: Vec<SmallMStep>,
    pub bad_patterns: Vec<Vec<u16>>,
    pub bad_mass: Rat,
    pub iterations: usize,
    pub min_increment: Rat,
    pub step_cap: usize,
}

/// Energy-increment regularity for fixed m. Starting from T = empty, each
/// iteration finds the patterns whose restrictions fail the (r,eps)
/// pseudorandomness scan, stops when their mass is at most delta, and
/// otherwise adjoins every witness restriction's coordinates to T. Each
/// iteration raises E(T) by at least delta * m^-r * eps^2, so the process
/// finishes within m^r / (delta * eps^2) iterations.
pub fn regularity_small_m(
    f: &Code,
    r: usize,
    eps: &Rat,
    delta: &Rat,
    pattern_budget: usize,
) -> Result<SmallMDecomposition> {
    if !(*eps > Rat::zero() && *delta > Rat::zero()) {
        return Err(Error::Invalid("regularity needs eps > 0 and delta > 0".into()));
    }
    let n = f.shape().n();
    let m = f.shape().m();
    let min_increment = delta.clone() * rat(1, m.pow(r as u32)) * eps.clone() * eps.clone();
    let step_cap = (rat(m.pow(r as u32), 1) / (delta.clone() * eps.clone() * eps.clone()))
        .ceil()
        .to_integer()
        .to_usize()
        .ok_or_else(|| Error::Budget("regularity step cap overflows".into()))?;
    let rows = member_rows(f);

    let mut t: Vec<usize> = Vec::new();
    let mut ledger = Vec::new();
    let mut iterations = 0usize;
    loop {
        let patterns = m
            .checked_pow(t.len() as u32)
            .filter(|&p| p <= pattern_budget)
            .ok_or_else(|| Error::Budget("regularity pattern enumeration too large".into()))?;
        let free: Vec<usize> = (0..n).filter(|i| !t.contains(i)).collect();
        let sub_n = free.len();
        let mut bad = Vec::new();
        let mut new_coords: Vec<usize> = Vec::new();
        let mut vals = vec![0u16; t.len()];
        for _ in 0..patterns {
            let sub_rows: Vec<Vec<u16>> = rows
                .iter()
                .filter(|row| t.iter().zip(&vals).all(|(&i, &a)| row[i] == a))
                .map(|row| free.iter().map(|&i| row[i]).collect())
                .collect();
            let mu_sub = rat(sub_rows.len(), m.pow(sub_n as u32));
            let (worst, arg, _, _) = worst_restriction(&sub_rows, sub_n, m, r, Some(&mu_sub));
            if worst > *eps {
                bad.push(vals.clone());
                for &j in arg.coords() {
                    let orig = free[j];
                    if !new_coords.contains(&orig) {
                        new_coords.push(orig);
                    }
                }
            }
            next_word(&mut vals, m as u16);
        }
        let bad_mass = rat(bad.len(), patterns);
        ledger.push(SmallMStep {
            t_coords: t.clone(),
            energy: mean_square_energy(f, &t)?,
            bad_mass: bad_mass.clone(),
        });
        if bad_mass <= *delta {
            return Ok(SmallMDecomposition {
                t_coords: t,
                ledger,
                bad_patterns: bad,
                bad_mass,
                iterations,
                min_increment,
                step_cap,
            });
        }
        if iterations >= step_cap {
            return Err(Error::Budget("regularity exceeded its iteration cap".into()));
        }
        t.extend(new_coords);
        t.sort_unstable();
        iterations += 1;
    }
}

/// The junta harvested from a small-m regularity run, with the coverage
/// recount and the (reported, not asserted) intersection check.
#[derive(Debug, Clone)]
pub struct JuntaApprox {
    pub decomposition: SmallMDecomposition,
    pub junta: Code,
    pub kept_patterns: Vec<Vec<u16>>,
    pub leftover: Rat,
    pub covered_ok: bool,
    pub avoiding_premise: bool,
    pub junta_t_intersecting: bool,
}

/// Approximates a (t-1)-avoiding F by a T-junta: run regularity at
/// delta = eta/2, keep the patterns whose restrictions are
/// (r, eps/2)-pseudorandom with measure at least eta/2, and take the union
/// of those subcubes. Coverage mu(F \ J) <= eta is recounted exactly; the
/// t-intersection of the kept patterns is checked and reported (it is an
/// asymptotic guarantee, so small n may fail it honestly).
pub fn junta_approx_small_m(
    f: &Code,
    t: usize,
    eta: &Rat,
    r: usize,
    eps: &Rat,
    pattern_budget: usize,
) -> Result<JuntaApprox> {
    let m = f.shape().m();
    let avoiding_premise = t == 0 || f.is_s_avoiding(t - 1);
    let delta = eta.clone() / rat(2, 1);
    let decomposition = regularity_small_m(f, r, eps, &delta, pattern_budget)?;
    let t_coords = decomposition.t_coords.clone();

    let rows = member_rows(f);
    let n = f.shape().n();
    let free: Vec<usize> = (0..n).filter(|i| !t_coords.contains(i)).collect();
    let sub_n = free.len();
    let eps_half = eps.clone() / rat(2, 1);
    let eta_half = eta.clone() / rat(2, 1);
    let mut kept = Vec::new();
    let mut vals = vec![0u16; t_coords.len()];
    for _ in 0..m.pow(t_coords.len() as u32) {
        let sub_rows: Vec<Vec<u16>> = rows
            .iter()
            .filter(|row| t_coords.iter().zip(&vals).all(|(&i, &a)| row[i] == a))
            .map(|row| free.iter().map(|&i| row[i]).collect())
            .collect();
        let mu_sub = rat(sub_rows.len(), m.pow(sub_n as u32));
        let (worst, _, _, _) = worst_restriction(&sub_rows, sub_n, m, r, Some(&mu_sub));
        if worst <= eps_half && mu_sub >= eta_half {
            kept.push(vals.clone());
        }
        next_word(&mut vals, m as u16);
    }

    let junta = Code::junta_from(f.shape(), &t_coords, &kept)?;
    let leftover = f.minus(&junta).measure();
    let covered_ok = leftover <= *eta;
    // Pattern agreement is over the |T| junta coordinates only.
    let junta_t_intersecting = kept.len() < 2
        || kept.iter().array_combinations::<2>().all(|[a, b]| {
            a.iter().zip(b).filter(|(x, y)| x == y).count() >= t
        });
    Ok(JuntaApprox {
        decomposition,
        junta,
        kept_patterns: kept,
        leftover,
        covered_ok,
        avoiding_premise,
        junta_t_intersecting,
    })
}

/// One subcube piece of the large-alphabet decomposition, with its
/// uncapturability threshold and the checker's verdict at that threshold.
#[derive(Debug, Clone)]
pub struct LargeMPiece {
    pub restriction: Restriction,
    pub threshold: Rat,
    pub capture: CaptureReport,
}

#[derive(Debug, Clone)]
pub struct LargeMDecomposition {
    pub pieces: Vec<LargeMPiece>,
    pub leftover: Rat,
    pub leftover_bound: Rat,
    pub leftover_ok: bool,
    pub size_ok: bool,
    pub explored: usize,
}

/// Decomposes F into at most r^k subcubes D_{R->alpha} whose restrictions
/// are (r, eps * m^(|R|-k))-uncapturable, leaving at most
/// 3 r^(k+1) eps m^-k of the measure uncovered (recounted exactly). The
/// refinement replaces each capturable subcube by the subcubes extending
/// it along its capturing dictators, k levels deep; at the last level the
/// still-capturable subcubes are dropped.
pub fn regularity_large_m(
    f: &Code,
    r: usize,
    k: usize,
    eps: &Rat,
    set_budget: usize,
) -> Result<LargeMDecomposition> {
    let shape = f.shape();
    let n = shape.n();
    let m = shape.m();
    if *eps < rat(1, m) {
        return Err(Error::Invalid("large-m regularity needs eps >= 1/m".into()));
    }
    if k >= n {
        return Err(Error::Invalid("large-m regularity needs co-dimension k < n".into()));
    }
    let mk = rat(1, m.pow(k as u32));
    let leftover_bound = rat(3 * r.pow(k as u32 + 1), 1) * eps.clone() * mk.clone();

    let mut pieces: Vec<LargeMPiece> = Vec::new();
    let mut explored = 1usize;
    let root_threshold = eps.clone() * mk.clone();
    let root = is_uncapturable(f, r, &root_threshold, set_budget);
    if root.status == CaptureStatus::Capturable {
        // Children of a capturable subcube: extend its restriction along
        // each capturing dictator, mapped back to original coordinates.
        let expand = |restr: &Restriction, dicts: &[(usize, u16)]| -> Result<Vec<Restriction>> {
            let free: Vec<usize> = (0..n).filter(|i| !restr.coords().contains(i)).collect();
            dicts
                .iter()
                .map(|&(j, a)| restr.merge(&Restriction::single(free[j], a)))
                .collect()
        };
        let mut frontier: Vec<Restriction> =
            expand(&Restriction::empty(), root.dictators.as_deref().unwrap_or(&[]))?;
        for s in 1..=k {
            let mut next = Vec::new();
            for restr in frontier {
                explored += 1;
                let piece_code = f.restrict(&restr);
                let threshold = eps.clone() * rat(m.pow(restr.len() as u32), m.pow(k as u32));
                let rep = is_uncapturable(&piece_code, r, &threshold, set_budget);
                if rep.status == CaptureStatus::Capturable {
                    if s < k {
                        next.extend(expand(&restr, rep.dictators.as_deref().unwrap_or(&[]))?);
                    }
                    // At the last level capturable pieces are dropped:
                    // their mass is inside the leftover bound.
                } else {
                    pieces.push(LargeMPiece { restriction: restr, threshold, capture: rep });
                }
            }
            frontier = next;
        }
    } else {
        pieces.push(LargeMPiece {
            restriction: Restriction::empty(),
            threshold: root_threshold,
            capture: root,
        });
    }

    let mut union = Code::empty(shape);
    for piece in &pieces {
        union = union.union(&Subcube::new(shape, piece.restriction.clone())?.as_code());
    }
    let leftover = f.minus(&union).measure();
    let size_ok = pieces.len() <= r.pow(k as u32);
    let leftover_ok = leftover <= leftover_bound;
    Ok(LargeMDecomposition { pieces, leftover, leftover_bound, leftover_ok, size_ok, explored })
}

/// Empirical estimate of P[mu(F_{S->x}) >= (1-delta) mu(F)] over a
/// uniformly random s-subset S and uniform x in [m]^S. Comparisons per
/// sample are exact.
#[derive(Debug, Clone)]
pub struct FairnessReport {
    pub trials: usize,
    pub successes: usize,
    pub estimate: f64,
    pub mu: Rat,
    pub threshold: Rat,
}

pub fn fairness_estimate(
    f: &Code,
    s: usize,
    delta: &Rat,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FairnessReport> {
    let n = f.shape().n();
    let m = f.shape().m();
    if f.is_empty() {
        return Err(Error::Invalid("fairness needs a nonempty code".into()));
    }
    if s > n {
        return Err(Error::Invalid("fairness needs s <= n".into()));
    }
    let mu = f.measure();
    let threshold = (Rat::one() - delta.clone()) * mu.clone();
    let rows = member_rows(f);
    let mut successes = 0usize;
    for _ in 0..trials {
        let mut coords = rand::seq::index::sample(rng, n, s).into_vec();
        coords.sort_unstable();
        let vals: Vec<u16> = (0..s).map(|_| rng.random_range(0..m as u16)).collect();
        let count = count_matching(&rows, &coords, &vals);
        let mu_res = rat(count, m.pow((n - s) as u32));
        if mu_res >= threshold {
            successes += 1;
        }
    }
    Ok(FairnessReport {
        trials,
        successes,
        estimate: successes as f64 / trials as f64,
        mu,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Shape;
    use rand::SeedableRng;

    fn mod3_code(n: u32) -> Code {
        let shape = Shape::new(3, n).unwrap();
        Code::from_fn(&shape, |p| {
            p.coords().iter().map(|&c| c as usize).sum::<usize>() % 3 == 0
        })
    }

    #[test]
    fn full_cube_is_pseudorandom_at_eps_zero() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::full(&shape);
        let rep = is_pseudorandom(&f, 2, &rat(0, 1), DEFAULT_SCAN_BUDGET);
        assert_eq!(rep.status, CheckStatus::Holds);
        assert_eq!(rep.worst.unwrap(), rat(0, 1));
    }

    #[test]
    fn dictator_fails_pseudorandomness_at_its_own_restriction() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        let rep = is_pseudorandom(&f, 1, &rat(1, 2), DEFAULT_SCAN_BUDGET);
        assert_eq!(rep.status, CheckStatus::Fails);
        assert_eq!(rep.worst.unwrap(), rat(2, 3));
        let (restr, mu_res) = rep.witness.unwrap();
        assert_eq!(restr.coords(), &[0]);
        assert_eq!(restr.values(), &[0]);
        assert_eq!(mu_res, rat(1, 1));
    }

    #[test]
    fn mod3_family_is_perfectly_pseudorandom_to_depth_two() {
        let f = mod3_code(4);
        let rep = is_pseudorandom(&f, 2, &rat(0, 1), DEFAULT_SCAN_BUDGET);
        assert_eq!(rep.status, CheckStatus::Holds);
        assert_eq!(rep.worst.unwrap(), rat(0, 1));
    }

    #[test]
    fn scan_budget_exhaustion_is_a_verdict() {
        let f = mod3_code(4);
        let rep = is_pseudorandom(&f, 2, &rat(0, 1), 3);
        assert_eq!(rep.status, CheckStatus::Unknown);
        assert!(rep.worst.is_none());
    }

    #[test]
    fn empty_family_is_global_for_everything() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::empty(&shape);
        let rep = is_global(&f, 3, &rat(0, 1), DEFAULT_SCAN_BUDGET);
        assert_eq!(rep.status, CheckStatus::Holds);
    }

    #[test]
    fn dictator_globalness_fails_with_unit_restricted_mass() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        let rep = is_global(&f, 1, &rat(99, 100), DEFAULT_SCAN_BUDGET);
        assert_eq!(rep.status, CheckStatus::Fails);
        let (restr, mu_res) = rep.witness.unwrap();
        assert_eq!((restr.coords(), restr.values()), (&[0usize][..], &[0u16][..]));
        assert_eq!(mu_res, rat(1, 1));
    }

    #[test]
    fn mod3_family_is_global_at_one_third() {
        let f = mod3_code(4);
        let rep = is_global(&f, 1, &rat(1, 3), DEFAULT_SCAN_BUDGET);
        assert_eq!(rep.status, CheckStatus::Holds);
        assert_eq!(rep.worst.unwrap(), rat(1, 3));
    }

    #[test]
    fn globalness_bounds_every_restricted_measure() {
        // For indicators, (r,eps)-global literally says every restricted
        // measure is at most eps; cross-check against the pseudorandom
        // scan's deviations via the triangle inequality.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shape = Shape::new(3, 3).unwrap();
        for _ in 0..20 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.4));
            if f.is_empty() {
                continue;
            }
            let mu = f.measure();
            let global = is_global(&f, 2, &rat(0, 1), DEFAULT_SCAN_BUDGET);
            let eps_star = global.worst.unwrap();
            let pseudo = is_pseudorandom(&f, 2, &rat(0, 1), DEFAULT_SCAN_BUDGET);
            let dev = pseudo.worst.unwrap();
            let bound = std::cmp::max(eps_star.clone() - mu.clone(), mu);
            assert!(dev <= bound);
        }
    }

    #[test]
    fn dictator_family_is_capturable_by_its_own_dictator() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::dictator(&shape, 1, 2);
        let rep = is_uncapturable(&f, 1, &rat(0, 1), DEFAULT_SET_BUDGET);
        assert_eq!(rep.status, CaptureStatus::Capturable);
        assert!(rep.exhaustive);
        assert_eq!(rep.dictators.unwrap(), vec![(1, 2)]);
        assert_eq!(rep.leftover.unwrap(), rat(0, 1));
    }

    #[test]
    fn full_cube_resists_one_dictator() {
        let shape = Shape::new(3, 2).unwrap();
        let f = Code::full(&shape);
        let rep = is_uncapturable(&f, 1, &rat(1, 2), DEFAULT_SET_BUDGET);
        assert_eq!(rep.status, CaptureStatus::Uncapturable);
        assert_eq!(rep.leftover.unwrap(), rat(2, 3));
    }

    #[test]
    fn mod3_capturability_boundary_is_exactly_one_ninth() {
        let f = mod3_code(4);
        let uncap = is_uncapturable(&f, 2, &rat(1, 10), DEFAULT_SET_BUDGET);
        assert_eq!(uncap.status, CaptureStatus::Uncapturable);
        assert_eq!(uncap.leftover.unwrap(), rat(1, 9));

        let cap = is_uncapturable(&f, 2, &rat(1, 9), DEFAULT_SET_BUDGET);
        assert_eq!(cap.status, CaptureStatus::Capturable);
        let dicts = cap.dictators.unwrap();
        assert_eq!(dicts.len(), 2);
        // The optimal pair stacks two values on one coordinate.
        assert_eq!(dicts[0].0, dicts[1].0);
        assert_eq!(capture_leftover(&f, &dicts), rat(1, 9));
    }

    #[test]
    fn capturable_witnesses_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = Shape::new(3, 3).unwrap();
        for _ in 0..20 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.5));
            let rep = is_uncapturable(&f, 2, &rat(1, 4), DEFAULT_SET_BUDGET);
            if rep.status == CaptureStatus::Capturable {
                let dicts = rep.dictators.unwrap();
                assert!(dicts.len() <= 2);
                let leftover = capture_leftover(&f, &dicts);
                assert_eq!(leftover, rep.leftover.unwrap());
                assert!(leftover <= rat(1, 4));
            }
        }
    }

    #[test]
    fn greedy_fallback_certifies_capture_or_reports_unknown() {
        // r above the exact threshold with a zero set budget forces the
        // greedy path.
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        let rep = is_uncapturable(&f, 4, &rat(0, 1), 0);
        assert_eq!(rep.status, CaptureStatus::Capturable);
        assert!(!rep.exhaustive);
        assert_eq!(capture_leftover(&f, &rep.dictators.unwrap()), rat(0, 1));

        let wide = Shape::new(9, 2).unwrap();
        let g = Code::full(&wide);
        let rep = is_uncapturable(&g, 5, &rat(1, 100), 0);
        assert_eq!(rep.status, CaptureStatus::Unknown);
        assert!(!rep.exhaustive);
        assert_eq!(rep.leftover.unwrap(), rat(4, 9));
    }

    #[test]
    fn global_to_uncapturable_on_a_trivially_global_cube() {
        let shape = Shape::new(9, 2).unwrap();
        let g = Code::full(&shape);
        let check = global_implies_uncapturable_check(&g, &rat(8, 9));
        assert!(check.premise_ok);
        assert_eq!(check.r_used, 2);
        assert_eq!(check.holds, Some(true));
    }

    #[test]
    fn global_to_uncapturable_skips_empty_families() {
        let shape = Shape::new(3, 2).unwrap();
        let g = Code::empty(&shape);
        let check = global_implies_uncapturable_check(&g, &rat(1, 2));
        assert!(!check.premise_ok);
        assert_eq!(check.holds, Some(true));
    }

    #[test]
    fn make_global_restricts_a_dictator_on_its_coordinate() {
        let shape = Shape::new(3, 3).unwrap();
        let g = Code::dictator(&shape, 0, 0);
        let out = make_global(&g, 1, &rat(1, 2)).unwrap();
        assert_eq!(out.restriction.coords(), &[0]);
        assert_eq!(out.restriction.values(), &[0]);
        assert_eq!(out.mu_final, rat(1, 1));
        assert_eq!(out.steps.len(), 1);
        assert!(out.verified_global);
        assert!(out.coord_bound_ok);
    }

    #[test]
    fn make_global_with_trivial_threshold_stops_immediately() {
        // At gamma = 1/3 the dictator's globalness threshold is mu/gamma
        // = 1, which every restricted measure satisfies.
        let shape = Shape::new(3, 3).unwrap();
        let g = Code::dictator(&shape, 0, 0);
        let out = make_global(&g, 1, &rat(1, 3)).unwrap();
        assert!(out.restriction.is_empty());
        assert_eq!(out.mu_final, rat(1, 3));
    }

    #[test]
    fn make_global_measure_never_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let shape = Shape::new(3, 4).unwrap();
        for _ in 0..15 {
            let g = Code::from_fn(&shape, |_| rng.random_bool(0.3));
            if g.is_empty() {
                continue;
            }
            let out = make_global(&g, 2, &rat(1, 2)).unwrap();
            assert!(out.mu_final >= out.mu_start);
            assert!(out.verified_global);
            assert!(out.coord_bound_ok);
        }
    }

    #[test]
    fn energy_of_empty_set_is_measure_squared() {
        let f = mod3_code(3);
        let mu = f.measure();
        assert_eq!(mean_square_energy(&f, &[]).unwrap(), mu.clone() * mu);
    }

    #[test]
    fn dictator_energy_on_its_coordinate_is_one_third() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        assert_eq!(mean_square_energy(&f, &[0]).unwrap(), rat(1, 3));
    }

    #[test]
    fn full_coordinate_energy_recovers_the_measure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = Shape::new(3, 3).unwrap();
        for _ in 0..10 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.5));
            assert_eq!(mean_square_energy(&f, &[0, 1, 2]).unwrap(), f.measure());
        }
    }

    #[test]
    fn energy_is_monotone_under_coordinate_growth() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let shape = Shape::new(3, 4).unwrap();
        for _ in 0..10 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.4));
            let e1 = mean_square_energy(&f, &[1]).unwrap();
            let e2 = mean_square_energy(&f, &[1, 3]).unwrap();
            let e3 = mean_square_energy(&f, &[0, 1, 3]).unwrap();
            assert!(e1 <= e2);
            assert!(e2 <= e3);
        }
    }

    #[test]
    fn pseudorandom_input_needs_no_regularity_iterations() {
        let f = mod3_code(4);
        let dec = regularity_small_m(&f, 2, &rat(1, 10), &rat(1, 10), 1 << 16).unwrap();
        assert!(dec.t_coords.is_empty());
        assert_eq!(dec.iterations, 0);
        assert_eq!(dec.bad_mass, rat(0, 1));
    }

    #[test]
    fn dictator_regularity_fixes_its_coordinate() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        let dec = regularity_small_m(&f, 1, &rat(1, 10), &rat(1, 4), 1 << 16).unwrap();
        assert_eq!(dec.t_coords, vec![0]);
        assert_eq!(dec.iterations, 1);
        assert_eq!(dec.bad_mass, rat(0, 1));
        assert!(dec.bad_patterns.is_empty());
        // Ledger: energy climbs from 1/9 to 1/3, far beyond the minimum
        // increment delta * m^-r * eps^2 = 1/1200.
        assert_eq!(dec.ledger.len(), 2);
        assert_eq!(dec.ledger[0].energy, rat(1, 9));
        assert_eq!(dec.ledger[1].energy, rat(1, 3));
        assert!(dec.ledger[1].energy.clone() - dec.ledger[0].energy.clone() >= dec.min_increment);
        assert!(dec.iterations <= dec.step_cap);
    }

    #[test]
    fn regularity_ledger_increments_on_random_codes() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let shape = Shape::new(3, 4).unwrap();
        for _ in 0..10 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.5));
            let dec = regularity_small_m(&f, 1, &rat(1, 4), &rat(1, 4), 1 << 16).unwrap();
            for pair in dec.ledger.windows(2) {
                assert!(
                    pair[1].energy.clone() - pair[0].energy.clone() >= dec.min_increment,
                    "energy increment below the guaranteed minimum"
                );
            }
            assert!(dec.bad_mass <= rat(1, 4));
            assert!(dec.iterations <= dec.step_cap);
        }
    }

    #[test]
    fn junta_approximation_recovers_a_dictator_exactly() {
        let shape = Shape::new(3, 4).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        let ja = junta_approx_small_m(&f, 1, &rat(1, 10), 1, &rat(1, 10), 1 << 16).unwrap();
        assert!(ja.avoiding_premise);
        assert_eq!(ja.kept_patterns, vec![vec![0]]);
        assert_eq!(ja.junta.len(), f.len());
        assert_eq!(ja.leftover, rat(0, 1));
        assert!(ja.covered_ok);
        assert!(ja.junta_t_intersecting);
    }

    #[test]
    fn junta_approximation_of_empty_family_is_empty() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::empty(&shape);
        let ja = junta_approx_small_m(&f, 1, &rat(1, 10), 1, &rat(1, 10), 1 << 16).unwrap();
        assert!(ja.kept_patterns.is_empty());
        assert!(ja.junta.is_empty());
        assert_eq!(ja.leftover, rat(0, 1));
    }

    #[test]
    fn uncapturable_input_is_its_own_large_m_decomposition() {
        let f = mod3_code(4);
        let dec = regularity_large_m(&f, 1, 1, &rat(1, 3), DEFAULT_SET_BUDGET).unwrap();
        assert_eq!(dec.pieces.len(), 1);
        assert!(dec.pieces[0].restriction.is_empty());
        assert_eq!(dec.pieces[0].capture.status, CaptureStatus::Uncapturable);
        assert_eq!(dec.leftover, rat(0, 1));
        assert!(dec.leftover_ok);
        assert!(dec.size_ok);
    }

    #[test]
    fn dictator_large_m_decomposition_is_that_dictator() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        let dec = regularity_large_m(&f, 1, 1, &rat(1, 3), DEFAULT_SET_BUDGET).unwrap();
        assert_eq!(dec.pieces.len(), 1);
        let piece = &dec.pieces[0];
        assert_eq!(piece.restriction.coords(), &[0]);
        assert_eq!(piece.restriction.values(), &[0]);
        assert_eq!(piece.capture.status, CaptureStatus::Uncapturable);
        assert_eq!(dec.leftover, rat(0, 1));
        assert!(dec.leftover_ok);
    }

    #[test]
    fn large_m_leftover_bound_holds_on_random_codes() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let shape = Shape::new(4, 3).unwrap();
        for _ in 0..10 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.5));
            let dec = regularity_large_m(&f, 2, 1, &rat(1, 2), DEFAULT_SET_BUDGET).unwrap();
            assert!(dec.leftover_ok);
            assert!(dec.size_ok);
            for piece in &dec.pieces {
                assert_ne!(piece.capture.status, CaptureStatus::Capturable);
            }
        }
    }

    #[test]
    fn large_m_rejects_eps_below_one_over_m() {
        let f = mod3_code(3);
        assert!(regularity_large_m(&f, 1, 1, &rat(1, 4), DEFAULT_SET_BUDGET).is_err());
    }

    #[test]
    fn fairness_of_the_full_cube_is_one() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::full(&shape);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rep = fairness_estimate(&f, 1, &rat(1, 10), 500, &mut rng).unwrap();
        assert_eq!(rep.successes, 500);
        assert_eq!(rep.estimate, 1.0);
    }

    #[test]
    fn dictator_fairness_matches_the_analytic_value() {
        // S = {0} succeeds only at the right symbol (1 of 3); other
        // coordinates never hurt: P = 3/4 + (1/4)(1/3) = 5/6.
        let shape = Shape::new(3, 4).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rep = fairness_estimate(&f, 1, &rat(1, 10), 10_000, &mut rng).unwrap();
        assert!((rep.estimate - 5.0 / 6.0).abs() < 0.02);
    }

    #[test]
    fn fairness_is_deterministic_under_a_seed() {
        let shape = Shape::new(3, 3).unwrap();
        let f = Code::dictator(&shape, 1, 1);
        let mut rng1 = ChaCha8Rng::seed_from_u64(23);
        let mut rng2 = ChaCha8Rng::seed_from_u64(23);
        let a = fairness_estimate(&f, 2, &rat(1, 5), 1000, &mut rng1).unwrap();
        let b = fairness_estimate(&f, 2, &rat(1, 5), 1000, &mut rng2).unwrap();
        assert_eq!(a.successes, b.successes);
    }
}
