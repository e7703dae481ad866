//! Partite agreement configurations: multiset edge patterns that codes
//! can realise through exact agreement structure, plus the shadow and
//! projection machinery used to transfer density and uncapturability
//! between a code and its lower-dimensional images.

use crate::code::Code;
use crate::measure::ProductMeasure;
use crate::pseudo::{is_uncapturable, CaptureReport, CaptureStatus, CheckStatus};
use crate::space::{Point, Shape};
use crate::{rat, Error, Rat, Result};
use itertools::Itertools;
use num::BigUint;

/// Default node budget for realisation search.
pub const SEARCH_BUDGET: u64 = 100_000_000;

/// An l-partite configuration: parts U_1..U_l given by their sizes and a
/// multiset of edges, each edge choosing one vertex per part (stored as
/// the vertex index within that part). Zero parts are allowed; then every
/// edge is the empty tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    parts: Vec<usize>,
    edges: Vec<Vec<usize>>,
}

impl Configuration {
    pub fn new(parts: Vec<usize>, edges: Vec<Vec<usize>>) -> Result<Configuration> {
        if parts.iter().any(|&s| s == 0) {
            return Err(Error::Invalid("configuration parts must be nonempty".into()));
        }
        for e in &edges {
            if e.len() != parts.len() {
                return Err(Error::Invalid(
                    "configuration edge does not pick one vertex per part".into(),
                ));
            }
            for (k, &v) in e.iter().enumerate() {
                if v >= parts[k] {
                    return Err(Error::Invalid(format!(
                        "configuration edge vertex {v} outside part {k}"
                    )));
                }
            }
        }
        Ok(Configuration { parts, edges })
    }

    /// Two edges agreeing on exactly s shared singleton parts: the
    /// forbidden pattern of an s-avoiding code.
    pub fn pair_config(s: usize) -> Configuration {
        Configuration {
            parts: vec![1; s],
            edges: vec![vec![0; s]; 2],
        }
    }

    /// h pairwise disjoint edges across l parts of size h.
    pub fn matching(h: usize, ell: usize) -> Configuration {
        Configuration {
            parts: vec![h.max(1); ell],
            edges: (0..h).map(|j| vec![j; ell]).collect(),
        }
    }

    pub fn ell(&self) -> usize {
        self.parts.len()
    }

    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn part_sizes(&self) -> &[usize] {
        &self.parts
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    /// Density h / prod |U_i|.
    pub fn density(&self) -> Rat {
        let mut d = rat(self.size(), 1);
        for &s in &self.parts {
            d /= rat(s, 1);
        }
        d
    }

    /// Vertices (part, index) lying in every edge.
    pub fn kernel(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, &size) in self.parts.iter().enumerate() {
            for v in 0..size {
                if !self.edges.is_empty() && self.edges.iter().all(|e| e[k] == v) {
                    out.push((k, v));
                }
            }
        }
        out
    }

    /// Vertices (part, index) lying in more than one edge, with multiset
    /// multiplicity: duplicate edges count separately.
    pub fn centre(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, &size) in self.parts.iter().enumerate() {
            for v in 0..size {
                if self.edges.iter().filter(|e| e[k] == v).count() > 1 {
                    out.push((k, v));
                }
            }
        }
        out
    }

    /// Flat: each part has at most one centre vertex.
    pub fn is_flat(&self) -> bool {
        let centre = self.centre();
        (0..self.parts.len())
            .all(|k| centre.iter().filter(|&&(p, _)| p == k).count() <= 1)
    }

    /// Adds t singleton parts shared by every edge, growing the kernel by
    /// exactly t vertices.
    pub fn oplus(&self, t: usize) -> Configuration {
        let mut parts = self.parts.clone();
        parts.extend(std::iter::repeat(1).take(t));
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.extend(std::iter::repeat(0).take(t));
                e
            })
            .collect();
        Configuration { parts, edges }
    }

    /// Flat companion on one part per original vertex: each edge keeps a
    /// copy of its own vertices (index 0 of those parts) and receives a
    /// private new vertex in every other part. Size is preserved and the
    /// result is always flat.
    pub fn flatten(&self) -> Configuration {
        let h = self.size();
        let verts: Vec<(usize, usize)> = self
            .parts
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| (0..s).map(move |v| (k, v)))
            .collect();
        let mut parts = Vec::with_capacity(verts.len());
        let mut edges = vec![vec![0usize; verts.len()]; h];
        for (pos, &(k, v)) in verts.iter().enumerate() {
            let absent = (0..h).filter(|&j| self.edges[j][k] != v).count();
            parts.push(1 + absent);
            let mut slot = 1;
            for (j, edge) in edges.iter_mut().enumerate() {
                if self.edges[j][k] == v {
                    edge[pos] = 0;
                } else {
                    edge[pos] = slot;
                    slot += 1;
                }
            }
        }
        Configuration { parts, edges }
    }

    /// Shared parts of two edges: parts where they pick the same vertex.
    fn shared_parts(&self, j: usize, jp: usize) -> Vec<usize> {
        (0..self.ell())
            .filter(|&k| self.edges[j][k] == self.edges[jp][k])
            .collect()
    }
}

/// A realisation: the part-to-coordinate injection and one point per
/// edge.
#[derive(Debug, Clone)]
pub struct Realisation {
    pub phi: Vec<usize>,
    pub points: Vec<Point>,
}

/// Exact agreement-pattern verifier: points x^j agree at coordinate i
/// exactly when i = phi(k) for a part k where the two edges share their
/// vertex.
pub fn verify_realisation(cfg: &Configuration, fams: &[&Code], real: &Realisation) -> bool {
    let h = cfg.size();
    if fams.len() != h || real.points.len() != h || real.phi.len() != cfg.ell() {
        return false;
    }
    let n = match fams.first() {
        Some(f) => f.shape().n(),
        None => return true,
    };
    if real.phi.iter().any(|&i| i >= n) || real.phi.iter().duplicates().count() > 0 {
        return false;
    }
    for (j, p) in real.points.iter().enumerate() {
        if !fams[j].contains(p) {
            return false;
        }
    }
    for j in 0..h {
        for jp in j + 1..h {
            let required: Vec<usize> = cfg
                .shared_parts(j, jp)
                .into_iter()
                .map(|k| real.phi[k])
                .collect();
            for i in 0..n {
                let agree = real.points[j].get(i) == real.points[jp].get(i);
                if agree != required.contains(&i) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub found: Option<Realisation>,
    /// True when the search space was exhausted without exceeding the
    /// node budget, so a None is a certificate of freeness.
    pub exhaustive: bool,
    pub nodes: u64,
}

/// Backtracking search for points of F_1..F_h realising the
/// configuration: enumerate part-to-coordinate injections in
/// lexicographic order, then place one member per edge checking the
/// exact pairwise agreement pattern incrementally.
pub fn find_cross(fams: &[&Code], cfg: &Configuration, budget: u64) -> Result<SearchOutcome> {
    let h = cfg.size();
    if fams.len() != h {
        return Err(Error::ShapeMismatch(format!(
            "{} families for a configuration of size {h}",
            fams.len()
        )));
    }
    if h == 0 {
        return Ok(SearchOutcome {
            found: Some(Realisation { phi: Vec::new(), points: Vec::new() }),
            exhaustive: true,
            nodes: 0,
        });
    }
    let shape = fams[0].shape();
    if fams.iter().any(|f| f.shape() != shape) {
        return Err(Error::ShapeMismatch("realisation families differ in shape".into()));
    }
    let n = shape.n();
    let ell = cfg.ell();
    if ell > n {
        return Ok(SearchOutcome { found: None, exhaustive: true, nodes: 0 });
    }
    let rows: Vec<Vec<Vec<u16>>> = fams
        .iter()
        .map(|f| f.members().map(|p| p.coords().to_vec()).collect())
        .collect();
    let mut nodes = 0u64;
    for phi in (0..n).permutations(ell) {
        // required[j][jp] lists the coordinates where edges j and jp must
        // agree under this injection; everywhere else they must differ.
        let required: Vec<Vec<Vec<usize>>> = (0..h)
            .map(|j| {
                (0..h)
                    .map(|jp| cfg.shared_parts(j, jp).into_iter().map(|k| phi[k]).collect())
                    .collect()
            })
            .collect();
        let mut chosen: Vec<usize> = Vec::with_capacity(h);
        let found = place_edge(&rows, &required, n, &mut chosen, &mut nodes, budget)?;
        if let Some(indices) = found {
            let points = indices
                .iter()
                .enumerate()
                .map(|(j, &idx)| Point::from_raw(rows[j][idx].clone()))
                .collect();
            return Ok(SearchOutcome {
                found: Some(Realisation { phi, points }),
                exhaustive: true,
                nodes,
            });
        }
        if nodes >= budget {
            return Ok(SearchOutcome { found: None, exhaustive: false, nodes });
        }
    }
    Ok(SearchOutcome { found: None, exhaustive: true, nodes })
}

fn place_edge(
    rows: &[Vec<Vec<u16>>],
    required: &[Vec<Vec<usize>>],
    n: usize,
    chosen: &mut Vec<usize>,
    nodes: &mut u64,
    budget: u64,
) -> Result<Option<Vec<usize>>> {
    let j = chosen.len();
    if j == rows.len() {
        return Ok(Some(chosen.clone()));
    }
    for (idx, cand) in rows[j].iter().enumerate() {
        *nodes += 1;
        if *nodes > budget {
            return Ok(None);
        }
        let ok = chosen.iter().enumerate().all(|(jp, &prev_idx)| {
            let prev = &rows[jp][prev_idx];
            let req = &required[j][jp];
            (0..n).all(|i| (cand[i] == prev[i]) == req.contains(&i))
        });
        if ok {
            chosen.push(idx);
            if let Some(hit) = place_edge(rows, required, n, chosen, nodes, budget)? {
                return Ok(Some(hit));
            }
            chosen.pop();
            if *nodes >= budget {
                return Ok(None);
            }
        }
    }
    Ok(None)
}

/// Single-family containment search.
pub fn find_realisation(f: &Code, cfg: &Configuration, budget: u64) -> Result<SearchOutcome> {
    let fams: Vec<&Code> = vec![f; cfg.size()];
    find_cross(&fams, cfg, budget)
}

/// Freeness with an exhaustiveness certificate: Holds means free,
/// Fails means the configuration was realised, Unknown means the budget
/// ran out first.
pub fn is_h_free(f: &Code, cfg: &Configuration, budget: u64) -> Result<CheckStatus> {
    let outcome = find_realisation(f, cfg, budget)?;
    Ok(match (outcome.found, outcome.exhaustive) {
        (Some(_), _) => CheckStatus::Fails,
        (None, true) => CheckStatus::Holds,
        (None, false) => CheckStatus::Unknown,
    })
}

/// Shadow at coordinate i: the union of all restrictions of coordinate i,
/// i.e. the projection deleting that coordinate.
pub fn shadow(f: &Code, i: usize) -> Result<Code> {
    shadow_set(f, &[i])
}

/// Iterated shadow deleting a set of coordinates; independent of the
/// deletion order.
pub fn shadow_set(f: &Code, coords: &[usize]) -> Result<Code> {
    let shape = f.shape();
    let n = shape.n();
    if coords.iter().any(|&i| i >= n) {
        return Err(Error::Invalid("shadow coordinate out of range".into()));
    }
    let keep: Vec<usize> = (0..n).filter(|i| !coords.contains(i)).collect();
    projection(f, &keep)
}

/// Coordinate projection onto a nonempty increasing coordinate set.
pub fn projection(f: &Code, keep: &[usize]) -> Result<Code> {
    let shape = f.shape();
    if keep.is_empty() {
        return Err(Error::Invalid("projection needs at least one coordinate".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || *keep.last().unwrap() >= shape.n() {
        return Err(Error::Invalid("projection coordinates must be increasing and in range".into()));
    }
    let out_shape = Shape::new(shape.m() as u32, keep.len() as u32)?;
    let mut out = Code::empty(&out_shape);
    for p in f.members() {
        let coords: Vec<u16> = keep.iter().map(|&i| p.get(i)).collect();
        out.insert(&Point::from_raw(coords));
    }
    Ok(out)
}

/// Projection cardinality, with the empty coordinate set handled
/// directly: a nonempty family projects to the single empty point.
pub fn projection_size(f: &Code, keep: &[usize]) -> usize {
    if keep.is_empty() {
        usize::from(!f.is_empty())
    } else {
        projection(f, keep).map(|c| c.len()).unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct ShadowLowerCheck {
    pub premise_flat: bool,
    pub premise_n: bool,
    pub free_status: CheckStatus,
    pub lhs: u64,
    pub rhs: u64,
    pub holds: Option<bool>,
    pub skipped: bool,
}

/// |F| <= h * sum_i |shadow_i(F)| whenever F is free of a flat
/// configuration of size h and n >= h * l. Counts are reported even when
/// a premise fails, but the verdict is then skipped.
pub fn shadow_lower_check(f: &Code, cfg: &Configuration, budget: u64) -> Result<ShadowLowerCheck> {
    let shape = f.shape();
    let n = shape.n();
    let h = cfg.size();
    let premise_flat = cfg.is_flat();
    let premise_n = n >= h * cfg.ell();
    let free_status = is_h_free(f, cfg, budget)?;
    let lhs = f.len() as u64;
    let mut rhs = 0u64;
    if n >= 2 {
        for i in 0..n {
            rhs += shadow(f, i)?.len() as u64;
        }
    } else {
        // One coordinate: every shadow is the empty-set projection.
        rhs = n as u64 * projection_size(f, &[]) as u64;
    }
    rhs *= h as u64;
    let premises = premise_flat && premise_n && free_status == CheckStatus::Holds;
    Ok(ShadowLowerCheck {
        premise_flat,
        premise_n,
        free_status,
        lhs,
        rhs,
        holds: premises.then_some(lhs <= rhs),
        skipped: !premises,
    })
}

#[derive(Debug, Clone)]
pub struct ShadowUncapCheck {
    pub premise: CaptureReport,
    pub premise_ok: bool,
    pub free_status: CheckStatus,
    pub flat: bool,
    pub derived_r: usize,
    pub derived_eps: Rat,
    pub verdicts: Vec<CaptureStatus>,
    pub witness: Option<usize>,
    pub any_unknown: bool,
    /// Some(true): a witnessing shadow was found. Some(false): premises
    /// verified yet every shadow capturable, a genuine violation. None:
    /// premises failed or verdicts were inconclusive.
    pub lemma_ok: Option<bool>,
}

/// If F is (r,eps)-uncapturable and free of a flat size-h configuration,
/// some shadow is (r/n, eps*m/(n*h))-uncapturable.
pub fn shadow_uncap_transfer(
    f: &Code,
    cfg: &Configuration,
    r: usize,
    eps: &Rat,
    budget: u64,
    set_budget: usize,
) -> Result<ShadowUncapCheck> {
    let shape = f.shape();
    let n = shape.n();
    let m = shape.m();
    let h = cfg.size();
    let flat = cfg.is_flat();
    let free_status = is_h_free(f, cfg, budget)?;
    let premise = is_uncapturable(f, r, eps, set_budget);
    let premise_ok = flat
        && n >= h * cfg.ell()
        && free_status == CheckStatus::Holds
        && premise.status == CaptureStatus::Uncapturable;
    let derived_r = r / n;
    let derived_eps = eps.clone() * rat(m, n * h);
    let mut verdicts = Vec::with_capacity(n);
    let mut witness = None;
    let mut any_unknown = false;
    if n >= 2 {
        for i in 0..n {
            let sh = shadow(f, i)?;
            let rep = is_uncapturable(&sh, derived_r, &derived_eps, set_budget);
            if rep.status == CaptureStatus::Uncapturable && witness.is_none() {
                witness = Some(i);
            }
            if rep.status == CaptureStatus::Unknown {
                any_unknown = true;
            }
            verdicts.push(rep.status);
        }
    }
    let lemma_ok = if !premise_ok {
        None
    } else if witness.is_some() {
        Some(true)
    } else if any_unknown {
        None
    } else {
        Some(false)
    };
    Ok(ShadowUncapCheck {
        premise,
        premise_ok,
        free_status,
        flat,
        derived_r,
        derived_eps,
        verdicts,
        witness,
        any_unknown,
        lemma_ok,
    })
}

fn binomial_big(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for j in 0..k.min(n - k) {
        num *= BigUint::from(n - j);
        den *= BigUint::from(j + 1);
    }
    num / den
}

#[derive(Debug, Clone)]
pub struct ShearerCheck {
    pub exponent: BigUint,
    pub lhs: BigUint,
    pub rhs: BigUint,
    pub holds: bool,
    pub equality: bool,
}

/// |F|^C(n-1,k-1) <= prod over k-sets S of |projection_S(F)|, compared in
/// exact big-integer arithmetic.
pub fn shearer_check(f: &Code, k: usize) -> Result<ShearerCheck> {
    let n = f.shape().n();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("shearer needs 1 <= k <= {n}")));
    }
    let exponent = binomial_big(n - 1, k - 1);
    let exp_u32 = u32::try_from(&exponent)
        .map_err(|_| Error::Budget("shearer exponent exceeds u32".into()))?;
    let lhs = BigUint::from(f.len()).pow(exp_u32);
    let mut rhs = BigUint::from(1u32);
    for s in (0..n).combinations(k) {
        rhs *= BigUint::from(projection_size(f, &s));
    }
    Ok(ShearerCheck {
        exponent,
        lhs: lhs.clone(),
        rhs: rhs.clone(),
        holds: lhs <= rhs,
        equality: lhs == rhs,
    })
}

/// Minimum number of co-dimension-1 subcubes covering the configuration
/// with each edge in exactly one. A subcube either carries a vertex
/// (covering every edge through it, provided no edge meets two chosen
/// vertices) or privately covers a single edge through an expansion
/// coordinate, so sigma = min |W| + #(edges missed by W) over vertex sets
/// W meeting every edge at most once.
pub fn crosscut(cfg: &Configuration) -> Result<usize> {
    let h = cfg.size();
    if h == 0 {
        return Ok(0);
    }
    let used: Vec<(usize, usize)> = cfg
        .parts
        .iter()
        .enumerate()
        .flat_map(|(k, &s)| (0..s).map(move |v| (k, v)))
        .filter(|&(k, v)| cfg.edges.iter().any(|e| e[k] == v))
        .collect();
    if used.len() > 22 {
        return Err(Error::Budget(format!(
            "crosscut search over {} vertices exceeds the subset budget",
            used.len()
        )));
    }
    // incidence[w] = bitmask of edges through used vertex w.
    let incidence: Vec<u64> = used
        .iter()
        .map(|&(k, v)| {
            cfg.edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e[k] == v)
                .fold(0u64, |acc, (j, _)| acc | (1 << j))
        })
        .collect();
    let mut best = h;
    for mask in 0u64..(1 << used.len()) {
        let mut covered = 0u64;
        let mut double = false;
        let mut count = 0usize;
        for (w, &inc) in incidence.iter().enumerate() {
            if mask >> w & 1 == 1 {
                if covered & inc != 0 {
                    double = true;
                    break;
                }
                covered |= inc;
                count += 1;
            }
        }
        if !double {
            let missed = h - covered.count_ones() as usize;
            best = best.min(count + missed);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct CrossMatchingReport {
    pub witness: Option<Vec<Point>>,
    pub premise_balanced: bool,
    pub premise_m: bool,
    pub product: Rat,
    pub bound: Option<Rat>,
    pub bound_triggered: bool,
    /// True only when the bound guarantees a matching, the greedy pass
    /// failed, and exhaustive search confirmed absence.
    pub anomaly: bool,
    pub search_exhaustive: bool,
}

/// Greedy search for pairwise-disagreeing representatives x^j of the
/// F_j, with the generalised spectral bound reported alongside: when nu
/// is b-balanced, m > h*b and prod nu(F_j) > 2^h b/(m - h b), a matching
/// must exist.
pub fn cross_matching(
    fams: &[&Code],
    nu: &ProductMeasure,
    b: usize,
) -> Result<CrossMatchingReport> {
    let h = fams.len();
    if h == 0 {
        return Err(Error::Invalid("cross matching needs at least one family".into()));
    }
    let shape = fams[0].shape();
    if fams.iter().any(|f| f.shape() != shape) {
        return Err(Error::ShapeMismatch("cross matching families differ in shape".into()));
    }
    let m = shape.m();
    let n = shape.n();
    if nu.n() != n || nu.radix(0) != m {
        return Err(Error::ShapeMismatch("measure does not match the families".into()));
    }
    let balance = rat(b, m);
    let premise_balanced = (0..n).all(|i| (0..m).all(|a| *nu.entry(i, a) <= balance));
    let premise_m = m > h * b;
    let mut product = rat(1, 1);
    for f in fams {
        product *= f.measure_under(nu)?;
    }
    let bound = premise_m.then(|| {
        let mut p = rat(1, 1);
        for _ in 0..h {
            p *= rat(2, 1);
        }
        p * rat(b, m - h * b)
    });
    let bound_triggered = premise_balanced
        && bound.as_ref().map(|bd| product > *bd).unwrap_or(false);

    let mut witness: Option<Vec<Point>> = None;
    let mut chosen: Vec<Point> = Vec::new();
    for f in fams {
        let next = f
            .members()
            .find(|p| chosen.iter().all(|q| crate::space::agreement(p, q) == 0));
        match next {
            Some(p) => chosen.push(p),
            None => break,
        }
    }
    if chosen.len() == h {
        witness = Some(chosen);
    }

    let mut search_exhaustive = true;
    if witness.is_none() {
        // Greedy is not complete; fall back to backtracking before
        // declaring an anomaly against the existence bound.
        let cfg = Configuration::matching(h, 1);
        let outcome = find_cross(fams, &cfg, SEARCH_BUDGET)?;
        search_exhaustive = outcome.exhaustive;
        witness = outcome.found.map(|r| r.points);
    }
    let anomaly = bound_triggered && witness.is_none() && search_exhaustive;
    Ok(CrossMatchingReport {
        witness,
        premise_balanced,
        premise_m,
        product,
        bound,
        bound_triggered,
        anomaly,
        search_exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{ball, BallSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(a: (usize, usize)) -> (usize, usize) {
        a
    }

    #[test]
    fn identical_edges_have_full_kernel_and_are_flat() {
        let cfg = Configuration::new(vec![2, 2], vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert_eq!(cfg.kernel(), vec![pair((0, 0)), pair((1, 0))]);
        assert_eq!(cfg.centre(), vec![pair((0, 0)), pair((1, 0))]);
        assert!(cfg.is_flat());
        assert_eq!(cfg.density(), rat(2, 4));
    }

    #[test]
    fn disjoint_edges_have_empty_kernel_and_centre() {
        let cfg = Configuration::new(vec![2, 2], vec![vec![0, 0], vec![1, 1]]).unwrap();
        assert!(cfg.kernel().is_empty());
        assert!(cfg.centre().is_empty());
        assert!(cfg.is_flat());
    }

    #[test]
    fn two_centre_vertices_in_one_part_break_flatness() {
        let cfg = Configuration::new(
            vec![2, 4],
            vec![vec![0, 0], vec![0, 1], vec![1, 2], vec![1, 3]],
        )
        .unwrap();
        assert_eq!(cfg.centre(), vec![pair((0, 0)), pair((0, 1))]);
        assert!(!cfg.is_flat());
    }

    #[test]
    fn oplus_grows_the_kernel() {
        let cfg = Configuration::new(vec![2, 2], vec![vec![0, 0], vec![1, 1]]).unwrap();
        let plus = cfg.oplus(1);
        assert_eq!(plus.ell(), 3);
        assert_eq!(plus.kernel(), vec![pair((2, 0))]);
        assert_eq!(plus.size(), 2);
    }

    #[test]
    fn flatten_is_flat_and_preserves_size() {
        let crooked = Configuration::new(
            vec![2, 4],
            vec![vec![0, 0], vec![0, 1], vec![1, 2], vec![1, 3]],
        )
        .unwrap();
        let flat = crooked.flatten();
        assert!(flat.is_flat());
        assert_eq!(flat.size(), crooked.size());
        assert_eq!(flat.ell(), 6);
        let pairc = Configuration::pair_config(2);
        assert!(pairc.flatten().is_flat());
        assert_eq!(pairc.flatten().size(), 2);
    }

    #[test]
    fn pair_config_matches_avoidance_exhaustively() {
        let shape = Shape::new(3, 2).unwrap();
        for mask in 0..512u32 {
            let f = Code::from_fn(&shape, |p| mask >> shape.rank(p) & 1 == 1);
            for s in 0..2usize {
                let free = is_h_free(&f, &Configuration::pair_config(s), SEARCH_BUDGET).unwrap();
                assert_eq!(
                    free == CheckStatus::Holds,
                    f.is_s_avoiding(s),
                    "mask {mask} s {s}"
                );
            }
        }
    }

    #[test]
    fn pair_config_matches_avoidance_on_random_triples() {
        let shape = Shape::new(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.3));
            for s in 0..3usize {
                let free = is_h_free(&f, &Configuration::pair_config(s), SEARCH_BUDGET).unwrap();
                assert_eq!(free == CheckStatus::Holds, f.is_s_avoiding(s));
            }
        }
    }

    #[test]
    fn full_square_realises_the_disjoint_pair() {
        let shape = Shape::new(3, 2).unwrap();
        let f = Code::full(&shape);
        let cfg = Configuration::pair_config(0);
        let out = find_realisation(&f, &cfg, SEARCH_BUDGET).unwrap();
        let real = out.found.expect("two disagreeing points exist");
        let fams: Vec<&Code> = vec![&f, &f];
        assert!(verify_realisation(&cfg, &fams, &real));
    }

    #[test]
    fn intersecting_ball_is_disjoint_pair_free() {
        let shape = Shape::new(3, 3).unwrap();
        let f = ball(&shape, BallSpec { t: 1, r: 0 }).unwrap();
        let out = find_realisation(&f, &Configuration::pair_config(0), SEARCH_BUDGET).unwrap();
        assert!(out.found.is_none());
        assert!(out.exhaustive);
        let deep = ball(&Shape::new(3, 4).unwrap(), BallSpec { t: 2, r: 0 }).unwrap();
        assert_eq!(
            is_h_free(&deep, &Configuration::pair_config(1), SEARCH_BUDGET).unwrap(),
            CheckStatus::Holds
        );
    }

    #[test]
    fn cross_realisation_of_a_two_matching() {
        let shape = Shape::new(3, 2).unwrap();
        let f1 = Code::dictator(&shape, 0, 0);
        let f2 = Code::dictator(&shape, 0, 1);
        let cfg = Configuration::matching(2, 1);
        let fams = [&f1, &f2];
        let out = find_cross(&fams, &cfg, SEARCH_BUDGET).unwrap();
        let real = out.found.expect("matching exists");
        assert!(verify_realisation(&cfg, &fams, &real));
        assert_eq!(crate::space::agreement(&real.points[0], &real.points[1]), 0);
    }

    #[test]
    fn exhausted_budget_reports_unknown() {
        let shape = Shape::new(3, 3).unwrap();
        let f = ball(&shape, BallSpec { t: 1, r: 0 }).unwrap();
        let out = find_realisation(&f, &Configuration::pair_config(0), 2).unwrap();
        assert!(out.found.is_none());
        assert!(!out.exhaustive);
        assert_eq!(
            is_h_free(&f, &Configuration::pair_config(0), 2).unwrap(),
            CheckStatus::Unknown
        );
    }

    #[test]
    fn shadow_collapses_a_fixed_coordinate() {
        let shape = Shape::new(3, 2).unwrap();
        let pts: Vec<Point> = [vec![0u16, 0], vec![1, 0]]
            .into_iter()
            .map(Point::from_raw)
            .collect();
        let f = Code::from_points(&shape, pts.iter());
        let sh = shadow(&f, 0).unwrap();
        assert_eq!(sh.len(), 1);
        assert!(sh.contains(&Point::from_raw(vec![0])));
    }

    #[test]
    fn iterated_shadows_commute() {
        let shape = Shape::new(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.4));
            let ab = shadow(&shadow(&f, 2).unwrap(), 0).unwrap();
            let ba = shadow(&shadow(&f, 0).unwrap(), 1).unwrap();
            let set = shadow_set(&f, &[0, 2]).unwrap();
            let ranks: Vec<usize> = ab.member_ranks().collect();
            assert_eq!(ranks, ba.member_ranks().collect::<Vec<_>>());
            assert_eq!(ranks, set.member_ranks().collect::<Vec<_>>());
        }
    }

    #[test]
    fn projection_size_is_bounded() {
        let shape = Shape::new(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let f = Code::from_fn(&shape, |_| rng.random_bool(0.5));
            for k in 1..=2usize {
                for s in (0..3).combinations(k) {
                    let size = projection_size(&f, &s);
                    assert!(size <= f.len());
                    assert!(size <= 3usize.pow(k as u32));
                }
            }
            assert_eq!(projection_size(&f, &[]), usize::from(!f.is_empty()));
        }
    }

    #[test]
    fn shadow_lower_holds_for_a_single_point() {
        let shape = Shape::new(3, 4).unwrap();
        let f = Code::from_ranks(&shape, [5]);
        let cfg = Configuration::pair_config(0);
        let rep = shadow_lower_check(&f, &cfg, SEARCH_BUDGET).unwrap();
        assert!(!rep.skipped);
        assert_eq!(rep.lhs, 1);
        assert_eq!(rep.holds, Some(true));
    }

    #[test]
    fn shadow_lower_exact_counts_for_the_dictator_ball() {
        let shape = Shape::new(3, 4).unwrap();
        let f = ball(&shape, BallSpec { t: 1, r: 0 }).unwrap();
        let rep = shadow_lower_check(&f, &Configuration::pair_config(0), SEARCH_BUDGET).unwrap();
        assert!(!rep.skipped);
        assert_eq!(rep.lhs, 27);
        // Shadow at the dictator coordinate is the full cube [3]^3; each
        // other shadow is a dictator in [3]^3.
        assert_eq!(rep.rhs, 2 * (27 + 9 + 9 + 9));
        assert_eq!(rep.holds, Some(true));
    }

    #[test]
    fn shadow_lower_on_rejection_sampled_free_families() {
        let shape = Shape::new(3, 3).unwrap();
        let host = ball(&shape, BallSpec { t: 1, r: 1 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let cfg = Configuration::pair_config(0);
        let mut checked = 0;
        for _ in 0..60 {
            // Subfamilies of an intersecting ball stay free of the
            // disjoint pair.
            let f = Code::from_fn(&shape, |p| host.contains(p) && rng.random_bool(0.6));
            if f.is_empty() {
                continue;
            }
            let rep = shadow_lower_check(&f, &cfg, SEARCH_BUDGET).unwrap();
            assert!(!rep.skipped);
            assert_eq!(rep.holds, Some(true));
            checked += 1;
        }
        assert!(checked >= 20);
    }

    #[test]
    fn shadow_uncap_rejects_a_capturable_premise() {
        let shape = Shape::new(3, 4).unwrap();
        let f = Code::dictator(&shape, 0, 0);
        let cfg = Configuration::pair_config(0);
        let rep =
            shadow_uncap_transfer(&f, &cfg, 2, &rat(1, 10), SEARCH_BUDGET, 1 << 20).unwrap();
        assert!(!rep.premise_ok);
        assert_eq!(rep.lemma_ok, None);
    }

    #[test]
    fn shadow_uncap_diagnoses_the_mod_three_hypotheses() {
        // The mod-3 family is uncapturable but realises the disjoint
        // pair, so the freeness hypothesis fails and the check reports
        // that instead of a verdict.
        let shape = Shape::new(3, 4).unwrap();
        let f = Code::from_fn(&shape, |p| {
            p.coords().iter().map(|&a| a as usize).sum::<usize>() % 3 == 0
        });
        let cfg = Configuration::pair_config(0);
        let rep =
            shadow_uncap_transfer(&f, &cfg, 2, &rat(1, 10), SEARCH_BUDGET, 1 << 20).unwrap();
        assert_eq!(rep.premise.status, CaptureStatus::Uncapturable);
        assert_eq!(rep.free_status, CheckStatus::Fails);
        assert!(!rep.premise_ok);
        assert_eq!(rep.lemma_ok, None);
    }

    #[test]
    fn shearer_is_tight_on_the_full_cube() {
        let shape = Shape::new(2, 3).unwrap();
        let f = Code::full(&shape);
        let rep = shearer_check(&f, 2).unwrap();
        assert!(rep.holds);
        assert!(rep.equality);
        assert_eq!(rep.lhs, BigUint::from(64u32));
    }

    #[test]
    fn shearer_on_a_singleton() {
        let shape = Shape::new(2, 3).unwrap();
        let f = Code::from_ranks(&shape, [3]);
        let rep = shearer_check(&f, 1).unwrap();
        assert!(rep.holds);
        assert!(rep.equality);
    }

    #[test]
    fn shearer_never_violated_on_the_binary_cube() {
        let shape = Shape::new(2, 3).unwrap();
        for mask in 0..256u32 {
            let f = Code::from_fn(&shape, |p| mask >> shape.rank(p) & 1 == 1);
            for k in 1..=2usize {
                assert!(shearer_check(&f, k).unwrap().holds, "mask {mask} k {k}");
            }
        }
    }

    #[test]
    fn crosscut_of_kernel_and_matching_configurations() {
        let identical = Configuration::new(vec![2, 2], vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert_eq!(crosscut(&identical).unwrap(), 1);
        let two_singles = Configuration::new(vec![2], vec![vec![0], vec![1]]).unwrap();
        assert_eq!(crosscut(&two_singles).unwrap(), 2);
        for h in 1..=4usize {
            let m = Configuration::matching(h, 2);
            assert_eq!(crosscut(&m).unwrap(), h, "matching of size {h}");
        }
    }

    #[test]
    fn crosscut_is_one_exactly_when_the_kernel_is_nonempty() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..200 {
            let ell = rng.random_range(1..=3usize);
            let h = rng.random_range(1..=3usize);
            let parts: Vec<usize> = (0..ell).map(|_| rng.random_range(1..=3)).collect();
            let edges: Vec<Vec<usize>> = (0..h)
                .map(|_| parts.iter().map(|&s| rng.random_range(0..s)).collect())
                .collect();
            let cfg = Configuration::new(parts, edges).unwrap();
            let sigma = crosscut(&cfg).unwrap();
            assert_eq!(sigma == 1, !cfg.kernel().is_empty());
        }
    }

    #[test]
    fn cross_matching_succeeds_greedily_on_full_families() {
        let shape = Shape::new(3, 2).unwrap();
        let f = Code::full(&shape);
        let nu = ProductMeasure::uniform(3, 2);
        let fams = [&f, &f];
        let rep = cross_matching(&fams, &nu, 1).unwrap();
        assert!(rep.witness.is_some());
        assert!(!rep.anomaly);
    }

    #[test]
    fn cross_matching_bound_not_triggered_on_thin_dictators() {
        let shape = Shape::new(3, 2).unwrap();
        let f1 = Code::dictator(&shape, 0, 0);
        let f2 = Code::dictator(&shape, 0, 0);
        let nu = ProductMeasure::uniform(3, 2);
        let fams = [&f1, &f2];
        let rep = cross_matching(&fams, &nu, 1).unwrap();
        assert!(rep.witness.is_none());
        assert!(rep.premise_m);
        assert_eq!(rep.product, rat(1, 9));
        assert_eq!(rep.bound, Some(rat(4, 1)));
        assert!(!rep.bound_triggered);
        assert!(!rep.anomaly);
    }

    #[test]
    fn cross_matching_finds_witnesses_in_dense_wide_families() {
        let shape = Shape::new(9, 3).unwrap();
        let nu = ProductMeasure::uniform(9, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let f1 = Code::from_fn(&shape, |_| rng.random_bool(0.9));
            let f2 = Code::from_fn(&shape, |_| rng.random_bool(0.9));
            let fams = [&f1, &f2];
            let rep = cross_matching(&fams, &nu, 1).unwrap();
            if rep.bound_triggered {
                assert!(rep.witness.is_some());
            }
            assert!(!rep.anomaly);
        }
    }
}
