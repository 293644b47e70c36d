//! Horn lifting problems over a map of truncated simplicial sets, lifting
//! structures, and the checkers for the stability conditions they may satisfy.

mod checks;
mod malcev;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::delta::{compose, degeneracy_map, face_map, DeltaError, MonotoneMap};
use crate::salg::{terminal, SalgError, SimplicialMap, SimplicialSet};
use crate::sieve::{HornSpec, SieveError};

pub use checks::{
    brute_force_problem_count, check_degenerate_preferring, check_effective, check_face_escape,
    check_formulations_agree, check_lifts, check_symmetric_effective, expected_effective_instances,
    expected_symmetric_instances, CheckReport,
};
pub use malcev::{
    apply_n_k, check_fixed_points, check_trace_lemmas, malcev_lift, trace_malcev, MalcevLifting, TraceStep,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KanError {
    #[error(transparent)]
    Salg(#[from] SalgError),
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error("{spec} needs {expected} facets, got {found}")]
    FacetCount {
        spec: HornSpec,
        expected: usize,
        found: usize,
    },
    #[error("element {index} is out of range at level {level}")]
    ElementOutOfRange { level: usize, index: usize },
    #[error("facets {k} and {l} disagree on their common face")]
    IncompatibleFacets { k: usize, l: usize },
    #[error("facet {k} does not lie over the {k}-th face of the base simplex")]
    NotOverBase { k: usize },
    #[error("dimension {needed} is beyond the truncation {truncation}")]
    Truncation { needed: usize, truncation: usize },
    #[error("the projection does not commute with the Malcev operations")]
    NotAlgebraic,
    #[error("no tabulated lift for {0}")]
    NotTabulated(String),
    #[error("the sign {sign} is not allowed on {spec}")]
    SignViolation { spec: HornSpec, sign: Sign },
    #[error("{m_star} is not an admissible missing face for {spec} pulled back along s_{j}")]
    InadmissiblePullback { spec: HornSpec, j: usize, m_star: usize },
    #[error("the problem has no filler")]
    NoFiller,
}

/// A map `α : X -> Y` of truncated simplicial sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fibration {
    total: SimplicialSet,
    base: SimplicialSet,
    projection: SimplicialMap,
}

impl Fibration {
    /// `projection` must already be a simplicial map `total -> base`.
    pub fn new(total: SimplicialSet, base: SimplicialSet, projection: SimplicialMap) -> Result<Self, KanError> {
        let projection = SimplicialMap::new(&total, &base, projection.components().to_vec())?;
        Ok(Fibration {
            total,
            base,
            projection,
        })
    }

    /// `X -> Δ^0`.
    pub fn over_point(total: SimplicialSet) -> Self {
        let base = terminal(total.truncation());
        let projection = SimplicialMap::to_terminal(&total);
        Fibration {
            total,
            base,
            projection,
        }
    }

    pub fn total(&self) -> &SimplicialSet {
        &self.total
    }

    pub fn base(&self) -> &SimplicialSet {
        &self.base
    }

    pub fn projection(&self) -> &SimplicialMap {
        &self.projection
    }

    pub fn truncation(&self) -> usize {
        self.total.truncation()
    }

    pub fn require_level(&self, level: usize) -> Result<(), KanError> {
        if level > self.truncation() {
            return Err(KanError::Truncation {
                needed: level,
                truncation: self.truncation(),
            });
        }
        Ok(())
    }

    pub fn alpha(&self, level: usize, x: usize) -> usize {
        self.projection.apply(level, x)
    }

    /// Whether `h ∈ X_n` solves `p`.
    pub fn solves(&self, p: &LiftingProblem, h: usize) -> bool {
        let n = p.spec().n();
        self.alpha(n, h) == p.base()
            && (0..=n)
                .filter(|&k| k != p.spec().m())
                .all(|k| self.total.face(n, k, h) == p.facet(k))
    }

    /// Every filler of `p`, by exhaustive search.
    pub fn fillers(&self, p: &LiftingProblem) -> Vec<usize> {
        (0..self.total.len(p.spec().n()))
            .filter(|&h| self.solves(p, h))
            .collect()
    }
}

/// The sign carried by a signed horn inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    /// `Λ^n_0` only carries `-` and `Λ^n_n` only carries `+`.
    pub fn allowed_on(self, spec: HornSpec) -> bool {
        match self {
            Sign::Minus => spec.m() != spec.n(),
            Sign::Plus => spec.m() != 0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// A map `Λ^n_m -> X`, given by its facets `x_k ∈ X_{n-1}` for `k ≠ m`
/// in ascending order of `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HornMap {
    spec: HornSpec,
    facets: Vec<usize>,
}

impl HornMap {
    pub fn new(x: &SimplicialSet, spec: HornSpec, facets: Vec<usize>) -> Result<Self, KanError> {
        let n = spec.n();
        x.check_level(n - 1)?;
        if facets.len() != n {
            return Err(KanError::FacetCount {
                spec,
                expected: n,
                found: facets.len(),
            });
        }
        if let Some(&bad) = facets.iter().find(|&&f| f >= x.len(n - 1)) {
            return Err(KanError::ElementOutOfRange { level: n - 1, index: bad });
        }
        let map = HornMap { spec, facets };
        if let Some((k, l)) = map.first_incompatibility(x) {
            return Err(KanError::IncompatibleFacets { k, l });
        }
        Ok(map)
    }

    /// `x_l ∘ d_k = x_k ∘ d_{l-1}` for `k < l`, both different from `m`.
    fn first_incompatibility(&self, x: &SimplicialSet) -> Option<(usize, usize)> {
        let n = self.spec.n();
        if n < 2 {
            return None;
        }
        let m = self.spec.m();
        for l in (0..=n).filter(|&l| l != m) {
            for k in (0..l).filter(|&k| k != m) {
                if x.face(n - 1, k, self.facet(l)) != x.face(n - 1, l - 1, self.facet(k)) {
                    return Some((k, l));
                }
            }
        }
        None
    }

    pub fn spec(&self) -> HornSpec {
        self.spec
    }

    /// `x_k`; panics for `k = m` or `k > n`.
    pub fn facet(&self, k: usize) -> usize {
        let m = self.spec.m();
        assert!(k != m && k <= self.spec.n(), "no facet {k} on {}", self.spec);
        self.facets[if k < m { k } else { k - 1 }]
    }

    pub fn facets(&self) -> &[usize] {
        &self.facets
    }

    /// `x ∘ f` for `f : [d] -> [n]` whose image lies in the horn, i.e. misses
    /// some vertex other than `m`. Returns `None` when `f` does not factor
    /// through the horn.
    pub fn evaluate(&self, x: &SimplicialSet, f: &MonotoneMap) -> Result<Option<usize>, KanError> {
        let n = self.spec.n();
        if f.cod() != n {
            return Err(DeltaError::DomainMismatch {
                left: n,
                right: f.cod(),
            }
            .into());
        }
        let image = f.image();
        let Some(l) = (0..=n).find(|&l| l != self.spec.m() && image >> l & 1 == 0) else {
            return Ok(None);
        };
        // f = d_l ∘ g
        let g_values = f.values().iter().map(|&v| if v < l { v } else { v - 1 }).collect();
        let g = MonotoneMap::new(f.dom(), n - 1, g_values)?;
        Ok(Some(x.act(self.facet(l), &g)?))
    }
}

/// A horn `x : Λ^n_m -> X` together with `y ∈ Y_n` such that `α x_k = y ∘ d_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LiftingProblem {
    horn: HornMap,
    base: usize,
}

impl LiftingProblem {
    pub fn new(fib: &Fibration, spec: HornSpec, facets: Vec<usize>, base: usize) -> Result<Self, KanError> {
        let n = spec.n();
        fib.require_level(n)?;
        let horn = HornMap::new(fib.total(), spec, facets)?;
        if base >= fib.base().len(n) {
            return Err(KanError::ElementOutOfRange { level: n, index: base });
        }
        for k in (0..=n).filter(|&k| k != spec.m()) {
            if fib.alpha(n - 1, horn.facet(k)) != fib.base().face(n, k, base) {
                return Err(KanError::NotOverBase { k });
            }
        }
        Ok(LiftingProblem { horn, base })
    }

    /// Resolve element names; a missing base name means the only base simplex.
    pub fn from_names(
        fib: &Fibration,
        spec: HornSpec,
        facets: &[String],
        base: Option<&str>,
    ) -> Result<Self, KanError> {
        let n = spec.n();
        fib.require_level(n)?;
        let facets = facets
            .iter()
            .map(|name| fib.total().lookup(n - 1, name))
            .collect::<Result<Vec<_>, _>>()?;
        let base = match base {
            Some(name) => fib.base().lookup(n, name)?,
            None if fib.base().len(n) == 1 => 0,
            None => {
                return Err(SalgError::Invalid("the base has several simplices; name one".into()).into())
            }
        };
        LiftingProblem::new(fib, spec, facets, base)
    }

    /// The problem obtained by forgetting the `m`-th face of `h ∈ X_n`.
    pub fn restriction(fib: &Fibration, spec: HornSpec, h: usize) -> Result<Self, KanError> {
        let n = spec.n();
        fib.require_level(n)?;
        let facets = (0..=n)
            .filter(|&k| k != spec.m())
            .map(|k| fib.total().face(n, k, h))
            .collect();
        LiftingProblem::new(fib, spec, facets, fib.alpha(n, h))
    }

    pub fn spec(&self) -> HornSpec {
        self.horn.spec
    }

    pub fn horn(&self) -> &HornMap {
        &self.horn
    }

    pub fn facet(&self, k: usize) -> usize {
        self.horn.facet(k)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// JSON description with element names, for reports.
    pub fn encode(&self, fib: &Fibration) -> Value {
        let n = self.spec().n();
        let facets: Vec<&str> = self.horn.facets.iter().map(|&x| fib.total().name(n - 1, x)).collect();
        json!({
            "horn": [n, self.spec().m()],
            "facets": facets,
            "base": fib.base().name(n, self.base),
        })
    }

    pub fn describe(&self, fib: &Fibration) -> String {
        let n = self.spec().n();
        let facets: Vec<String> = (0..=n)
            .filter(|&k| k != self.spec().m())
            .map(|k| format!("x_{k}={}", fib.total().name(n - 1, self.facet(k))))
            .collect();
        format!(
            "{} [{}] over {}",
            self.spec(),
            facets.join(", "),
            fib.base().name(n, self.base)
        )
    }
}

/// Every lifting problem against `spec`, in a fixed deterministic order.
///
/// Facets are chosen in ascending `k`, and each candidate is checked against
/// the base and the facets already chosen.
pub fn enumerate_problems(fib: &Fibration, spec: HornSpec) -> Result<Vec<LiftingProblem>, KanError> {
    let n = spec.n();
    fib.require_level(n)?;
    let x = fib.total();
    let m = spec.m();
    let indices: Vec<usize> = (0..=n).filter(|&k| k != m).collect();
    // preimages of each base (n-1)-simplex
    let mut over: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in 0..x.len(n - 1) {
        over.entry(fib.alpha(n - 1, e)).or_default().push(e);
    }
    let mut out = Vec::new();
    for y in 0..fib.base().len(n) {
        let mut chosen: Vec<usize> = Vec::with_capacity(n);
        extend_facets(fib, spec, y, &indices, &over, &mut chosen, &mut out);
    }
    Ok(out)
}

fn extend_facets(
    fib: &Fibration,
    spec: HornSpec,
    y: usize,
    indices: &[usize],
    over: &BTreeMap<usize, Vec<usize>>,
    chosen: &mut Vec<usize>,
    out: &mut Vec<LiftingProblem>,
) {
    let n = spec.n();
    let x = fib.total();
    if chosen.len() == indices.len() {
        out.push(LiftingProblem {
            horn: HornMap {
                spec,
                facets: chosen.clone(),
            },
            base: y,
        });
        return;
    }
    let l = indices[chosen.len()];
    let target = fib.base().face(n, l, y);
    let Some(candidates) = over.get(&target) else {
        return;
    };
    for &candidate in candidates {
        let compatible = indices[..chosen.len()]
            .iter()
            .zip(chosen.iter())
            .all(|(&k, &xk)| x.face(n - 1, k, candidate) == x.face(n - 1, l - 1, xk));
        if compatible {
            chosen.push(candidate);
            extend_facets(fib, spec, y, indices, over, chosen, out);
            chosen.pop();
        }
    }
}

/// Every lifting problem of dimension `1..=maxdim`.
pub fn enumerate_all(fib: &Fibration, maxdim: usize) -> Result<Vec<LiftingProblem>, KanError> {
    let mut out = Vec::new();
    for n in 1..=maxdim {
        for spec in HornSpec::all(n) {
            out.extend(enumerate_problems(fib, spec)?);
        }
    }
    Ok(out)
}

/// Random problems drawn by a seeded walk through the facet choices. Each
/// draw picks a base simplex and then a uniformly random compatible facet at
/// each step, restarting on dead ends.
pub fn sample_problems(
    fib: &Fibration,
    spec: HornSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<LiftingProblem>, KanError> {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    let n = spec.n();
    fib.require_level(n)?;
    let x = fib.total();
    let m = spec.m();
    let indices: Vec<usize> = (0..=n).filter(|&k| k != m).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_attempts = count.saturating_mul(64).max(64);
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let y = rng.gen_range(0..fib.base().len(n));
        let mut chosen = Vec::with_capacity(n);
        for (pos, &l) in indices.iter().enumerate() {
            let target = fib.base().face(n, l, y);
            let candidates: Vec<usize> = (0..x.len(n - 1))
                .filter(|&c| fib.alpha(n - 1, c) == target)
                .filter(|&c| {
                    indices[..pos]
                        .iter()
                        .zip(chosen.iter())
                        .all(|(&k, &xk)| x.face(n - 1, k, c) == x.face(n - 1, l - 1, xk))
                })
                .collect();
            match candidates.choose(&mut rng) {
                Some(&c) => chosen.push(c),
                None => break,
            }
        }
        if chosen.len() == indices.len() {
            out.push(LiftingProblem {
                horn: HornMap { spec, facets: chosen },
                base: y,
            });
        }
    }
    Ok(out)
}

/// A choice of filler for lifting problems.
pub trait LiftingStructure: Sync {
    fn lift(&self, p: &LiftingProblem) -> Result<usize, KanError>;
}

impl<L: LiftingStructure + ?Sized> LiftingStructure for &L {
    fn lift(&self, p: &LiftingProblem) -> Result<usize, KanError> {
        (**self).lift(p)
    }
}

/// A lift assignment stored as a memo table, so assignments can be compared
/// extensionally and modified pointwise.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LiftTable {
    table: BTreeMap<LiftingProblem, usize>,
}

impl LiftTable {
    /// Evaluate `structure` on every problem of dimension `1..=maxdim`.
    pub fn tabulate(fib: &Fibration, structure: &dyn LiftingStructure, maxdim: usize) -> Result<Self, KanError> {
        let problems = enumerate_all(fib, maxdim)?;
        let values: Vec<usize> = problems
            .par_iter()
            .map(|p| structure.lift(p))
            .collect::<Result<_, _>>()?;
        Ok(LiftTable {
            table: problems.into_iter().zip(values).collect(),
        })
    }

    pub fn with_override(mut self, p: LiftingProblem, value: usize) -> Self {
        self.table.insert(p, value);
        self
    }

    pub fn get(&self, p: &LiftingProblem) -> Option<usize> {
        self.table.get(p).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LiftingProblem, usize)> {
        self.table.iter().map(|(p, &v)| (p, v))
    }

    /// Problems on which the two tables disagree or only one is defined.
    pub fn differences(&self, other: &LiftTable) -> Vec<LiftingProblem> {
        let mut out: Vec<LiftingProblem> = self
            .table
            .iter()
            .filter(|(p, v)| other.table.get(p) != Some(v))
            .map(|(p, _)| p.clone())
            .collect();
        out.extend(other.table.keys().filter(|p| !self.table.contains_key(p)).cloned());
        out.sort();
        out
    }
}

impl LiftingStructure for LiftTable {
    fn lift(&self, p: &LiftingProblem) -> Result<usize, KanError> {
        self.get(p)
            .ok_or_else(|| KanError::NotTabulated(format!("{:?}", p)))
    }
}

/// Every `(z, j)` with `z ∘ s_j` a filler of `p`.
pub fn find_degenerate_solutions(fib: &Fibration, p: &LiftingProblem) -> Vec<(usize, usize)> {
    let n = p.spec().n();
    let x = fib.total();
    let mut out = Vec::new();
    for j in 0..n {
        for z in 0..x.len(n - 1) {
            if fib.solves(p, x.degeneracy(n - 1, j, z)) {
                out.push((z, j));
            }
        }
    }
    out
}

/// The degenerate filler of `p`, if there is one. Degenerate fillers are
/// unique, so the first one found is returned.
pub fn degenerate_filler(fib: &Fibration, p: &LiftingProblem) -> Option<usize> {
    let n = p.spec().n();
    find_degenerate_solutions(fib, p)
        .first()
        .map(|&(z, j)| fib.total().degeneracy(n - 1, j, z))
}

/// Prefer the degenerate filler when one exists, else defer to `base`.
pub struct DegeneratePreferring<'a, L: ?Sized> {
    fib: &'a Fibration,
    base: &'a L,
}

impl<L: LiftingStructure + ?Sized> LiftingStructure for DegeneratePreferring<'_, L> {
    fn lift(&self, p: &LiftingProblem) -> Result<usize, KanError> {
        match degenerate_filler(self.fib, p) {
            Some(h) => Ok(h),
            None => self.base.lift(p),
        }
    }
}

pub fn degenerate_preferring_assignment<'a, L: LiftingStructure + ?Sized>(
    fib: &'a Fibration,
    base: &'a L,
) -> DegeneratePreferring<'a, L> {
    DegeneratePreferring { fib, base }
}

/// Some filler for every problem, chosen as the first by index. Used as a
/// generic source of assignments on instances without Malcev structure.
pub struct FirstFiller<'a> {
    pub fib: &'a Fibration,
}

impl LiftingStructure for FirstFiller<'_> {
    fn lift(&self, p: &LiftingProblem) -> Result<usize, KanError> {
        self.fib.fillers(p).first().copied().ok_or(KanError::NoFiller)
    }
}

/// A pair of lift assignments indexed by sign.
pub struct SignedLifts<'a> {
    pub plus: &'a dyn LiftingStructure,
    pub minus: &'a dyn LiftingStructure,
}

impl<'a> SignedLifts<'a> {
    /// `lift₊ = lift₋ = lifts`.
    pub fn duplicated(lifts: &'a dyn LiftingStructure) -> Self {
        SignedLifts {
            plus: lifts,
            minus: lifts,
        }
    }

    pub fn lift(&self, sign: Sign, p: &LiftingProblem) -> Result<usize, KanError> {
        if !sign.allowed_on(p.spec()) {
            return Err(KanError::SignViolation { spec: p.spec(), sign });
        }
        match sign {
            Sign::Plus => self.plus.lift(p),
            Sign::Minus => self.minus.lift(p),
        }
    }
}

/// The missing faces `m*` of the horns obtained by pulling `Λ^n_m` back
/// along `s_j : [n+1] -> [n]`, each with the index `j*` satisfying
/// `s_j ∘ d_{m*} = d_m ∘ s_{j*}` when `j ≠ m`.
pub fn horn_pullback_indices(n: usize, m: usize, j: usize) -> Result<Vec<(usize, Option<usize>)>, KanError> {
    HornSpec::new(n, m)?;
    if j > n {
        return Err(DeltaError::IndexOutOfRange {
            generator: "s",
            n,
            index: j,
        }
        .into());
    }
    Ok(if m < j {
        vec![(m, Some(j - 1))]
    } else if m == j {
        vec![(m, None), (m + 1, None)]
    } else {
        vec![(m + 1, Some(j))]
    })
}

fn check_pullback_index(spec: HornSpec, j: usize, m_star: usize) -> Result<(), KanError> {
    let admissible = horn_pullback_indices(spec.n(), spec.m(), j)?;
    if !admissible.iter().any(|&(ms, _)| ms == m_star) {
        return Err(KanError::InadmissiblePullback { spec, j, m_star });
    }
    Ok(())
}

/// `s_j^*(x) : Λ^{n+1}_{m*} -> X` from its face values: `x ∘ s_j ∘ d_k`
/// away from `{j, j+1, m*}` and the filler on `{j, j+1} \ {m*}`.
pub fn pullback_horn_map(
    fib: &Fibration,
    p: &LiftingProblem,
    filler: usize,
    j: usize,
    m_star: usize,
) -> Result<HornMap, KanError> {
    let spec = p.spec();
    let n = spec.n();
    fib.require_level(n + 1)?;
    check_pullback_index(spec, j, m_star)?;
    let x = fib.total();
    let s_j = degeneracy_map(n, j)?;
    let mut facets = Vec::with_capacity(n + 1);
    for k in (0..=n + 1).filter(|&k| k != m_star) {
        if k == j || k == j + 1 {
            facets.push(filler);
        } else {
            let f = compose(&s_j, &face_map(n, k)?)?;
            let value = p
                .horn()
                .evaluate(x, &f)?
                .expect("s_j ∘ d_k lies in the horn for k outside {j, j+1, m*}");
            facets.push(value);
        }
    }
    HornMap::new(x, HornSpec::new(n + 1, m_star)?, facets)
}

/// `lift ∘ s_j ∘ ι*`: the same horn read off the degenerate simplex
/// `filler ∘ s_j`.
pub fn storm_horn_map(
    fib: &Fibration,
    p: &LiftingProblem,
    filler: usize,
    j: usize,
    m_star: usize,
) -> Result<HornMap, KanError> {
    let spec = p.spec();
    let n = spec.n();
    fib.require_level(n + 1)?;
    check_pullback_index(spec, j, m_star)?;
    let x = fib.total();
    let degenerate = x.degeneracy(n, j, filler);
    let facets = (0..=n + 1)
        .filter(|&k| k != m_star)
        .map(|k| x.face(n + 1, k, degenerate))
        .collect();
    HornMap::new(x, HornSpec::new(n + 1, m_star)?, facets)
}

/// The problem `(s_j^*(x), y ∘ s_j)`.
pub fn pullback_problem(
    fib: &Fibration,
    p: &LiftingProblem,
    horn: HornMap,
    j: usize,
) -> Result<LiftingProblem, KanError> {
    let n = p.spec().n();
    let base = fib.base().degeneracy(n, j, p.base());
    LiftingProblem::new(fib, horn.spec, horn.facets, base)
}
