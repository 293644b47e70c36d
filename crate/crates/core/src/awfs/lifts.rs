//! Lifts extended along horn pushout sequences and the square conditions
//! they are checked against.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{refinements, AwfsError, Generator, HornPushoutSequence, SequenceSquare, SquareKind, Step};
use crate::delta::{all_epis, degeneracy_map, face_map, factorize, MonotoneMap};
use crate::kan::{CheckReport, Fibration, LiftingProblem, LiftingStructure, Sign, SignedLifts};
use crate::salg::{SimplicialMap, SimplicialSet};
use crate::sieve::{all_sieves, horn_attachments, mask_to_vertices, pullback_sieve, HornSpec, Sieve};

fn dim(mask: u64) -> usize {
    mask.count_ones() as usize - 1
}

/// A map from a sieve of `Δ^a` into a simplicial set, tabulated on the
/// non-degenerate simplices of the sieve.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SieveMap {
    sieve: Sieve,
    values: BTreeMap<u64, usize>,
}

impl SieveMap {
    /// Checks that every member has a value and that values commute with faces.
    pub fn new(x: &SimplicialSet, sieve: Sieve, values: BTreeMap<u64, usize>) -> Result<Self, AwfsError> {
        if !values.keys().copied().eq(sieve.members()) {
            return Err(AwfsError::Incompatible("values must cover exactly the sieve's simplices".into()));
        }
        for (&s, &value) in &values {
            let d = dim(s);
            x.check_level(d)?;
            if value >= x.len(d) {
                return Err(AwfsError::Incompatible(format!("no element {value} at level {d}")));
            }
            for (i, v) in mask_to_vertices(s).into_iter().enumerate() {
                if d > 0 && x.face(d, i, value) != values[&(s & !(1 << v))] {
                    return Err(AwfsError::Incompatible(format!(
                        "face {i} of the value on {:?}",
                        mask_to_vertices(s)
                    )));
                }
            }
        }
        Ok(SieveMap { sieve, values })
    }

    /// The map `Δ^a -> X` classified by `z ∈ X_a`.
    pub fn of_simplex(x: &SimplicialSet, ambient: usize, z: usize) -> Result<Self, AwfsError> {
        let sieve = Sieve::full(ambient)?;
        let values = sieve
            .members()
            .map(|s| Ok((s, x.act(z, &MonotoneMap::inclusion(s, ambient))?)))
            .collect::<Result<_, AwfsError>>()?;
        Ok(SieveMap { sieve, values })
    }

    pub fn sieve(&self) -> &Sieve {
        &self.sieve
    }

    pub fn get(&self, simplex: u64) -> Option<usize> {
        self.values.get(&simplex).copied()
    }

    pub fn values(&self) -> &BTreeMap<u64, usize> {
        &self.values
    }

    pub fn restrict(&self, sub: &Sieve) -> Result<Self, AwfsError> {
        if !sub.is_subsieve_of(&self.sieve) {
            return Err(AwfsError::Precondition("restriction to a sieve that is not contained".into()));
        }
        Ok(SieveMap {
            sieve: sub.clone(),
            values: sub.members().map(|s| (s, self.values[&s])).collect(),
        })
    }

    /// Precompose with `f : [a] -> [b]`, giving a map on `f^*` of the sieve.
    pub fn pullback(&self, x: &SimplicialSet, f: &MonotoneMap) -> Result<Self, AwfsError> {
        let sieve = pullback_sieve(f, &self.sieve)?;
        let values = sieve
            .members()
            .map(|s| Ok((s, x.act(self.values[&f.image_of(s)], &f.restrict(s))?)))
            .collect::<Result<_, AwfsError>>()?;
        Ok(SieveMap { sieve, values })
    }

    /// Postcompose with a simplicial map.
    pub fn push_forward(&self, alpha: &SimplicialMap) -> Self {
        SieveMap {
            sieve: self.sieve.clone(),
            values: self.values.iter().map(|(&s, &v)| (s, alpha.apply(dim(s), v))).collect(),
        }
    }

    pub fn encode(&self, x: &SimplicialSet) -> Value {
        Value::Array(
            self.values
                .iter()
                .map(|(&s, &v)| json!([mask_to_vertices(s), x.name(dim(s), v)]))
                .collect(),
        )
    }

    /// Every map from `sieve` into `x`, or every one lying over `over` when
    /// given. Refuses to produce more than `cap` maps.
    pub fn enumerate(
        x: &SimplicialSet,
        sieve: &Sieve,
        over: Option<(&SimplicialMap, &SieveMap)>,
        cap: usize,
    ) -> Result<Vec<SieveMap>, AwfsError> {
        let order = sieve.members_by_dimension();
        if let Some(&top) = order.last() {
            x.check_level(dim(top))?;
        }
        if let Some((_, base)) = over {
            if base.sieve != *sieve {
                return Err(AwfsError::Precondition("the base map lives on a different sieve".into()));
            }
        }
        struct Search<'a> {
            x: &'a SimplicialSet,
            order: &'a [u64],
            over: Option<(&'a SimplicialMap, &'a SieveMap)>,
            cap: usize,
            out: Vec<SieveMap>,
        }
        impl Search<'_> {
            fn go(&mut self, idx: usize, values: &mut BTreeMap<u64, usize>, sieve: &Sieve) -> Result<(), AwfsError> {
                if idx == self.order.len() {
                    if self.out.len() == self.cap {
                        return Err(AwfsError::CapExceeded { cap: self.cap });
                    }
                    self.out.push(SieveMap {
                        sieve: sieve.clone(),
                        values: values.clone(),
                    });
                    return Ok(());
                }
                let s = self.order[idx];
                let d = dim(s);
                let faces: Vec<usize> = if d == 0 {
                    Vec::new()
                } else {
                    mask_to_vertices(s).into_iter().map(|v| values[&(s & !(1 << v))]).collect()
                };
                for z in 0..self.x.len(d) {
                    if faces.iter().enumerate().any(|(i, &f)| self.x.face(d, i, z) != f) {
                        continue;
                    }
                    if let Some((alpha, base)) = self.over {
                        if alpha.apply(d, z) != base.values[&s] {
                            continue;
                        }
                    }
                    values.insert(s, z);
                    self.go(idx + 1, values, sieve)?;
                    values.remove(&s);
                }
                Ok(())
            }
        }
        let mut search = Search {
            x,
            order: &order,
            over,
            cap,
            out: Vec::new(),
        };
        search.go(0, &mut BTreeMap::new(), sieve)?;
        Ok(search.out)
    }
}

/// The lifts used when extending along a sequence: one assignment for plain
/// horns, or one per sign.
#[derive(Clone, Copy)]
pub enum Lifts<'a> {
    Plain(&'a dyn LiftingStructure),
    Signed {
        plus: &'a dyn LiftingStructure,
        minus: &'a dyn LiftingStructure,
    },
}

impl<'a> Lifts<'a> {
    pub fn signed(lifts: &SignedLifts<'a>) -> Self {
        Lifts::Signed {
            plus: lifts.plus,
            minus: lifts.minus,
        }
    }

    fn lift(&self, generator: Generator, p: &LiftingProblem) -> Result<usize, AwfsError> {
        match (self, generator.sign()) {
            (Lifts::Plain(l), _) => Ok(l.lift(p)?),
            (Lifts::Signed { plus, .. }, Some(Sign::Plus)) => Ok(plus.lift(p)?),
            (Lifts::Signed { minus, .. }, Some(Sign::Minus)) => Ok(minus.lift(p)?),
            (Lifts::Signed { .. }, None) => Err(AwfsError::MissingSign(generator.spec())),
        }
    }
}

/// Extend `u : S_0 -> X` over `v : S_k -> Y` along the sequence: at each
/// step the embedded horn is filled by the chosen lift and the filler is
/// glued in together with its missing face.
pub fn extend_lift(
    fib: &Fibration,
    lifts: Lifts<'_>,
    seq: &HornPushoutSequence,
    u: &SieveMap,
    v: &SieveMap,
) -> Result<SieveMap, AwfsError> {
    if u.sieve != *seq.start() {
        return Err(AwfsError::Precondition("u is not defined on the start of the sequence".into()));
    }
    if v.sieve != *seq.end() {
        return Err(AwfsError::Precondition("v is not defined on the end of the sequence".into()));
    }
    for (&s, &value) in &u.values {
        if fib.alpha(dim(s), value) != v.values[&s] {
            return Err(AwfsError::Incompatible(format!(
                "u and v disagree on {:?}",
                mask_to_vertices(s)
            )));
        }
    }
    let x = fib.total();
    let mut values = u.values.clone();
    for Step { generator, embedding } in seq.steps() {
        let spec = generator.spec();
        let (n, m) = (spec.n(), spec.m());
        fib.require_level(n)?;
        let top = embedding.image();
        let facets = (0..=n)
            .filter(|&k| k != m)
            .map(|k| values[&(top & !(1 << embedding.apply(k)))])
            .collect();
        let p = LiftingProblem::new(fib, spec, facets, v.values[&top])?;
        let h = lifts.lift(*generator, &p)?;
        if !fib.solves(&p, h) {
            return Err(AwfsError::NotAFiller(p.describe(fib)));
        }
        values.insert(top, h);
        values.insert(top & !(1 << embedding.apply(m)), x.face(n, m, h));
    }
    Ok(SieveMap {
        sieve: seq.end().clone(),
        values,
    })
}

fn extension_or_failure(
    fib: &Fibration,
    lifts: Lifts<'_>,
    seq: &HornPushoutSequence,
    u: &SieveMap,
    v: &SieveMap,
) -> Result<Result<SieveMap, String>, AwfsError> {
    match extend_lift(fib, lifts, seq, u, v) {
        Ok(w) => Ok(Ok(w)),
        Err(AwfsError::NotAFiller(problem)) => Ok(Err(problem)),
        Err(e) => Err(e),
    }
}

/// For every `(u, v)` on the target of the square, extending the pulled-back
/// data along the source agrees with pulling back the extension along the
/// target.
pub fn check_respects_square(
    fib: &Fibration,
    lifts: Lifts<'_>,
    sq: &SequenceSquare,
    cap: usize,
) -> Result<CheckReport, AwfsError> {
    let (x, y) = (fib.total(), fib.base());
    let (f, source, target) = (sq.f(), sq.source(), sq.target());
    let mut instances = 0;
    let mut failures = Vec::new();
    for v in SieveMap::enumerate(y, target.end(), None, cap)? {
        let v0 = v.restrict(target.start())?;
        for u in SieveMap::enumerate(x, target.start(), Some((fib.projection(), &v0)), cap)? {
            instances += 1;
            if instances > cap {
                return Err(AwfsError::CapExceeded { cap });
            }
            let record = |detail: Value| {
                json!({
                    "square": sq.to_value(),
                    "u": u.encode(x),
                    "v": v.encode(y),
                    "detail": detail,
                })
            };
            let expected = match extension_or_failure(fib, lifts, target, &u, &v)? {
                Ok(w) => w.pullback(x, f)?,
                Err(problem) => {
                    failures.push(record(json!({ "not_a_filler": problem })));
                    continue;
                }
            };
            let found = match extension_or_failure(fib, lifts, source, &u.pullback(x, f)?, &v.pullback(y, f)?)? {
                Ok(w) => w,
                Err(problem) => {
                    failures.push(record(json!({ "not_a_filler": problem })));
                    continue;
                }
            };
            let differing: Vec<Value> = expected
                .values
                .iter()
                .filter(|(s, e)| found.values[s] != **e)
                .map(|(&s, &e)| {
                    json!({
                        "simplex": mask_to_vertices(s),
                        "expected": x.name(dim(s), e),
                        "found": x.name(dim(s), found.values[&s]),
                    })
                })
                .collect();
            if !differing.is_empty() {
                failures.push(record(Value::Array(differing)));
            }
        }
    }
    Ok(CheckReport::new("square", instances, failures))
}

/// Run [`check_respects_square`] over many squares and merge the reports.
pub fn sweep_squares(
    checker: &str,
    fib: &Fibration,
    lifts: Lifts<'_>,
    squares: &[SequenceSquare],
    cap: usize,
) -> Result<CheckReport, AwfsError> {
    let reports = squares
        .par_iter()
        .map(|sq| check_respects_square(fib, lifts, sq, cap))
        .collect::<Result<Vec<_>, _>>()?;
    let instances = reports.iter().map(|r| r.instances).sum();
    let failures = reports.into_iter().flat_map(|r| r.failures).collect();
    Ok(CheckReport::new(checker, instances, failures))
}

/// Position of each vertex of `inner` inside `outer`, as a mask on `[dim outer]`.
fn relative_mask(inner: u64, outer: u64) -> u64 {
    mask_to_vertices(outer)
        .iter()
        .enumerate()
        .filter(|(_, &v)| inner >> v & 1 == 1)
        .fold(0, |acc, (i, _)| acc | 1 << i)
}

/// Restriction of the simplex `z` on `outer` to the face `inner`.
fn restrict_simplex(x: &SimplicialSet, z: usize, inner: u64, outer: u64) -> Result<usize, AwfsError> {
    let f = MonotoneMap::inclusion(relative_mask(inner, outer), dim(outer));
    Ok(x.act(z, &f)?)
}

fn maximal_members(sieve: &Sieve) -> Vec<u64> {
    let members: Vec<u64> = sieve.members().collect();
    members
        .iter()
        .copied()
        .filter(|&s| !members.iter().any(|&t| t != s && t & s == s))
        .collect()
}

/// Compatible families on the maximal members of `sieve`: one simplex per
/// maximal member, agreeing on pairwise intersections, and satisfying
/// `accept` member by member. A map out of a union of simplices is exactly
/// such a family, so this counts maps without building them face by face.
fn maximal_families(
    x: &SimplicialSet,
    sieve: &Sieve,
    accept: &dyn Fn(u64, usize) -> Result<bool, AwfsError>,
) -> Result<Vec<Vec<(u64, usize)>>, AwfsError> {
    fn go(
        x: &SimplicialSet,
        tops: &[u64],
        accept: &dyn Fn(u64, usize) -> Result<bool, AwfsError>,
        chosen: &mut Vec<(u64, usize)>,
        out: &mut Vec<Vec<(u64, usize)>>,
    ) -> Result<(), AwfsError> {
        let Some((&top, rest)) = tops.split_first() else {
            out.push(chosen.clone());
            return Ok(());
        };
        'candidates: for z in 0..x.len(dim(top)) {
            if !accept(top, z)? {
                continue;
            }
            for &(other, w) in chosen.iter() {
                let meet = top & other;
                if meet != 0 && restrict_simplex(x, z, meet, top)? != restrict_simplex(x, w, meet, other)? {
                    continue 'candidates;
                }
            }
            chosen.push((top, z));
            go(x, rest, accept, chosen, out)?;
            chosen.pop();
        }
        Ok(())
    }
    let tops = maximal_members(sieve);
    if let Some(&deepest) = tops.iter().max_by_key(|&&t| dim(t)) {
        x.check_level(dim(deepest))?;
    }
    let mut out = Vec::new();
    go(x, &tops, accept, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// The number of `(u, v)` pairs [`sweep_squares`] visits on `squares`,
/// computed from compatible families on maximal members rather than by
/// enumerating sieve maps.
pub fn expected_square_instances(fib: &Fibration, squares: &[SequenceSquare]) -> Result<usize, AwfsError> {
    let (x, y) = (fib.total(), fib.base());
    let mut total = 0;
    for sq in squares {
        let (start, end) = (sq.target().start(), sq.target().end());
        for v in maximal_families(y, end, &|_, _| Ok(true))? {
            // v on a member of the start sieve, read off any maximal member
            // of the end sieve containing it
            let v_at = |s: u64| -> Result<usize, AwfsError> {
                let &(top, z) = v.iter().find(|(t, _)| t & s == s).expect("start lies in end");
                restrict_simplex(y, z, s, top)
            };
            let accept = |s: u64, z: usize| Ok(fib.projection().apply(dim(s), z) == v_at(s)?);
            total += maximal_families(x, start, &accept)?.len();
        }
    }
    Ok(total)
}

/// Every sequence of length `1..=max_len` on `Δ^ambient`, starting anywhere.
/// Signed sequences carry every allowed sign on every step.
fn sequences(ambient: usize, max_len: usize, max_n: usize, signed: bool) -> Vec<HornPushoutSequence> {
    fn go(
        seq: &HornPushoutSequence,
        max_len: usize,
        max_n: usize,
        signed: bool,
        out: &mut Vec<HornPushoutSequence>,
    ) {
        if seq.len() == max_len {
            return;
        }
        for (spec, embedding) in horn_attachments(seq.end()) {
            if spec.n() > max_n {
                continue;
            }
            let signs: Vec<Option<Sign>> = if signed {
                Sign::BOTH.into_iter().filter(|s| s.allowed_on(spec)).map(Some).collect()
            } else {
                vec![None]
            };
            for sign in signs {
                let step = Step {
                    generator: Generator::new(spec, sign).expect("sign filtered"),
                    embedding: embedding.clone(),
                };
                let next = HornPushoutSequence::new(seq.end().clone(), vec![step])
                    .and_then(|s| seq.then(&s))
                    .expect("listed attachments are valid");
                out.push(next.clone());
                go(&next, max_len, max_n, signed, out);
            }
        }
    }
    let mut out = Vec::new();
    for start in all_sieves(ambient) {
        go(&HornPushoutSequence::identity(start), max_len, max_n, signed, &mut out);
    }
    out
}

/// Every square over `f` with the given target. Each source step carries the
/// sign of the target step it lies over; sources where that sign is not
/// allowed are skipped.
pub fn pullback_squares(
    f: &MonotoneMap,
    target: &HornPushoutSequence,
    cap: usize,
) -> Result<Vec<SequenceSquare>, AwfsError> {
    let forced = target
        .sieves()
        .iter()
        .map(|t| pullback_sieve(f, t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut partial: Vec<Vec<Step>> = vec![Vec::new()];
    for (i, pair) in forced.windows(2).enumerate() {
        let sign = target.steps()[i].generator.sign();
        let mut next = Vec::new();
        for refinement in refinements(&pair[0], &pair[1], cap) {
            let steps: Option<Vec<Step>> = refinement
                .into_iter()
                .map(|(spec, embedding)| {
                    Generator::new(spec, sign).ok().map(|generator| Step { generator, embedding })
                })
                .collect();
            let Some(steps) = steps else { continue };
            for prefix in &partial {
                let mut joined = prefix.clone();
                joined.extend(steps.iter().cloned());
                next.push(joined);
            }
        }
        partial = next;
        if partial.len() > cap {
            return Err(AwfsError::CapExceeded { cap });
        }
    }
    partial
        .into_iter()
        .map(|steps| {
            let source = HornPushoutSequence::new(forced[0].clone(), steps)?;
            SequenceSquare::pullback(f.clone(), source, target.clone())
        })
        .collect()
}

/// Face squares whose target has length `1..=max_len` and lives on `Δ^b`
/// for `1 <= b <= max_ambient`.
pub fn face_squares(max_ambient: usize, max_len: usize, signed: bool, cap: usize) -> Result<Vec<SequenceSquare>, AwfsError> {
    let mut out = Vec::new();
    for b in 1..=max_ambient {
        for target in sequences(b, max_len, b, signed) {
            for i in 0..=b {
                out.extend(pullback_squares(&face_map(b - 1, i)?, &target, cap)?);
            }
        }
    }
    Ok(out)
}

/// Degeneracy squares `s_j : [b+1] -> [b]` with a length-1 target on `Δ^b`,
/// `1 <= b <= max_ambient`, attaching horns of dimension at most `max_n`.
pub fn degeneracy_squares(
    max_ambient: usize,
    max_n: usize,
    signed: bool,
    cap: usize,
) -> Result<Vec<SequenceSquare>, AwfsError> {
    let mut out = Vec::new();
    for b in 1..=max_ambient {
        for target in sequences(b, 1, max_n, signed) {
            for j in 0..=b {
                out.extend(pullback_squares(&degeneracy_map(b, j)?, &target, cap)?);
            }
        }
    }
    Ok(out)
}

/// The shape of the source of a degeneracy square over a single horn step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IotaStar {
    /// Position of the degenerate vertex inside the embedded simplex.
    pub j_prime: usize,
    pub length: usize,
    pub m_star: usize,
    /// The generator of the last source step.
    pub generator: Generator,
    /// The sign of the target step, which the last source step should carry.
    pub designated_sign: Option<Sign>,
}

impl IotaStar {
    pub fn respects_sign(&self) -> bool {
        self.generator.sign() == self.designated_sign
    }
}

/// Read off `ι*` from a degeneracy square whose target is one horn step and
/// whose degenerate index lies in the embedded simplex, checking the source
/// has the predicted shape.
pub fn iota_star(sq: &SequenceSquare) -> Result<IotaStar, AwfsError> {
    if sq.kind() != SquareKind::Degeneracy {
        return Err(AwfsError::Precondition("not a degeneracy square".into()));
    }
    if sq.target().len() != 1 {
        return Err(AwfsError::Precondition("the target must have length 1".into()));
    }
    let j = factorize(sq.f()).degeneracy_indices[0];
    let step = &sq.target().steps()[0];
    let spec = step.generator.spec();
    let (n, m) = (spec.n(), spec.m());
    let image = step.embedding.image();
    if image >> j & 1 == 0 {
        return Err(AwfsError::Precondition(format!("s_{j} misses the embedded simplex")));
    }
    let j_prime = (image & ((1 << j) - 1)).count_ones() as usize;
    let lifted = sq.f().values().iter().enumerate().fold(0u64, |acc, (v, &w)| {
        if image >> w & 1 == 1 {
            acc | 1 << v
        } else {
            acc
        }
    });
    let vertices = mask_to_vertices(lifted);
    let face_a = lifted & !(1 << vertices[j_prime]);
    let face_b = lifted & !(1 << vertices[j_prime + 1]);
    let source = sq.source().steps();
    let shape = |msg: &str| AwfsError::UnexpectedShape(msg.to_string());
    let face_step_ok = |s: &Step, face: u64| s.embedding.image() == face && s.generator.spec() == spec;
    let m_star = if j_prime == m {
        if source.len() != 2 {
            return Err(shape("expected two steps"));
        }
        if face_step_ok(&source[0], face_a) {
            j_prime + 1
        } else if face_step_ok(&source[0], face_b) {
            j_prime
        } else {
            return Err(shape("the first step must attach face j' or j'+1"));
        }
    } else {
        if source.len() != 3 {
            return Err(shape("expected three steps"));
        }
        let in_order = face_step_ok(&source[0], face_a) && face_step_ok(&source[1], face_b);
        let swapped = face_step_ok(&source[0], face_b) && face_step_ok(&source[1], face_a);
        if !(in_order || swapped) {
            return Err(shape("the first two steps must attach faces j' and j'+1"));
        }
        if m < j_prime {
            m
        } else {
            m + 1
        }
    };
    let last = source.last().expect("source is nonempty");
    if last.embedding.image() != lifted || last.generator.spec() != HornSpec::new(n + 1, m_star)? {
        return Err(shape("the last step must fill the degenerate simplex with the predicted horn"));
    }
    Ok(IotaStar {
        j_prime,
        length: source.len(),
        m_star,
        generator: last.generator,
        designated_sign: step.generator.sign(),
    })
}

/// The square `z ∘ s ∘ ι` over `y ∘ s`: the lift must be `z ∘ s`.
pub fn check_d_square(
    fib: &Fibration,
    lifts: &dyn LiftingStructure,
    s: &MonotoneMap,
    spec: HornSpec,
    z: usize,
    y: usize,
) -> Result<CheckReport, AwfsError> {
    if !s.is_epi() || s.is_identity() {
        return Err(AwfsError::Precondition("s must be a non-identity epi".into()));
    }
    if s.dom() != spec.n() {
        return Err(AwfsError::Precondition(format!("s must start at [{}]", spec.n())));
    }
    fib.require_level(spec.n())?;
    let b = s.cod();
    if z >= fib.total().len(b) || y >= fib.base().len(b) {
        return Err(AwfsError::Incompatible(format!("no such simplex at level {b}")));
    }
    if fib.alpha(b, z) != y {
        return Err(AwfsError::Incompatible("the rectangle does not commute".into()));
    }
    Ok(match d_square_failure(fib, lifts, s, spec, z)? {
        Some(failure) => CheckReport::new("dsquare", 1, vec![failure]),
        None => CheckReport::new("dsquare", 1, Vec::new()),
    })
}

fn d_square_failure(
    fib: &Fibration,
    lifts: &dyn LiftingStructure,
    s: &MonotoneMap,
    spec: HornSpec,
    z: usize,
) -> Result<Option<Value>, AwfsError> {
    let x = fib.total();
    let h = x.act(z, s)?;
    let p = LiftingProblem::restriction(fib, spec, h)?;
    let found = lifts.lift(&p)?;
    Ok((found != h).then(|| {
        json!({
            "problem": p.encode(fib),
            "s": s.values(),
            "z": x.name(s.cod(), z),
            "expected": x.name(spec.n(), h),
            "found": x.name(spec.n(), found),
        })
    }))
}

/// Every 𝔻-square with horn dimension `1..=maxdim`.
pub fn check_d_squares(fib: &Fibration, lifts: &dyn LiftingStructure, maxdim: usize) -> Result<CheckReport, AwfsError> {
    fib.require_level(maxdim)?;
    let mut cases = Vec::new();
    for n in 1..=maxdim {
        for b in 0..n {
            for s in all_epis(n, b) {
                for spec in HornSpec::all(n) {
                    cases.push((s.clone(), spec));
                }
            }
        }
    }
    let results = cases
        .par_iter()
        .map(|(s, spec)| {
            let mut failures = Vec::new();
            let count = fib.total().len(s.cod());
            for z in 0..count {
                failures.extend(d_square_failure(fib, lifts, s, *spec, z)?);
            }
            Ok((count, failures))
        })
        .collect::<Result<Vec<_>, AwfsError>>()?;
    let instances = results.iter().map(|(c, _)| c).sum();
    let failures = results.into_iter().flat_map(|(_, f)| f).collect();
    Ok(CheckReport::new("dsquares", instances, failures))
}

/// One 𝔻-square per non-identity epi `[n] -> [b]`, horn on `Δ^n` and
/// `b`-simplex: `Σ C(n, b) · (n + 1) · |X_b|`.
pub fn expected_d_square_instances(fib: &Fibration, maxdim: usize) -> usize {
    let binomial = |n: usize, k: usize| (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
    (1..=maxdim)
        .map(|n| (0..n).map(|b| binomial(n, b) * (n + 1) * fib.total().len(b)).sum::<usize>())
        .sum()
}

/// Lifts for a composite `X -> Y -> Z`: first lift the image problem in
/// `Y -> Z`, then lift against that in `X -> Y`.
pub struct ComposedLifts<'a> {
    upper: &'a Fibration,
    upper_lifts: &'a dyn LiftingStructure,
    lower: &'a Fibration,
    lower_lifts: &'a dyn LiftingStructure,
    composite: Fibration,
}

impl<'a> ComposedLifts<'a> {
    pub fn new(
        upper: &'a Fibration,
        upper_lifts: &'a dyn LiftingStructure,
        lower: &'a Fibration,
        lower_lifts: &'a dyn LiftingStructure,
    ) -> Result<Self, AwfsError> {
        if upper.base() != lower.total() {
            return Err(AwfsError::Mismatch("the upper base is not the lower total space".into()));
        }
        let composite = Fibration::new(
            upper.total().clone(),
            lower.base().clone(),
            upper.projection().then(lower.projection()),
        )?;
        Ok(ComposedLifts {
            upper,
            upper_lifts,
            lower,
            lower_lifts,
            composite,
        })
    }

    pub fn composite(&self) -> &Fibration {
        &self.composite
    }
}

impl LiftingStructure for ComposedLifts<'_> {
    fn lift(&self, p: &LiftingProblem) -> Result<usize, crate::kan::KanError> {
        let spec = p.spec();
        let n = spec.n();
        let facets = p.horn().facets().to_vec();
        let image = facets.iter().map(|&x| self.upper.alpha(n - 1, x)).collect();
        let lower = LiftingProblem::new(self.lower, spec, image, p.base())?;
        let middle = self.lower_lifts.lift(&lower)?;
        let upper = LiftingProblem::new(self.upper, spec, facets, middle)?;
        self.upper_lifts.lift(&upper)
    }
}
