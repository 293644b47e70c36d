//! Horn pushout sequences, pullback squares between them, and lifts extended
//! along sequences by pushout.
//!
//! A sequence glues horn-shaped pieces onto a sieve of `Δ^a` one at a time.
//! A square over `f : [a] -> [b]` relates a sequence on `Δ^a` to one on
//! `Δ^b` whose sieves pull back along `f` to sieves of the first.

mod decompose;
mod lifts;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::delta::{compose, factorize, DeltaError, MonotoneMap};
use crate::kan::{KanError, Sign};
use crate::salg::SalgError;
use crate::sieve::{attach_horn, horn_attachments, pullback_sieve, HornSpec, Sieve, SieveError};

pub use decompose::{
    decompose_horizontal, decompose_horizontal_with, minimal_words, probe_decomposability, recompose, Decomposition,
    ProbeReport, WordChoice,
};
pub use lifts::{
    check_d_square, check_d_squares, check_respects_square, degeneracy_squares, expected_d_square_instances, expected_square_instances, extend_lift,
    face_squares,
    iota_star, pullback_squares, sweep_squares, ComposedLifts, IotaStar, Lifts, SieveMap,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AwfsError {
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error(transparent)]
    Kan(#[from] KanError),
    #[error(transparent)]
    Salg(#[from] SalgError),
    #[error("sign {sign} is not allowed on {spec}")]
    SignViolation { spec: HornSpec, sign: Sign },
    #[error("step {index}: {reason}")]
    InvalidStep { index: usize, reason: String },
    #[error("invalid reindexing: {0}")]
    InvalidReindex(String),
    #[error("sieve {index} of the target does not pull back to the matching source sieve")]
    NotPullback { index: usize },
    #[error("squares do not compose: {0}")]
    Mismatch(String),
    #[error("signed lifts need a sign on every step ({0})")]
    MissingSign(HornSpec),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unexpected sequence shape: {0}")]
    UnexpectedShape(String),
    #[error("incompatible maps: {0}")]
    Incompatible(String),
    #[error("the lift of {0} is not a filler")]
    NotAFiller(String),
    #[error("more than {cap} instances; raise the cap to continue")]
    CapExceeded { cap: usize },
}

/// A generating left map: a horn inclusion, optionally signed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator {
    spec: HornSpec,
    sign: Option<Sign>,
}

impl Generator {
    pub fn new(spec: HornSpec, sign: Option<Sign>) -> Result<Self, AwfsError> {
        if let Some(sign) = sign {
            if !sign.allowed_on(spec) {
                return Err(AwfsError::SignViolation { spec, sign });
            }
        }
        Ok(Generator { spec, sign })
    }

    pub fn plain(spec: HornSpec) -> Self {
        Generator { spec, sign: None }
    }

    pub fn spec(&self) -> HornSpec {
        self.spec
    }

    pub fn sign(&self) -> Option<Sign> {
        self.sign
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Some(sign) => write!(f, "{}{}", self.spec, sign),
            None => write!(f, "{}", self.spec),
        }
    }
}

/// One pushout step: glue `Δ^n` along `Λ^n_m`, embedded by a mono `[n] -> [a]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub generator: Generator,
    pub embedding: MonotoneMap,
}

impl Step {
    /// The two simplices the step adds: the embedded top simplex and its
    /// missing face.
    pub fn added(&self) -> (u64, u64) {
        let top = self.embedding.image();
        (top, top & !(1 << self.embedding.apply(self.generator.spec.m())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HornPushoutSequence {
    ambient: usize,
    steps: Vec<Step>,
    sieves: Vec<Sieve>,
}

impl HornPushoutSequence {
    /// Checks every step's pullback condition and the count law.
    pub fn new(start: Sieve, steps: Vec<Step>) -> Result<Self, AwfsError> {
        let ambient = start.ambient();
        let mut sieves = Vec::with_capacity(steps.len() + 1);
        sieves.push(start);
        for (index, step) in steps.iter().enumerate() {
            let current = sieves.last().expect("start is present");
            let next = attach_horn(current, step.generator.spec, &step.embedding).map_err(|e| {
                AwfsError::InvalidStep {
                    index,
                    reason: e.to_string(),
                }
            })?;
            if next.nondegenerate_count() != current.nondegenerate_count() + 2 {
                return Err(AwfsError::InvalidStep {
                    index,
                    reason: "the step does not add exactly two simplices".into(),
                });
            }
            sieves.push(next);
        }
        Ok(HornPushoutSequence { ambient, steps, sieves })
    }

    pub fn identity(start: Sieve) -> Self {
        HornPushoutSequence {
            ambient: start.ambient(),
            steps: Vec::new(),
            sieves: vec![start],
        }
    }

    /// Rebuild a sequence from its chain of sieves. Each consecutive pair must
    /// differ by one horn attachment; `sign` chooses the sign of each step.
    pub fn from_sieve_chain(
        chain: Vec<Sieve>,
        mut sign: impl FnMut(usize, HornSpec) -> Option<Sign>,
    ) -> Result<Self, AwfsError> {
        let mut chain = chain.into_iter();
        let start = chain
            .next()
            .ok_or_else(|| AwfsError::UnexpectedShape("empty chain".into()))?;
        let mut steps = Vec::new();
        let mut current = start.clone();
        for (index, next) in chain.enumerate() {
            let (spec, embedding) = infer_step(&current, &next).ok_or_else(|| AwfsError::InvalidStep {
                index,
                reason: "consecutive sieves are not related by a horn attachment".into(),
            })?;
            steps.push(Step {
                generator: Generator::new(spec, sign(index, spec))?,
                embedding,
            });
            current = next;
        }
        HornPushoutSequence::new(start, steps)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn start(&self) -> &Sieve {
        &self.sieves[0]
    }

    pub fn end(&self) -> &Sieve {
        self.sieves.last().expect("start is present")
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `S_i`, the sieve after `i` steps.
    pub fn sieve(&self, i: usize) -> &Sieve {
        &self.sieves[i]
    }

    pub fn sieves(&self) -> &[Sieve] {
        &self.sieves
    }

    /// The composite of `self` followed by `next`.
    pub fn then(&self, next: &HornPushoutSequence) -> Result<Self, AwfsError> {
        if self.end() != next.start() {
            return Err(AwfsError::Mismatch("the first sequence does not end where the second starts".into()));
        }
        let mut steps = self.steps.clone();
        steps.extend(next.steps.iter().cloned());
        let mut sieves = self.sieves.clone();
        sieves.extend(next.sieves[1..].iter().cloned());
        Ok(HornPushoutSequence {
            ambient: self.ambient,
            steps,
            sieves,
        })
    }

    pub fn to_json(&self) -> SequenceJson {
        SequenceJson {
            ambient: self.ambient,
            start: self.start().clone(),
            steps: self
                .steps
                .iter()
                .map(|s| StepJson {
                    horn: [s.generator.spec.n(), s.generator.spec.m()],
                    sign: s.generator.sign,
                    embedding: s.embedding.values().to_vec(),
                })
                .collect(),
        }
    }
}

/// The horn attachment turning `from` into `to`, if there is one.
pub fn infer_step(from: &Sieve, to: &Sieve) -> Option<(HornSpec, MonotoneMap)> {
    if !from.is_subsieve_of(to) || to.nondegenerate_count() != from.nondegenerate_count() + 2 {
        return None;
    }
    horn_attachments(from)
        .into_iter()
        .find(|(spec, e)| attach_horn(from, *spec, e).as_ref() == Ok(to))
}

/// Every horn pushout sequence from `from` to `to`, as lists of attachments.
/// Stops after `cap` sequences.
pub fn refinements(from: &Sieve, to: &Sieve, cap: usize) -> Vec<Vec<(HornSpec, MonotoneMap)>> {
    fn go(
        current: &Sieve,
        to: &Sieve,
        path: &mut Vec<(HornSpec, MonotoneMap)>,
        out: &mut Vec<Vec<(HornSpec, MonotoneMap)>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        if current == to {
            out.push(path.clone());
            return;
        }
        for (spec, e) in horn_attachments(current) {
            if !to.contains(e.image()) {
                continue;
            }
            let next = attach_horn(current, spec, &e).expect("listed attachments are valid");
            path.push((spec, e));
            go(&next, to, path, out, cap);
            path.pop();
        }
    }
    let mut out = Vec::new();
    if from.is_subsieve_of(to) && (to.nondegenerate_count() - from.nondegenerate_count()) % 2 == 0 {
        go(from, to, &mut Vec::new(), &mut out, cap);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepJson {
    pub horn: [usize; 2],
    pub sign: Option<Sign>,
    pub embedding: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceJson {
    pub ambient: usize,
    pub start: Sieve,
    pub steps: Vec<StepJson>,
}

impl SequenceJson {
    pub fn to_sequence(&self) -> Result<HornPushoutSequence, AwfsError> {
        if self.start.ambient() != self.ambient {
            return Err(AwfsError::Mismatch("start sieve lives on a different simplex".into()));
        }
        let steps = self
            .steps
            .iter()
            .map(|s| {
                let spec = HornSpec::new(s.horn[0], s.horn[1])?;
                Ok(Step {
                    generator: Generator::new(spec, s.sign)?,
                    embedding: MonotoneMap::new(spec.n(), self.ambient, s.embedding.clone())?,
                })
            })
            .collect::<Result<Vec<_>, AwfsError>>()?;
        HornPushoutSequence::new(self.start.clone(), steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SquareKind {
    Face,
    Degeneracy,
    Composite,
}

/// A pullback square from a sequence on `Δ^a` (length `k`) to one on `Δ^b`
/// (length `l`) over `f : [a] -> [b]`, with `f^*(T_i) = S_{μ(i)}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequenceSquare {
    f: MonotoneMap,
    reindex: Vec<usize>,
    source: HornPushoutSequence,
    target: HornPushoutSequence,
}

impl SequenceSquare {
    pub fn new(
        f: MonotoneMap,
        reindex: Vec<usize>,
        source: HornPushoutSequence,
        target: HornPushoutSequence,
    ) -> Result<Self, AwfsError> {
        if f.dom() != source.ambient || f.cod() != target.ambient {
            return Err(AwfsError::Mismatch(format!(
                "map [{}] -> [{}] between sequences on Δ^{} and Δ^{}",
                f.dom(),
                f.cod(),
                source.ambient,
                target.ambient
            )));
        }
        let (k, l) = (source.len(), target.len());
        if reindex.len() != l + 1 {
            return Err(AwfsError::InvalidReindex(format!("expected {} entries", l + 1)));
        }
        if reindex[0] != 0 || reindex[l] != k {
            return Err(AwfsError::InvalidReindex(format!("must send 0 to 0 and {l} to {k}")));
        }
        if reindex.windows(2).any(|w| w[0] > w[1]) {
            return Err(AwfsError::InvalidReindex("must be nondecreasing".into()));
        }
        for (i, t) in target.sieves.iter().enumerate() {
            if pullback_sieve(&f, t)? != source.sieves[reindex[i]] {
                return Err(AwfsError::NotPullback { index: i });
            }
        }
        Ok(SequenceSquare {
            f,
            reindex,
            source,
            target,
        })
    }

    /// The square over `f` with the reindexing read off from the sieves.
    pub fn pullback(f: MonotoneMap, source: HornPushoutSequence, target: HornPushoutSequence) -> Result<Self, AwfsError> {
        let mut reindex = Vec::with_capacity(target.len() + 1);
        for (i, t) in target.sieves.iter().enumerate() {
            let pulled = pullback_sieve(&f, t)?;
            let position = source
                .sieves
                .iter()
                .position(|s| *s == pulled)
                .ok_or(AwfsError::NotPullback { index: i })?;
            reindex.push(position);
        }
        SequenceSquare::new(f, reindex, source, target)
    }

    /// The identity vertical morphism on `target` pulled back along `f`.
    pub fn vertical_identity(f: MonotoneMap, target: Sieve) -> Result<Self, AwfsError> {
        let source = pullback_sieve(&f, &target)?;
        SequenceSquare::new(
            f,
            vec![0],
            HornPushoutSequence::identity(source),
            HornPushoutSequence::identity(target),
        )
    }

    pub fn f(&self) -> &MonotoneMap {
        &self.f
    }

    pub fn reindex(&self) -> &[usize] {
        &self.reindex
    }

    pub fn source(&self) -> &HornPushoutSequence {
        &self.source
    }

    pub fn target(&self) -> &HornPushoutSequence {
        &self.target
    }

    pub fn kind(&self) -> SquareKind {
        let word = factorize(&self.f).generators();
        match word[..] {
            [crate::delta::Generator::Face { .. }] => SquareKind::Face,
            [crate::delta::Generator::Degeneracy { .. }] => SquareKind::Degeneracy,
            _ => SquareKind::Composite,
        }
    }

    pub fn to_json(&self) -> SquareJson {
        SquareJson {
            f: MapJson {
                cod: self.f.cod(),
                values: self.f.values().to_vec(),
            },
            reindex: self.reindex.clone(),
            source: self.source.to_json(),
            target: self.target.to_json(),
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self.to_json()).expect("squares serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapJson {
    pub cod: usize,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareJson {
    pub f: MapJson,
    pub reindex: Vec<usize>,
    pub source: SequenceJson,
    pub target: SequenceJson,
}

impl SquareJson {
    pub fn to_square(&self) -> Result<SequenceSquare, AwfsError> {
        let dom = self
            .f
            .values
            .len()
            .checked_sub(1)
            .ok_or_else(|| AwfsError::Mismatch("the map has no values".into()))?;
        let f = MonotoneMap::new(dom, self.f.cod, self.f.values.clone())?;
        SequenceSquare::new(f, self.reindex.clone(), self.source.to_sequence()?, self.target.to_sequence()?)
    }
}

/// Stack `q` on top of `p` over the same `f`; the reindexing is `μ + ν`.
pub fn compose_squares_vertical(p: &SequenceSquare, q: &SequenceSquare) -> Result<SequenceSquare, AwfsError> {
    if p.f != q.f {
        return Err(AwfsError::Mismatch("different underlying maps".into()));
    }
    let source = p.source.then(&q.source)?;
    let target = p.target.then(&q.target)?;
    let (k, l) = (p.source.len(), p.target.len());
    let reindex = (0..=l + q.target.len())
        .map(|i| if i <= l { p.reindex[i] } else { k + q.reindex[i - l] })
        .collect();
    SequenceSquare::new(p.f.clone(), reindex, source, target)
}

/// Place `q` to the right of `p`: the target of `p` must be the source of `q`.
pub fn compose_squares_horizontal(p: &SequenceSquare, q: &SequenceSquare) -> Result<SequenceSquare, AwfsError> {
    if p.target != q.source {
        return Err(AwfsError::Mismatch("the middle sequences differ".into()));
    }
    let f = compose(&q.f, &p.f)?;
    let reindex = q.reindex.iter().map(|&i| p.reindex[i]).collect();
    SequenceSquare::new(f, reindex, p.source.clone(), q.target.clone())
}

#[cfg(test)]
mod tests;
