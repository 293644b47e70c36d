//! Splitting a square into face and degeneracy squares along the canonical
//! generator word of its underlying map.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::{
    compose_squares_horizontal, pullback_squares, AwfsError, Generator, HornPushoutSequence, SequenceSquare, Step,
};
use crate::delta::{all_maps, compose, degeneracy_map, face_map, factorize, MonotoneMap};
use crate::kan::Sign;
use crate::sieve::{attach_horn, horn_attachments, pullback_sieve, Sieve};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decomposition {
    /// Face and degeneracy squares, leftmost first, whose horizontal
    /// composite is the original square.
    Found(Vec<SequenceSquare>),
    /// No decomposition along the canonical word. `budget_exhausted` is set
    /// when the search stopped early, so a decomposition may still exist.
    NotFound { explored: usize, budget_exhausted: bool },
}

/// Steps of intermediate sequences get `+` unless the horn only admits `-`.
fn intermediate_sign(signed: bool, spec: crate::sieve::HornSpec) -> Option<Sign> {
    signed.then(|| if Sign::Plus.allowed_on(spec) { Sign::Plus } else { Sign::Minus })
}

struct Search<'a> {
    maps: Vec<MonotoneMap>,
    source: &'a HornPushoutSequence,
    signed: bool,
    budget: usize,
    explored: usize,
    exhausted: bool,
}

impl Search<'_> {
    /// Build the chain on the domain of `maps[t]` from the chain above it.
    /// `stages` holds the chains already fixed, nearest first.
    fn stage(&mut self, t: usize, stages: &mut Vec<HornPushoutSequence>) -> Option<Vec<HornPushoutSequence>> {
        let upper = stages.last().expect("the target chain is fixed").clone();
        if t == 0 {
            self.explored += 1;
            let fits = SequenceSquare::pullback(self.maps[0].clone(), self.source.clone(), upper).is_ok();
            return fits.then(|| stages.clone());
        }
        let mut forced: Vec<Sieve> = Vec::new();
        for s in upper.sieves() {
            let pulled = pullback_sieve(&self.maps[t], s).expect("ambients match along the word");
            if forced.last() != Some(&pulled) {
                forced.push(pulled);
            }
        }
        let start = forced[0].clone();
        self.refine(t, &forced, 1, start.clone(), start, &mut Vec::new(), stages)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        t: usize,
        forced: &[Sieve],
        next: usize,
        start: Sieve,
        current: Sieve,
        steps: &mut Vec<Step>,
        stages: &mut Vec<HornPushoutSequence>,
    ) -> Option<Vec<HornPushoutSequence>> {
        if self.explored >= self.budget {
            self.exhausted = true;
            return None;
        }
        if next == forced.len() {
            let seq = HornPushoutSequence::new(start, steps.clone()).expect("steps were attached one by one");
            stages.push(seq);
            let found = self.stage(t - 1, stages);
            stages.pop();
            return found;
        }
        if current == forced[next] {
            return self.refine(t, forced, next + 1, start, current, steps, stages);
        }
        self.explored += 1;
        for (spec, embedding) in horn_attachments(&current) {
            if !forced[next].contains(embedding.image()) {
                continue;
            }
            let attached = attach_horn(&current, spec, &embedding).expect("listed attachments are valid");
            steps.push(Step {
                generator: Generator::new(spec, intermediate_sign(self.signed, spec)).expect("sign is allowed"),
                embedding,
            });
            let found = self.refine(t, forced, next, start.clone(), attached, steps, stages);
            steps.pop();
            if found.is_some() {
                return found;
            }
            if self.exhausted {
                return None;
            }
        }
        None
    }
}

/// Which generator words of the underlying map the search follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WordChoice {
    /// The canonical word only.
    #[default]
    Canonical,
    /// Every shortest word, canonical first.
    AllMinimal,
}

fn word_length(f: &MonotoneMap) -> usize {
    factorize(f).generators().len()
}

/// Every way of writing `f` as a shortest composite of face and degeneracy
/// maps, innermost first.
pub fn minimal_words(f: &MonotoneMap) -> Vec<Vec<MonotoneMap>> {
    let len = word_length(f);
    if len == 0 {
        return vec![Vec::new()];
    }
    let b = f.cod();
    let faces = (0..=b).filter(|_| b >= 1).map(|i| face_map(b - 1, i));
    let degeneracies = (0..=b).map(|i| degeneracy_map(b, i));
    let mut words = Vec::new();
    for g in faces.chain(degeneracies) {
        let g = g.expect("indices are in range");
        for h in all_maps(f.dom(), g.dom()) {
            if word_length(&h) + 1 != len || compose(&g, &h).ok().as_ref() != Some(f) {
                continue;
            }
            for mut w in minimal_words(&h) {
                w.push(g.clone());
                words.push(w);
            }
        }
    }
    words
}

/// Search for face and degeneracy squares composing to `sq`, following the
/// canonical generator word of its map. Intermediate sieves are forced by
/// pulling back; the orders of horn attachments between them are searched
/// with backtracking, visiting at most `budget` nodes.
pub fn decompose_horizontal(sq: &SequenceSquare, budget: usize) -> Decomposition {
    decompose_horizontal_with(sq, budget, WordChoice::Canonical)
}

/// [`decompose_horizontal`] over the words selected by `words`, sharing one
/// budget.
pub fn decompose_horizontal_with(sq: &SequenceSquare, budget: usize, words: WordChoice) -> Decomposition {
    search_words(sq, budget, &candidate_words(sq.f(), words))
}

fn candidate_words(f: &MonotoneMap, words: WordChoice) -> Vec<Vec<MonotoneMap>> {
    let canonical: Vec<MonotoneMap> = factorize(f).generators().iter().map(|g| g.to_map()).collect();
    let mut candidates = vec![canonical.clone()];
    if words == WordChoice::AllMinimal && canonical.len() > 1 {
        candidates.extend(minimal_words(f).into_iter().filter(|w| *w != canonical));
    }
    candidates
}

/// Search along each word of `candidates` in turn; the first is canonical.
fn search_words(sq: &SequenceSquare, budget: usize, candidates: &[Vec<MonotoneMap>]) -> Decomposition {
    match candidates[0].len() {
        0 => {
            return if sq.source() == sq.target() {
                Decomposition::Found(Vec::new())
            } else {
                Decomposition::NotFound {
                    explored: 0,
                    budget_exhausted: false,
                }
            }
        }
        1 => return Decomposition::Found(vec![sq.clone()]),
        _ => {}
    }
    let signed = sq.target().steps().iter().any(|s| s.generator.sign().is_some());
    let mut explored = 0;
    for maps in candidates {
        let mut search = Search {
            maps: maps.clone(),
            source: sq.source(),
            signed,
            budget: budget.saturating_sub(explored),
            explored: 0,
            exhausted: false,
        };
        let r = search.maps.len();
        let mut stages = vec![sq.target().clone()];
        let found = search.stage(r - 1, &mut stages);
        explored += search.explored;
        if let Some(mut chains) = found {
            chains.push(sq.source().clone());
            chains.reverse();
            let squares = (0..r)
                .map(|t| {
                    SequenceSquare::pullback(search.maps[t].clone(), chains[t].clone(), chains[t + 1].clone())
                        .expect("each stage pulls back to the one below")
                })
                .collect();
            return Decomposition::Found(squares);
        }
        if search.exhausted {
            return Decomposition::NotFound {
                explored,
                budget_exhausted: true,
            };
        }
    }
    Decomposition::NotFound {
        explored,
        budget_exhausted: false,
    }
}

/// Compose a decomposition back into one square.
pub fn recompose(squares: &[SequenceSquare]) -> Result<Option<SequenceSquare>, AwfsError> {
    let mut iter = squares.iter();
    let Some(first) = iter.next() else { return Ok(None) };
    iter.try_fold(first.clone(), |acc, sq| compose_squares_horizontal(&acc, sq))
        .map(Some)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeReport {
    pub squares: usize,
    pub decomposed: usize,
    pub budget_exhausted: usize,
    /// Squares with no decomposition along the canonical word.
    pub not_found: Vec<Value>,
}

/// Try to decompose every square with a length-one target on `Δ^b` over a
/// map `[a] -> [b]` that is neither a face nor a degeneracy, with
/// `a, b <= max_ambient`.
pub fn probe_decomposability(
    max_ambient: usize,
    budget: usize,
    words: WordChoice,
    cap: usize,
) -> Result<ProbeReport, AwfsError> {
    let mut report = ProbeReport {
        squares: 0,
        decomposed: 0,
        budget_exhausted: 0,
        not_found: Vec::new(),
    };
    for b in 1..=max_ambient {
        let mut targets = Vec::new();
        for start in crate::sieve::all_sieves(b) {
            for (spec, embedding) in horn_attachments(&start) {
                let step = Step {
                    generator: Generator::plain(spec),
                    embedding,
                };
                targets.push(HornPushoutSequence::new(start.clone(), vec![step])?);
            }
        }
        for a in 0..=max_ambient {
            for f in all_maps(a, b) {
                let candidates = candidate_words(&f, words);
                if candidates[0].len() < 2 {
                    continue;
                }
                let mut squares = Vec::new();
                for target in &targets {
                    squares.extend(pullback_squares(&f, target, cap)?);
                }
                let outcomes: Vec<(Decomposition, &SequenceSquare)> =
                    squares.par_iter().map(|sq| (search_words(sq, budget, &candidates), sq)).collect();
                for (outcome, sq) in outcomes {
                    report.squares += 1;
                    match outcome {
                        Decomposition::Found(_) => report.decomposed += 1,
                        Decomposition::NotFound { budget_exhausted, .. } => {
                            if budget_exhausted {
                                report.budget_exhausted += 1;
                            }
                            report.not_found.push(sq.to_value());
                        }
                    }
                }
            }
        }
    }
    report.not_found.sort_by_cached_key(|v| v.to_string());
    Ok(report)
}
