//! Horn filling in simplicial Malcev algebras.
//!
//! Starting from `w_{-1} = β_n(y)`, the operators
//! `N_k(w) = μ(w, w ∘ d_k ∘ s_{k'}, x_k ∘ s_{k'})` (with `k' = k` below `m`
//! and `k' = k - 1` above it) correct one face at a time: ascending through
//! `0..m`, then descending from `n` down to `m + 1` starting again from
//! `w_{m-1}`. The last value computed, `w_{m+1}`, is the filler.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{enumerate_all, find_degenerate_solutions, CheckReport, Fibration, KanError, LiftingProblem, LiftingStructure};
use crate::salg::{DegeneracySection, SalgError};

/// One helper value `w_k` in the order it is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub index: isize,
    pub value: usize,
}

fn n_k(fib: &Fibration, p: &LiftingProblem, k: usize, w: usize) -> usize {
    let x = fib.total();
    let n = p.spec().n();
    let m = p.spec().m();
    let k_prime = if k < m { k } else { k - 1 };
    let corrected = x.degeneracy(n - 1, k_prime, x.face(n, k, w));
    let target = x.degeneracy(n - 1, k_prime, p.facet(k));
    x.mu(n, w, corrected, target).expect("Malcev structure present")
}

/// `N_k` applied to `w`, exposed for checking that fillers are fixed points.
pub fn apply_n_k(fib: &Fibration, p: &LiftingProblem, k: usize, w: usize) -> Result<usize, KanError> {
    if !fib.total().has_malcev() {
        return Err(SalgError::MissingMalcev("total space").into());
    }
    assert!(k != p.spec().m() && k <= p.spec().n(), "N_k needs k ≠ m");
    Ok(n_k(fib, p, k, w))
}

/// The helper sequence, starting with `w_{-1}` and ending with the filler.
/// The entry with index `n + 1` repeats `w_{m-1}` as the start of the
/// descending pass.
pub fn trace_malcev(
    fib: &Fibration,
    beta: &DegeneracySection,
    p: &LiftingProblem,
) -> Result<Vec<TraceStep>, KanError> {
    if !fib.total().has_malcev() {
        return Err(SalgError::MissingMalcev("total space").into());
    }
    let n = p.spec().n();
    let m = p.spec().m();
    fib.require_level(n)?;
    let mut trace = Vec::with_capacity(n + 3);
    let mut w = beta.apply(n, p.base());
    trace.push(TraceStep { index: -1, value: w });
    for k in 0..m {
        w = n_k(fib, p, k, w);
        trace.push(TraceStep {
            index: k as isize,
            value: w,
        });
    }
    trace.push(TraceStep {
        index: (n + 1) as isize,
        value: w,
    });
    for k in (m + 1..=n).rev() {
        w = n_k(fib, p, k, w);
        trace.push(TraceStep {
            index: k as isize,
            value: w,
        });
    }
    Ok(trace)
}

pub fn malcev_lift(fib: &Fibration, beta: &DegeneracySection, p: &LiftingProblem) -> Result<usize, KanError> {
    let trace = trace_malcev(fib, beta, p)?;
    Ok(trace.last().expect("trace starts with w_{-1}").value)
}

/// The Malcev filler as a [`LiftingStructure`], with its preconditions
/// checked once up front.
pub struct MalcevLifting<'a> {
    fib: &'a Fibration,
    beta: &'a DegeneracySection,
}

impl<'a> MalcevLifting<'a> {
    pub fn new(fib: &'a Fibration, beta: &'a DegeneracySection) -> Result<Self, KanError> {
        if !fib.total().has_malcev() {
            return Err(SalgError::MissingMalcev("total space").into());
        }
        if !fib.base().has_malcev() {
            return Err(SalgError::MissingMalcev("base").into());
        }
        if !fib.projection().is_algebraic(fib.total(), fib.base())? {
            return Err(KanError::NotAlgebraic);
        }
        DegeneracySection::new(
            fib.total(),
            fib.base(),
            fib.projection(),
            beta.components().to_vec(),
        )?;
        Ok(MalcevLifting { fib, beta })
    }

    pub fn trace(&self, p: &LiftingProblem) -> Result<Vec<TraceStep>, KanError> {
        trace_malcev(self.fib, self.beta, p)
    }
}

impl LiftingStructure for MalcevLifting<'_> {
    fn lift(&self, p: &LiftingProblem) -> Result<usize, KanError> {
        malcev_lift(self.fib, self.beta, p)
    }
}

/// On every problem with a degenerate filler `z ∘ s_j`: each helper value
/// computed before the first index in `{j, j+1}` lies in the image of `s_j`,
/// and every value from there on is the degenerate filler.
pub fn check_trace_lemmas(
    fib: &Fibration,
    beta: &DegeneracySection,
    maxdim: usize,
) -> Result<CheckReport, KanError> {
    let problems = enumerate_all(fib, maxdim)?;
    let x = fib.total();
    let results: Vec<(usize, Vec<Value>)> = problems
        .par_iter()
        .map(|p| {
            let n = p.spec().n();
            let solutions = find_degenerate_solutions(fib, p);
            if solutions.is_empty() {
                return Ok((0, Vec::new()));
            }
            let trace = trace_malcev(fib, beta, p)?;
            let mut failures = Vec::new();
            for &(z, j) in &solutions {
                let filler = x.degeneracy(n - 1, j, z);
                let first = trace
                    .iter()
                    .position(|s| s.index == j as isize || s.index == j as isize + 1)
                    .expect("one of j, j+1 differs from m");
                for (pos, step) in trace.iter().enumerate() {
                    let w = step.value;
                    let ok = if pos < first {
                        x.degeneracy(n - 1, j, x.face(n, j, w)) == w
                    } else {
                        w == filler
                    };
                    if !ok {
                        failures.push(json!({
                            "problem": p.encode(fib),
                            "j": j,
                            "index": step.index,
                            "value": x.name(n, w),
                            "expected": if pos < first { "in the image of s_j".to_string() } else { x.name(n, filler).to_string() },
                        }));
                    }
                }
            }
            Ok((solutions.len(), failures))
        })
        .collect::<Result<_, KanError>>()?;
    let instances = results.iter().map(|(c, _)| c).sum();
    let failures = results.into_iter().flat_map(|(_, f)| f).collect();
    Ok(CheckReport::new("trace", instances, failures))
}

/// Every filler `h` of every problem satisfies `N_k(h) = h` for all `k ≠ m`.
pub fn check_fixed_points(fib: &Fibration, maxdim: usize) -> Result<CheckReport, KanError> {
    if !fib.total().has_malcev() {
        return Err(SalgError::MissingMalcev("total space").into());
    }
    let problems = enumerate_all(fib, maxdim)?;
    let results: Vec<(usize, Vec<Value>)> = problems
        .par_iter()
        .map(|p| {
            let n = p.spec().n();
            let mut count = 0;
            let mut failures = Vec::new();
            for h in fib.fillers(p) {
                for k in (0..=n).filter(|&k| k != p.spec().m()) {
                    count += 1;
                    let moved = n_k(fib, p, k, h);
                    if moved != h {
                        failures.push(json!({
                            "problem": p.encode(fib),
                            "filler": fib.total().name(n, h),
                            "k": k,
                            "image": fib.total().name(n, moved),
                        }));
                    }
                }
            }
            (count, failures)
        })
        .collect();
    let instances = results.iter().map(|(c, _)| c).sum();
    let failures = results.into_iter().flat_map(|(_, f)| f).collect();
    Ok(CheckReport::new("fixed-points", instances, failures))
}
