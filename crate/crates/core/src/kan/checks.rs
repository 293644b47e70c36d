//! Exhaustive checkers for lift assignments. Each returns a report listing
//! counterexamples in a deterministic order.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{
    degenerate_filler, enumerate_all, horn_pullback_indices, pullback_horn_map, pullback_problem,
    storm_horn_map, Fibration, KanError, LiftingProblem, LiftingStructure, Sign, SignedLifts,
};
use crate::delta::{degeneracy_map, face_map, MonotoneMap};
use crate::sieve::{full_mask, horn, pullback_sieve, HornSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub checker: String,
    pub instances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_instances: Option<usize>,
    pub failures: Vec<Value>,
}

impl CheckReport {
    /// Failures are sorted by their serialized form.
    pub fn new(checker: &str, instances: usize, mut failures: Vec<Value>) -> Self {
        failures.sort_by_cached_key(|v| v.to_string());
        CheckReport {
            checker: checker.to_string(),
            instances,
            expected_instances: None,
            failures,
        }
    }

    pub fn with_expected(mut self, expected: usize) -> Self {
        self.expected_instances = Some(expected);
        self
    }

    pub fn is_ok(&self) -> bool {
        self.failures.is_empty() && self.expected_instances.is_none_or(|e| e == self.instances)
    }

    /// JSON with sorted keys.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("reports serialize")
    }
}

/// Count lifting problems of dimension `1..=maxdim` by checking every tuple
/// of facets and every base simplex, without pruning.
pub fn brute_force_problem_count(fib: &Fibration, maxdim: usize) -> Result<usize, KanError> {
    fib.require_level(maxdim)?;
    let x = fib.total();
    let y = fib.base();
    let mut count = 0;
    for n in 1..=maxdim {
        let faces: Vec<MonotoneMap> = (0..=n).map(|k| face_map(n - 1, k).expect("face")).collect();
        let inner: Vec<MonotoneMap> = if n < 2 {
            Vec::new()
        } else {
            (0..n).map(|k| face_map(n - 2, k).expect("face")).collect()
        };
        let size = x.len(n - 1);
        let total = size.pow(n as u32);
        for m in 0..=n {
            let indices: Vec<usize> = (0..=n).filter(|&k| k != m).collect();
            for code in 0..total {
                let tuple: Vec<usize> = (0..n).map(|i| code / size.pow(i as u32) % size).collect();
                let compatible = n < 2
                    || indices.iter().enumerate().all(|(a, &l)| {
                        indices[..a].iter().enumerate().all(|(b, &k)| {
                            x.act(tuple[a], &inner[k]).unwrap() == x.act(tuple[b], &inner[l - 1]).unwrap()
                        })
                    });
                if !compatible {
                    continue;
                }
                for base in 0..y.len(n) {
                    let over = indices.iter().enumerate().all(|(a, &k)| {
                        fib.alpha(n - 1, tuple[a]) == y.act(base, &faces[k]).unwrap()
                    });
                    if over {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(count)
}

fn name(fib: &Fibration, level: usize, x: usize) -> String {
    fib.total().name(level, x).to_string()
}

fn lift_failure(fib: &Fibration, p: &LiftingProblem, result: &Result<usize, KanError>) -> Value {
    match result {
        Ok(h) => json!({"problem": p.encode(fib), "lift": name(fib, p.spec().n(), *h)}),
        Err(e) => json!({"problem": p.encode(fib), "error": e.to_string()}),
    }
}

/// Every lift solves its problem.
pub fn check_lifts(fib: &Fibration, lifts: &dyn LiftingStructure, maxdim: usize) -> Result<CheckReport, KanError> {
    let problems = enumerate_all(fib, maxdim)?;
    let failures: Vec<Value> = problems
        .par_iter()
        .filter_map(|p| {
            let result = lifts.lift(p);
            match result {
                Ok(h) if fib.solves(p, h) => None,
                _ => Some(lift_failure(fib, p, &result)),
            }
        })
        .collect();
    Ok(CheckReport::new("kan", problems.len(), failures))
}

/// Whenever a problem has a degenerate filler, the assignment returns it.
pub fn check_degenerate_preferring(
    fib: &Fibration,
    lifts: &dyn LiftingStructure,
    maxdim: usize,
) -> Result<CheckReport, KanError> {
    let problems = enumerate_all(fib, maxdim)?;
    let failures: Vec<Value> = problems
        .par_iter()
        .filter_map(|p| {
            let expected = degenerate_filler(fib, p)?;
            let n = p.spec().n();
            match lifts.lift(p) {
                Ok(h) if h == expected => None,
                result => {
                    let mut failure = lift_failure(fib, p, &result);
                    failure["expected"] = json!(name(fib, n, expected));
                    Some(failure)
                }
            }
        })
        .collect();
    Ok(CheckReport::new("dp", problems.len(), failures))
}

/// `lift(s_j^*(x), y ∘ s_j) = lift(x, y) ∘ s_j` for every problem of
/// dimension at most `maxdim`, every `j`, and every admissible `m*`.
pub fn check_symmetric_effective(
    fib: &Fibration,
    lifts: &dyn LiftingStructure,
    maxdim: usize,
) -> Result<CheckReport, KanError> {
    fib.require_level(maxdim + 1)?;
    let problems = enumerate_all(fib, maxdim)?;
    let results: Vec<(usize, Vec<Value>)> = problems
        .par_iter()
        .map(|p| {
            let n = p.spec().n();
            let mut count = 0;
            let mut failures = Vec::new();
            let lifted = lifts.lift(p);
            for j in 0..=n {
                for (m_star, _) in horn_pullback_indices(n, p.spec().m(), j)? {
                    count += 1;
                    let h = match lifted {
                        Ok(h) if fib.solves(p, h) => h,
                        _ => {
                            failures.push(lift_failure(fib, p, &lifted));
                            continue;
                        }
                    };
                    let horn = pullback_horn_map(fib, p, h, j, m_star)?;
                    let q = pullback_problem(fib, p, horn, j)?;
                    let expected = fib.total().degeneracy(n, j, h);
                    match lifts.lift(&q) {
                        Ok(v) if v == expected => {}
                        result => {
                            let mut failure = lift_failure(fib, &q, &result);
                            failure["pulled_back_from"] = p.encode(fib);
                            failure["j"] = json!(j);
                            failure["expected"] = json!(name(fib, n + 1, expected));
                            failures.push(failure);
                        }
                    }
                }
            }
            Ok((count, failures))
        })
        .collect::<Result<_, KanError>>()?;
    let instances = results.iter().map(|(c, _)| c).sum();
    let failures = results.into_iter().flat_map(|(_, f)| f).collect();
    Ok(CheckReport::new("symmetric", instances, failures))
}

/// `lift_±(lift_±(x,y) ∘ s_j ∘ ι*, y ∘ s_j) = lift_±(x,y) ∘ s_j` for each
/// sign, each problem on a horn carrying that sign, each `j` and `m*`.
pub fn check_effective(fib: &Fibration, lifts: &SignedLifts<'_>, maxdim: usize) -> Result<CheckReport, KanError> {
    fib.require_level(maxdim + 1)?;
    let problems = enumerate_all(fib, maxdim)?;
    let results: Vec<(usize, Vec<Value>)> = problems
        .par_iter()
        .map(|p| {
            let n = p.spec().n();
            let mut count = 0;
            let mut failures = Vec::new();
            for sign in Sign::BOTH.into_iter().filter(|s| s.allowed_on(p.spec())) {
                let lifted = lifts.lift(sign, p);
                for j in 0..=n {
                    for (m_star, _) in horn_pullback_indices(n, p.spec().m(), j)? {
                        count += 1;
                        let q_spec = HornSpec::new(n + 1, m_star)?;
                        if !sign.allowed_on(q_spec) {
                            return Err(KanError::SignViolation { spec: q_spec, sign });
                        }
                        let h = match lifted {
                            Ok(h) if fib.solves(p, h) => h,
                            _ => {
                                let mut failure = lift_failure(fib, p, &lifted);
                                failure["sign"] = json!(sign);
                                failures.push(failure);
                                continue;
                            }
                        };
                        let horn = storm_horn_map(fib, p, h, j, m_star)?;
                        let q = pullback_problem(fib, p, horn, j)?;
                        let expected = fib.total().degeneracy(n, j, h);
                        match lifts.lift(sign, &q) {
                            Ok(v) if v == expected => {}
                            result => {
                                let mut failure = lift_failure(fib, &q, &result);
                                failure["pulled_back_from"] = p.encode(fib);
                                failure["j"] = json!(j);
                                failure["sign"] = json!(sign);
                                failure["expected"] = json!(name(fib, n + 1, expected));
                                failures.push(failure);
                            }
                        }
                    }
                }
            }
            Ok((count, failures))
        })
        .collect::<Result<_, KanError>>()?;
    let instances = results.iter().map(|(c, _)| c).sum();
    let failures = results.into_iter().flat_map(|(_, f)| f).collect();
    Ok(CheckReport::new("effective", instances, failures))
}

/// Each problem on `Λ^n_m` is pulled back along `n + 1` degeneracies, one of
/// which (`j = m`) gives two horns.
pub fn expected_symmetric_instances(fib: &Fibration, maxdim: usize) -> Result<usize, KanError> {
    let mut total = 0;
    for n in 1..=maxdim {
        for spec in HornSpec::all(n) {
            total += super::enumerate_problems(fib, spec)?.len() * (n + 2);
        }
    }
    Ok(total)
}

/// As [`expected_symmetric_instances`], counting inner horns once per sign.
pub fn expected_effective_instances(fib: &Fibration, maxdim: usize) -> Result<usize, KanError> {
    let mut total = 0;
    for n in 1..=maxdim {
        for spec in HornSpec::all(n) {
            let signs = Sign::BOTH.iter().filter(|s| s.allowed_on(spec)).count();
            total += super::enumerate_problems(fib, spec)?.len() * (n + 2) * signs;
        }
    }
    Ok(total)
}

/// The faces of `Δ^{n+1}` that do not factor through `s_j^*(Λ^n_m)` are
/// `j`, `j + 1`, and, when `j ≠ m`, the single admissible `m*`.
pub fn check_face_escape(max_n: usize) -> Result<CheckReport, KanError> {
    let mut instances = 0;
    let mut failures = Vec::new();
    for n in 1..=max_n {
        for spec in HornSpec::all(n) {
            for j in 0..=n {
                instances += 1;
                let pulled = pullback_sieve(&degeneracy_map(n, j)?, &horn(spec))?;
                let escaping: Vec<usize> = (0..=n + 1)
                    .filter(|&k| !pulled.contains(full_mask(n + 1) & !(1 << k)))
                    .collect();
                let mut expected = vec![j, j + 1];
                if j != spec.m() {
                    let indices = horn_pullback_indices(n, spec.m(), j)?;
                    expected.push(indices[0].0);
                }
                expected.sort_unstable();
                expected.dedup();
                if escaping != expected {
                    failures.push(json!({
                        "horn": [n, spec.m()],
                        "j": j,
                        "escaping": escaping,
                        "expected": expected,
                    }));
                }
            }
        }
    }
    Ok(CheckReport::new("face-escape", instances, failures))
}

/// The facet-by-facet description of `s_j^*(x)` agrees with reading the
/// faces off `lift(x, y) ∘ s_j`.
pub fn check_formulations_agree(
    fib: &Fibration,
    lifts: &dyn LiftingStructure,
    maxdim: usize,
) -> Result<CheckReport, KanError> {
    fib.require_level(maxdim + 1)?;
    let problems = enumerate_all(fib, maxdim)?;
    let results: Vec<(usize, Vec<Value>)> = problems
        .par_iter()
        .map(|p| {
            let n = p.spec().n();
            let h = lifts.lift(p)?;
            let mut count = 0;
            let mut failures = Vec::new();
            for j in 0..=n {
                for (m_star, _) in horn_pullback_indices(n, p.spec().m(), j)? {
                    count += 1;
                    let displayed = pullback_horn_map(fib, p, h, j, m_star);
                    let storm = storm_horn_map(fib, p, h, j, m_star)?;
                    if displayed.as_ref() != Ok(&storm) {
                        failures.push(json!({
                            "problem": p.encode(fib),
                            "j": j,
                            "m_star": m_star,
                        }));
                    }
                }
            }
            Ok((count, failures))
        })
        .collect::<Result<_, KanError>>()?;
    let instances = results.iter().map(|(c, _)| c).sum();
    let failures = results.into_iter().flat_map(|(_, f)| f).collect();
    Ok(CheckReport::new("formulations", instances, failures))
}
