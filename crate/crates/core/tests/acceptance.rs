//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use simplicial_kan::awfs::{
    check_d_squares, expected_d_square_instances, expected_square_instances, extend_lift, face_squares, sweep_squares, HornPushoutSequence,
    Lifts, SieveMap, Step, Generator,
};
use simplicial_kan::delta::{all_maps, check_simplicial_identities, factorize};
use simplicial_kan::kan::{
    brute_force_problem_count, check_degenerate_preferring, check_effective, check_face_escape, check_fixed_points,
    check_formulations_agree, check_lifts, check_symmetric_effective, check_trace_lemmas, degenerate_preferring_assignment,
    enumerate_all, enumerate_problems, expected_effective_instances, expected_symmetric_instances,
    find_degenerate_solutions, Fibration, FirstFiller, LiftTable, LiftingProblem, LiftingStructure, MalcevLifting,
    SignedLifts,
};
use simplicial_kan::salg::{
    cocycle_algebra, constant_algebra, nerve_abelian, section_from_point, DegeneracySection, FiniteGroup,
    FiniteMalcevAlgebra,
};
use simplicial_kan::sieve::{all_sieves, attach_horn, horn_attachments, nondegenerate_count, HornSpec};

const CAP: usize = 1 << 22;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn instance(x: simplicial_kan::salg::SimplicialSet) -> (Fibration, DegeneracySection) {
    let (_, _, beta) = section_from_point(&x, 0).unwrap();
    (Fibration::over_point(x), beta)
}

fn nerve_z2(n: usize) -> (Fibration, DegeneracySection) {
    instance(nerve_abelian(&FiniteGroup::cyclic(2), n).unwrap())
}

fn constant_z2(n: usize) -> (Fibration, DegeneracySection) {
    instance(constant_algebra(&FiniteMalcevAlgebra::builtin("Z2").unwrap(), n))
}

fn instances() -> Vec<(&'static str, Fibration, DegeneracySection)> {
    let (a, ab) = nerve_z2(4);
    let (b, bb) = constant_z2(4);
    vec![("nerve Z/2", a, ab), ("constant Z/2", b, bb)]
}

fn simplicial_identities() -> Outcome {
    let report = check_simplicial_identities(5);
    // s∘d: (n+1)(n+2) pairs, d∘d: C(n+3,2), s∘s: C(n+2,2)
    let expected: usize = (0..=5)
        .map(|n| (n + 1) * (n + 2) + binomial(n + 3, 2) + binomial(n + 2, 2))
        .sum();
    ensure(report.is_ok(), || format!("{} violations", report.violations.len()))?;
    ensure(report.checked == expected, || {
        format!("checked {} identities, expected {expected}", report.checked)
    })?;
    Ok(format!("{} identities", report.checked))
}

fn factorization_round_trip() -> Outcome {
    let mut maps = 0;
    for a in 0..=6 {
        for b in 0..=6 {
            let all = all_maps(a, b);
            // monotone maps [a] -> [b] are multisets of size a+1 from b+1
            ensure(all.len() == binomial(a + b + 1, a + 1), || {
                format!("{} maps [{a}] -> [{b}]", all.len())
            })?;
            for f in all {
                let g = factorize(&f).recompose();
                ensure(g == f, || format!("{f:?} recomposes to {g:?}"))?;
                maps += 1;
            }
        }
    }
    Ok(format!("{maps} maps"))
}

fn horn_count_law() -> Outcome {
    let mut attachments = 0;
    for ambient in 0..=4 {
        for sieve in all_sieves(ambient) {
            let before = nondegenerate_count(&sieve);
            let listed = horn_attachments(&sieve);
            for (spec, embedding) in &listed {
                let after = attach_horn(&sieve, *spec, embedding).map_err(|e| e.to_string())?;
                attachments += 1;
                ensure(nondegenerate_count(&after) == before + 2, || {
                    format!("{spec} along {embedding:?} adds {}", nondegenerate_count(&after) - before)
                })?;
            }
            // every (n, m, embedding) that attach_horn accepts is listed
            for mask in 1u64..1 << (ambient + 1) {
                let n = mask.count_ones() as usize - 1;
                if n == 0 {
                    continue;
                }
                let embedding = simplicial_kan::delta::MonotoneMap::inclusion(mask, ambient);
                for spec in HornSpec::all(n) {
                    let accepted = attach_horn(&sieve, spec, &embedding).is_ok();
                    let is_listed = listed.iter().any(|(s, e)| *s == spec && *e == embedding);
                    ensure(accepted == is_listed, || {
                        format!("{spec} along {embedding:?}: accepted {accepted}, listed {is_listed}")
                    })?;
                }
            }
        }
    }
    Ok(format!("{attachments} attachments"))
}

fn malcev_solves() -> Outcome {
    let mut total = 0;
    for (name, fib, beta) in instances() {
        let lifting = MalcevLifting::new(&fib, &beta).map_err(|e| e.to_string())?;
        let report = check_lifts(&fib, &lifting, 3).map_err(|e| e.to_string())?;
        let expected = brute_force_problem_count(&fib, 3).map_err(|e| e.to_string())?;
        ensure(report.is_ok(), || format!("{name}: {:?}", report.failures.first()))?;
        ensure(report.instances == expected, || {
            format!("{name}: {} problems, expected {expected}", report.instances)
        })?;
        total += report.instances;
    }
    Ok(format!("{total} problems"))
}

fn degenerate_preference() -> Outcome {
    let mut total = 0;
    for (name, fib, beta) in instances() {
        let lifting = MalcevLifting::new(&fib, &beta).map_err(|e| e.to_string())?;
        let report = check_degenerate_preferring(&fib, &lifting, 3).map_err(|e| e.to_string())?;
        ensure(report.is_ok(), || format!("{name}: {:?}", report.failures.first()))?;
        for p in enumerate_all(&fib, 3).map_err(|e| e.to_string())? {
            let n = p.spec().n();
            let mut fillers: Vec<usize> = find_degenerate_solutions(&fib, &p)
                .into_iter()
                .map(|(z, j)| fib.total().degeneracy(n - 1, j, z))
                .collect();
            fillers.sort_unstable();
            fillers.dedup();
            ensure(fillers.len() <= 1, || format!("{name}: distinct degenerate fillers for {p:?}"))?;
        }
        total += report.instances;
    }
    Ok(format!("{total} problems"))
}

fn trace_lemmas() -> Outcome {
    let mut total = 0;
    for (name, fib, beta) in instances() {
        let trace = check_trace_lemmas(&fib, &beta, 3).map_err(|e| e.to_string())?;
        ensure(trace.is_ok(), || format!("{name}: {:?}", trace.failures.first()))?;
        ensure(trace.instances > 0, || format!("{name}: no degenerate-solvable problems"))?;
        let fixed = check_fixed_points(&fib, 3).map_err(|e| e.to_string())?;
        ensure(fixed.is_ok(), || format!("{name}: {:?}", fixed.failures.first()))?;
        total += trace.instances + fixed.instances;
    }
    Ok(format!("{total} instances"))
}

fn pullback_combinatorics() -> Outcome {
    let escape = check_face_escape(4).map_err(|e| e.to_string())?;
    ensure(escape.is_ok(), || format!("{:?}", escape.failures.first()))?;
    let expected: usize = (1..=4).map(|n| (n + 1) * (n + 1)).sum();
    ensure(escape.instances == expected, || {
        format!("{} (n, m, j) triples, expected {expected}", escape.instances)
    })?;
    let mut agree = 0;
    for (name, fib, beta) in instances() {
        let lifting = MalcevLifting::new(&fib, &beta).map_err(|e| e.to_string())?;
        let report = check_formulations_agree(&fib, &lifting, 3).map_err(|e| e.to_string())?;
        ensure(report.is_ok(), || format!("{name}: {:?}", report.failures.first()))?;
        agree += report.instances;
    }
    Ok(format!("{} triples, {agree} face formulas", escape.instances))
}

fn implication_chain() -> Outcome {
    let mut total = 0;
    for (name, fib, beta) in instances() {
        let malcev = MalcevLifting::new(&fib, &beta).map_err(|e| e.to_string())?;
        let first = FirstFiller { fib: &fib };
        let dp_first = degenerate_preferring_assignment(&fib, &first);
        for (label, lifts) in [("malcev", &malcev as &dyn LiftingStructure), ("dp-first", &dp_first)] {
            let sym = check_symmetric_effective(&fib, lifts, 3).map_err(|e| e.to_string())?;
            ensure(sym.is_ok(), || format!("{name} {label}: {:?}", sym.failures.first()))?;
            let expected = expected_symmetric_instances(&fib, 3).map_err(|e| e.to_string())?;
            ensure(sym.instances == expected, || format!("{name}: symmetric count {}", sym.instances))?;
            let eff = check_effective(&fib, &SignedLifts::duplicated(lifts), 3).map_err(|e| e.to_string())?;
            ensure(eff.is_ok(), || format!("{name} {label}: {:?}", eff.failures.first()))?;
            let expected = expected_effective_instances(&fib, 3).map_err(|e| e.to_string())?;
            ensure(eff.instances == expected, || format!("{name}: effective count {}", eff.instances))?;
            total += sym.instances + eff.instances;
        }
    }

    // negative control: on 2-cocycles, Λ^2_0 has one filler per group
    // element; swap the chosen one for the other
    let (fib, beta) = instance(cocycle_algebra(&FiniteGroup::cyclic(2), 3).unwrap());
    let lifting = MalcevLifting::new(&fib, &beta).map_err(|e| e.to_string())?;
    let table = LiftTable::tabulate(&fib, &lifting, 2).map_err(|e| e.to_string())?;
    let p = enumerate_problems(&fib, HornSpec::new(2, 0).unwrap()).map_err(|e| e.to_string())?.remove(0);
    let other = fib.total().lookup(2, "<1>").map_err(|e| e.to_string())?;
    ensure(table.get(&p) != Some(other), || "the mutation changes nothing".into())?;
    let broken = table.with_override(p, other);
    ensure(check_lifts(&fib, &broken, 2).map_err(|e| e.to_string())?.is_ok(), || {
        "the mutated assignment is not a lift".into()
    })?;
    let sym = check_symmetric_effective(&fib, &broken, 1).map_err(|e| e.to_string())?;
    let eff = check_effective(&fib, &SignedLifts::duplicated(&broken), 1).map_err(|e| e.to_string())?;
    let dp = check_degenerate_preferring(&fib, &broken, 2).map_err(|e| e.to_string())?;
    ensure(!sym.is_ok() && !eff.is_ok() && !dp.is_ok(), || {
        format!("false pass: symmetric {} effective {} dp {}", sym.is_ok(), eff.is_ok(), dp.is_ok())
    })?;
    Ok(format!("{total} instances, negative controls fire"))
}

/// Every sequence of two horn attachments on ambients up to 3.
fn two_step_sequences() -> Vec<(HornPushoutSequence, HornPushoutSequence)> {
    let mut out = Vec::new();
    for ambient in 1..=3 {
        for start in all_sieves(ambient) {
            for (s1, e1) in horn_attachments(&start) {
                let middle = attach_horn(&start, s1, &e1).unwrap();
                for (s2, e2) in horn_attachments(&middle) {
                    let first = Step {
                        generator: Generator::plain(s1),
                        embedding: e1.clone(),
                    };
                    let second = Step {
                        generator: Generator::plain(s2),
                        embedding: e2,
                    };
                    let a = HornPushoutSequence::new(start.clone(), vec![first]).unwrap();
                    let b = HornPushoutSequence::new(middle.clone(), vec![second]).unwrap();
                    out.push((a, b));
                }
            }
        }
    }
    out
}

fn awfs_layer() -> Outcome {
    let (fib, beta) = nerve_z2(4);
    let lifting = MalcevLifting::new(&fib, &beta).map_err(|e| e.to_string())?;
    let table = LiftTable::tabulate(&fib, &lifting, 3).map_err(|e| e.to_string())?;
    let first = FirstFiller { fib: &fib };

    let squares = face_squares(3, 2, false, CAP).map_err(|e| e.to_string())?;
    let mut face_instances = 0;
    for (label, lifts) in [("malcev", &table as &dyn LiftingStructure), ("first", &first)] {
        let report = sweep_squares("facesquares", &fib, Lifts::Plain(lifts), &squares, CAP).map_err(|e| e.to_string())?;
        ensure(report.is_ok(), || format!("face squares, {label}: {:?}", report.failures.first()))?;
        let expected = expected_square_instances(&fib, &squares).map_err(|e| e.to_string())?;
        ensure(report.instances == expected, || {
            format!("{} face-square extensions, expected {expected}", report.instances)
        })?;
        face_instances += report.instances;
    }

    let mut vertical = 0;
    for (a, b) in two_step_sequences() {
        let whole = a.then(&b).map_err(|e| e.to_string())?;
        for v in SieveMap::enumerate(fib.base(), whole.end(), None, CAP).map_err(|e| e.to_string())? {
            let v0 = v.restrict(whole.start()).map_err(|e| e.to_string())?;
            let va = v.restrict(a.end()).map_err(|e| e.to_string())?;
            for u in SieveMap::enumerate(fib.total(), whole.start(), Some((fib.projection(), &v0)), CAP)
                .map_err(|e| e.to_string())?
            {
                let at_once = extend_lift(&fib, Lifts::Plain(&table), &whole, &u, &v).map_err(|e| e.to_string())?;
                let middle = extend_lift(&fib, Lifts::Plain(&table), &a, &u, &va).map_err(|e| e.to_string())?;
                let stepwise = extend_lift(&fib, Lifts::Plain(&table), &b, &middle, &v).map_err(|e| e.to_string())?;
                ensure(at_once == stepwise, || format!("{whole:?} disagrees stepwise"))?;
                vertical += 1;
            }
        }
    }

    let d = check_d_squares(&fib, &table, 3).map_err(|e| e.to_string())?;
    ensure(d.is_ok(), || format!("d-squares: {:?}", d.failures.first()))?;
    let expected = expected_d_square_instances(&fib, 3);
    ensure(d.instances == expected, || format!("{} d-squares, expected {expected}", d.instances))?;
    let by_hand: usize = (1..=3)
        .map(|n| (0..n).map(|b| binomial(n, b) * (n + 1) * fib.total().len(b)).sum::<usize>())
        .sum();
    ensure(d.instances == by_hand, || format!("{} d-squares, counted {by_hand}", d.instances))?;
    Ok(format!(
        "{face_instances} face-square extensions, {vertical} two-step extensions, {} d-squares",
        d.instances
    ))
}

fn symmetric_but_not_dp() -> Outcome {
    let (fib, beta) = nerve_z2(4);
    let lifting = MalcevLifting::new(&fib, &beta).map_err(|e| e.to_string())?;
    let table = LiftTable::tabulate(&fib, &lifting, 3).map_err(|e| e.to_string())?;
    // Λ^1_1 with x_0 the only vertex: the degenerate filler and the
    // non-degenerate edge (1) both solve it
    let p = LiftingProblem::from_names(&fib, HornSpec::new(1, 1).unwrap(), &["()".into()], None)
        .map_err(|e| e.to_string())?;
    let edge = fib.total().lookup(1, "(1)").map_err(|e| e.to_string())?;
    ensure(fib.solves(&p, edge), || "(1) does not fill the horn".into())?;
    let modified = table.with_override(p.clone(), edge);
    ensure(check_lifts(&fib, &modified, 3).map_err(|e| e.to_string())?.is_ok(), || {
        "the modified assignment is not a lift".into()
    })?;
    let sym = check_symmetric_effective(&fib, &modified, 2).map_err(|e| e.to_string())?;
    ensure(sym.is_ok(), || format!("symmetric effective fails: {:?}", sym.failures.first()))?;
    let dp = check_degenerate_preferring(&fib, &modified, 3).map_err(|e| e.to_string())?;
    ensure(dp.failures.len() == 1 && dp.failures[0]["problem"] == p.encode(&fib), || {
        format!("dp failures: {:?}", dp.failures)
    })?;
    Ok("one dp failure, at the modified problem".into())
}

type Criterion = (usize, &'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "simplicial identities, n <= 5", simplicial_identities, Some(Duration::from_secs(5))),
        (2, "factorization round trip, dom, cod <= 6", factorization_round_trip, Some(Duration::from_secs(10))),
        (3, "horn count law, ambient <= 4", horn_count_law, None),
        (4, "Malcev lifts solve every problem, n <= 3", malcev_solves, Some(Duration::from_secs(60))),
        (5, "degenerate preference", degenerate_preference, None),
        (6, "trace and fixed-point lemmas", trace_lemmas, None),
        (7, "pullback combinatorics", pullback_combinatorics, None),
        (8, "implication chain and negative controls", implication_chain, None),
        (9, "lifting against horn pushout sequences", awfs_layer, None),
        (10, "symmetric effective but not degenerate-preferring", symmetric_but_not_dp, None),
    ];
    let suite = Instant::now();
    let mut failed = 0;
    for (id, title, run, limit) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took longer than {limit:?}")),
            (other, _) => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {title} ({detail}; {:.2?})", elapsed),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {title}: {why} ({:.2?})", elapsed)
            }
        }
    }
    let total = suite.elapsed();
    let suite_limit = Duration::from_secs(120);
    if total > suite_limit {
        failed += 1;
        println!("suite FAIL  took {total:.2?}, limit {suite_limit:?}");
    } else {
        println!("suite {total:.2?}");
    }
    if failed == 0 {
        println!("all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("{failed} failures");
        ExitCode::FAILURE
    }
}
