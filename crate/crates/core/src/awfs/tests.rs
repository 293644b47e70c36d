use super::*;
use crate::delta::{all_maps, compose, degeneracy_map, face_map, factorize, MonotoneMap};
use crate::kan::{
    check_effective, check_symmetric_effective, enumerate_problems, degenerate_preferring_assignment, FirstFiller,
    Fibration, LiftTable, LiftingProblem, MalcevLifting, SignedLifts,
};
use crate::salg::{cocycle_algebra, constant_algebra, nerve_abelian, section_from_point, FiniteGroup, FiniteMalcevAlgebra};
use crate::sieve::{all_sieves, horn, horn_attachments};

const CAP: usize = 1 << 20;

fn nerve_z2(n: usize) -> Fibration {
    Fibration::over_point(nerve_abelian(&FiniteGroup::cyclic(2), n).unwrap())
}

fn malcev_table(fib: &Fibration, maxdim: usize) -> LiftTable {
    let (_, _, beta) = section_from_point(fib.total(), 0).unwrap();
    let lifting = MalcevLifting::new(fib, &beta).unwrap();
    LiftTable::tabulate(fib, &lifting, maxdim).unwrap()
}

fn spec(n: usize, m: usize) -> HornSpec {
    HornSpec::new(n, m).unwrap()
}

fn step(n: usize, m: usize, sign: Option<Sign>, embedding: &[usize], ambient: usize) -> Step {
    Step {
        generator: Generator::new(spec(n, m), sign).unwrap(),
        embedding: MonotoneMap::new(n, ambient, embedding.to_vec()).unwrap(),
    }
}

fn vertex(ambient: usize, v: usize) -> Sieve {
    Sieve::generated_by(ambient, [1u64 << v]).unwrap()
}

/// The single-step sequence filling `Λ^n_m` to `Δ^n`.
fn horn_filling(n: usize, m: usize, sign: Option<Sign>) -> HornPushoutSequence {
    let id: Vec<usize> = (0..=n).collect();
    HornPushoutSequence::new(horn(spec(n, m)), vec![step(n, m, sign, &id, n)]).unwrap()
}

#[test]
fn generators_respect_sign_constraints() {
    assert!(Generator::new(spec(2, 0), Some(Sign::Plus)).is_err());
    assert!(Generator::new(spec(2, 2), Some(Sign::Minus)).is_err());
    assert!(Generator::new(spec(2, 1), Some(Sign::Minus)).is_ok());
    assert_eq!(Generator::new(spec(2, 1), Some(Sign::Plus)).unwrap().to_string(), "Λ^2_1+");
}

#[test]
fn sequences_reject_invalid_steps() {
    // Λ^1_0 on the edge {0,1} needs the vertex 0, not the vertex 1
    let bad = HornPushoutSequence::new(vertex(1, 1), vec![step(1, 0, None, &[0, 1], 1)]);
    assert!(matches!(bad, Err(AwfsError::InvalidStep { index: 0, .. })));
    let good = HornPushoutSequence::new(vertex(1, 0), vec![step(1, 0, None, &[0, 1], 1)]).unwrap();
    assert!(good.end().is_full());
    // attaching the same edge twice fails at the second step
    let twice = HornPushoutSequence::new(
        vertex(1, 0),
        vec![step(1, 0, None, &[0, 1], 1), step(1, 0, None, &[0, 1], 1)],
    );
    assert!(matches!(twice, Err(AwfsError::InvalidStep { index: 1, .. })));
}

fn walk(seq: &HornPushoutSequence, depth: usize, visit: &mut dyn FnMut(&HornPushoutSequence)) {
    visit(seq);
    if depth == 0 {
        return;
    }
    for (spec, embedding) in horn_attachments(seq.end()) {
        let next = HornPushoutSequence::new(
            seq.start().clone(),
            seq.steps()
                .iter()
                .cloned()
                .chain([Step {
                    generator: Generator::plain(spec),
                    embedding,
                }])
                .collect(),
        )
        .unwrap();
        walk(&next, depth - 1, visit);
    }
}

#[test]
fn count_law_on_small_ambients() {
    // counted directly: a sieve's non-degenerate simplices are its members
    for ambient in 1..=4 {
        let starts = all_sieves(ambient);
        let step_starts: Box<dyn Iterator<Item = &Sieve>> = if ambient < 4 {
            Box::new(starts.iter())
        } else {
            Box::new(starts.iter().step_by(7))
        };
        for start in step_starts {
            walk(&HornPushoutSequence::identity(start.clone()), 3, &mut |seq| {
                let k = seq.len();
                assert_eq!(seq.end().members().count(), seq.start().members().count() + 2 * k);
                for (i, s) in seq.steps().iter().enumerate() {
                    let (top, face) = s.added();
                    assert!(!seq.sieve(i).contains(top) && !seq.sieve(i).contains(face));
                    assert!(seq.sieve(i + 1).contains(top) && seq.sieve(i + 1).contains(face));
                }
            });
        }
    }
}

#[test]
fn chains_rebuild_sequences() {
    let seq = HornPushoutSequence::new(
        vertex(2, 0),
        vec![step(1, 0, None, &[0, 1], 2), step(1, 0, None, &[0, 2], 2), step(2, 0, None, &[0, 1, 2], 2)],
    )
    .unwrap();
    let rebuilt = HornPushoutSequence::from_sieve_chain(seq.sieves().to_vec(), |_, _| None).unwrap();
    assert_eq!(rebuilt, seq);
    let skipped = vec![seq.sieve(0).clone(), seq.sieve(2).clone()];
    assert!(HornPushoutSequence::from_sieve_chain(skipped, |_, _| None).is_err());
}

#[test]
fn sequence_json_round_trip() {
    let seq = horn_filling(2, 1, Some(Sign::Plus));
    let text = serde_json::to_string(&seq.to_json()).unwrap();
    assert!(text.contains("\"horn\":[2,1]"));
    assert!(text.contains("\"sign\":\"+\""));
    assert!(text.contains("\"embedding\":[0,1,2]"));
    let back: SequenceJson = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_sequence().unwrap(), seq);
    let plain = serde_json::to_string(&horn_filling(1, 0, None).to_json()).unwrap();
    assert!(plain.contains("\"sign\":null"));
}

#[test]
fn vertical_composition() {
    let id = MonotoneMap::identity(2);
    let first = HornPushoutSequence::new(vertex(2, 0), vec![step(1, 0, None, &[0, 1], 2)]).unwrap();
    let second = HornPushoutSequence::new(first.end().clone(), vec![step(1, 0, None, &[0, 2], 2)]).unwrap();
    let p = SequenceSquare::new(id.clone(), vec![0, 1], first.clone(), first.clone()).unwrap();
    let q = SequenceSquare::new(id.clone(), vec![0, 1], second.clone(), second.clone()).unwrap();
    let pq = compose_squares_vertical(&p, &q).unwrap();
    assert_eq!(pq.reindex(), &[0, 1, 2]);
    assert_eq!(pq.source().len(), 2);
    assert!(compose_squares_vertical(&q, &p).is_err());

    let unit = SequenceSquare::vertical_identity(id.clone(), first.start().clone()).unwrap();
    assert_eq!(compose_squares_vertical(&unit, &p).unwrap(), p);
    let unit = SequenceSquare::vertical_identity(id, first.end().clone()).unwrap();
    assert_eq!(compose_squares_vertical(&p, &unit).unwrap(), p);
}

#[test]
fn vertical_composition_of_collapsing_squares() {
    // s_0 : [2] -> [1] sends the first step to nothing: μ = (0, 0) on top of
    // a square that does all the work
    let f = degeneracy_map(1, 0).unwrap();
    let target = HornPushoutSequence::new(vertex(1, 0), vec![step(1, 0, None, &[0, 1], 1)]).unwrap();
    let squares = pullback_squares(&f, &target, CAP).unwrap();
    assert!(!squares.is_empty());
    for sq in &squares {
        let k = sq.source().len();
        assert_eq!(sq.reindex(), &[0, k]);
        let stacked = compose_squares_vertical(
            &SequenceSquare::vertical_identity(f.clone(), target.start().clone()).unwrap(),
            sq,
        )
        .unwrap();
        assert_eq!(&stacked, sq);
    }
}

#[test]
fn square_validation_and_kinds() {
    let target = HornPushoutSequence::new(vertex(2, 0), vec![step(1, 0, None, &[0, 1], 2)]).unwrap();
    // d_1 picks the edge {0,2}, which the sequence never touches
    let d1 = face_map(1, 1).unwrap();
    let squares = pullback_squares(&d1, &target, CAP).unwrap();
    assert_eq!(squares.len(), 1);
    assert_eq!(squares[0].source().len(), 0);
    assert_eq!(squares[0].reindex(), &[0, 0]);
    assert_eq!(squares[0].kind(), SquareKind::Face);

    let d2 = face_map(1, 2).unwrap();
    let sq = &pullback_squares(&d2, &target, CAP).unwrap()[0];
    assert_eq!(sq.source().len(), 1);
    assert_eq!(sq.reindex(), &[0, 1]);
    assert!(matches!(
        SequenceSquare::new(d2.clone(), vec![0, 0], sq.source().clone(), target.clone()),
        Err(AwfsError::InvalidReindex(_))
    ));
    assert!(matches!(
        SequenceSquare::new(d1, vec![0, 1], sq.source().clone(), target.clone()),
        Err(AwfsError::NotPullback { index: 1 })
    ));

    // a face onto the missing face of a horn pulls back to the boundary of
    // an edge, which no sequence fills
    let d1 = face_map(1, 1).unwrap();
    assert!(pullback_squares(&d1, &horn_filling(2, 1, None), CAP).unwrap().is_empty());

    let target = horn_filling(2, 1, None);
    let s0 = degeneracy_map(2, 0).unwrap();
    assert_eq!(pullback_squares(&s0, &target, CAP).unwrap()[0].kind(), SquareKind::Degeneracy);
    let json = serde_json::to_string(&sq.to_json()).unwrap();
    let back: SquareJson = serde_json::from_str(&json).unwrap();
    assert_eq!(&back.to_square().unwrap(), sq);
}

#[test]
fn horizontal_composition_matches_the_composite_map() {
    let target = horn_filling(2, 1, None);
    let s1 = degeneracy_map(2, 1).unwrap();
    let d3 = face_map(2, 3).unwrap();
    for right in pullback_squares(&s1, &target, CAP).unwrap() {
        for left in pullback_squares(&d3, right.source(), CAP).unwrap() {
            let both = compose_squares_horizontal(&left, &right).unwrap();
            assert_eq!(both.f(), &crate::delta::compose(&s1, &d3).unwrap());
            assert_eq!(both.source(), left.source());
            assert_eq!(both.target(), &target);
        }
    }
}

#[test]
fn decomposition_examples() {
    // a single degeneracy decomposes as itself
    let target = horn_filling(2, 1, None);
    let s0 = degeneracy_map(2, 0).unwrap();
    let sq = pullback_squares(&s0, &target, CAP).unwrap().remove(0);
    assert_eq!(decompose_horizontal(&sq, 1000), Decomposition::Found(vec![sq.clone()]));

    // s_0 ∘ d_2 : [2] -> [2] over the filling of Λ^2_0
    let f = crate::delta::compose(&degeneracy_map(2, 0).unwrap(), &face_map(2, 2).unwrap()).unwrap();
    let target = horn_filling(2, 0, None);
    for sq in pullback_squares(&f, &target, CAP).unwrap() {
        let Decomposition::Found(parts) = decompose_horizontal(&sq, 10_000) else {
            panic!("no decomposition");
        };
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].kind(), SquareKind::Degeneracy);
        assert_eq!(parts[1].kind(), SquareKind::Face);
        assert_eq!(parts[1].source().start(), &crate::sieve::pullback_sieve(&face_map(1, 1).unwrap(), target.start()).unwrap());
        assert_eq!(recompose(&parts).unwrap().unwrap(), sq);
    }
}

#[test]
fn decompositions_recompose_on_small_ambients() {
    let mut found = 0;
    for b in 1..=2 {
        for start in all_sieves(b) {
            for (spec, embedding) in horn_attachments(&start) {
                let target = HornPushoutSequence::new(
                    start.clone(),
                    vec![Step {
                        generator: Generator::plain(spec),
                        embedding,
                    }],
                )
                .unwrap();
                for a in 0..=3 {
                    for f in all_maps(a, b) {
                        for sq in pullback_squares(&f, &target, CAP).unwrap() {
                            if let Decomposition::Found(parts) = decompose_horizontal(&sq, 10_000) {
                                found += 1;
                                if let Some(back) = recompose(&parts).unwrap() {
                                    assert_eq!(back, sq);
                                }
                                assert!(parts.iter().all(|p| p.kind() != SquareKind::Composite));
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(found > 0);
}

#[test]
fn decomposability_probe_runs() {
    let canonical = probe_decomposability(2, 10_000, WordChoice::Canonical, CAP).unwrap();
    assert!(canonical.squares > 0);
    assert_eq!(canonical.squares, canonical.decomposed + canonical.not_found.len());
    assert_eq!(canonical.budget_exhausted, 0);
    let all = probe_decomposability(2, 10_000, WordChoice::AllMinimal, CAP).unwrap();
    assert_eq!(all.squares, canonical.squares);
    assert!(all.decomposed >= canonical.decomposed);
}

#[test]
fn minimal_words_compose_to_the_map() {
    for a in 0..=3 {
        for b in 0..=3 {
            for f in all_maps(a, b) {
                let canonical: Vec<MonotoneMap> = factorize(&f).generators().iter().map(|g| g.to_map()).collect();
                let words = minimal_words(&f);
                assert!(words.contains(&canonical), "{f:?}");
                for w in &words {
                    assert_eq!(w.len(), canonical.len());
                    let composite = w.iter().fold(MonotoneMap::identity(a), |acc, g| compose(g, &acc).unwrap());
                    assert_eq!(composite, f);
                }
            }
        }
    }
    // s_0 s_1 = s_0 s_0 on [2] -> [0]: both words appear
    assert_eq!(minimal_words(&MonotoneMap::new(2, 0, vec![0, 0, 0]).unwrap()).len(), 2);
}

#[test]
fn extension_along_the_empty_sequence_is_the_identity() {
    let fib = nerve_z2(3);
    let table = malcev_table(&fib, 3);
    let seq = HornPushoutSequence::identity(horn(spec(2, 1)));
    for u in SieveMap::enumerate(fib.total(), seq.start(), None, CAP).unwrap() {
        let v = u.push_forward(fib.projection());
        assert_eq!(extend_lift(&fib, Lifts::Plain(&table), &seq, &u, &v).unwrap(), u);
    }
}

#[test]
fn extension_along_one_horn_is_the_lift() {
    let fib = nerve_z2(3);
    let table = malcev_table(&fib, 3);
    for n in 1..=3 {
        for m in 0..=n {
            let seq = horn_filling(n, m, None);
            let full = Sieve::full(n).unwrap();
            let v = SieveMap::of_simplex(fib.base(), n, 0).unwrap();
            for u in SieveMap::enumerate(fib.total(), seq.start(), None, CAP).unwrap() {
                let w = extend_lift(&fib, Lifts::Plain(&table), &seq, &u, &v).unwrap();
                let facets = (0..=n)
                    .filter(|&k| k != m)
                    .map(|k| u.get(full_mask(n) & !(1 << k)).unwrap())
                    .collect();
                let p = LiftingProblem::new(&fib, spec(n, m), facets, 0).unwrap();
                let h = table.get(&p).unwrap();
                assert_eq!(w.get(full_mask(n)), Some(h));
                assert_eq!(w, SieveMap::of_simplex(fib.total(), n, h).unwrap());
                assert_eq!(w.restrict(&full).unwrap(), w);
            }
        }
    }
}

fn full_mask(n: usize) -> u64 {
    (1u64 << (n + 1)) - 1
}

#[test]
fn extension_is_compatible_with_vertical_composition() {
    let fib = nerve_z2(3);
    let table = malcev_table(&fib, 3);
    let first = HornPushoutSequence::new(
        vertex(2, 0),
        vec![step(1, 0, None, &[0, 1], 2), step(1, 0, None, &[0, 2], 2)],
    )
    .unwrap();
    let second = HornPushoutSequence::new(first.end().clone(), vec![step(2, 0, None, &[0, 1, 2], 2)]).unwrap();
    let whole = first.then(&second).unwrap();
    for v in SieveMap::enumerate(fib.base(), whole.end(), None, CAP).unwrap() {
        let v0 = v.restrict(whole.start()).unwrap();
        for u in SieveMap::enumerate(fib.total(), whole.start(), Some((fib.projection(), &v0)), CAP).unwrap() {
            let at_once = extend_lift(&fib, Lifts::Plain(&table), &whole, &u, &v).unwrap();
            let middle =
                extend_lift(&fib, Lifts::Plain(&table), &first, &u, &v.restrict(first.end()).unwrap()).unwrap();
            let stepwise = extend_lift(&fib, Lifts::Plain(&table), &second, &middle, &v).unwrap();
            assert_eq!(at_once, stepwise);
            // a second run produces the same table
            assert_eq!(extend_lift(&fib, Lifts::Plain(&table), &whole, &u, &v).unwrap(), at_once);
        }
    }
}

#[test]
fn extension_preconditions() {
    let fib = nerve_z2(2);
    let table = malcev_table(&fib, 2);
    let seq = horn_filling(2, 1, None);
    let v = SieveMap::of_simplex(fib.base(), 2, 0).unwrap();
    let u = SieveMap::of_simplex(fib.total(), 2, 0).unwrap();
    assert!(matches!(
        extend_lift(&fib, Lifts::Plain(&table), &seq, &u, &v),
        Err(AwfsError::Precondition(_))
    ));
    let signed = SignedLifts::duplicated(&table);
    let u = u.restrict(seq.start()).unwrap();
    assert!(matches!(
        extend_lift(&fib, Lifts::signed(&signed), &seq, &u, &v),
        Err(AwfsError::MissingSign(_))
    ));
    let deep = horn_filling(3, 1, None);
    assert!(SieveMap::enumerate(fib.total(), deep.start(), None, CAP).is_ok());
    assert!(SieveMap::enumerate(fib.base(), deep.end(), None, CAP).is_err());
}

#[test]
fn sieve_maps_pull_back_like_simplices() {
    let x = nerve_abelian(&FiniteGroup::cyclic(3), 3).unwrap();
    for z in 0..x.len(3) {
        let map = SieveMap::of_simplex(&x, 3, z).unwrap();
        for f in all_maps(2, 3) {
            let pulled = map.pullback(&x, &f).unwrap();
            assert_eq!(pulled, SieveMap::of_simplex(&x, 2, x.act(z, &f).unwrap()).unwrap());
        }
    }
    let bad: std::collections::BTreeMap<u64, usize> = [(1, 0), (2, 0), (3, 1)].into_iter().collect();
    let edge = Sieve::full(1).unwrap();
    assert!(SieveMap::new(&x, edge.clone(), bad).is_ok());
    let bad: std::collections::BTreeMap<u64, usize> = [(1, 0), (3, 1)].into_iter().collect();
    assert!(SieveMap::new(&x, edge, bad).is_err());
}

#[test]
fn face_squares_always_pass() {
    let fib = nerve_z2(3);
    let dp = malcev_table(&fib, 3);
    let first = FirstFiller { fib: &fib };
    let squares = face_squares(3, 2, false, CAP).unwrap();
    assert!(squares.iter().all(|s| s.kind() == SquareKind::Face));
    for lifts in [&dp as &dyn crate::kan::LiftingStructure, &first] {
        let report = sweep_squares("facesquares", &fib, Lifts::Plain(lifts), &squares, CAP).unwrap();
        assert!(report.is_ok(), "{:?}", report.failures.first());
        assert!(report.instances > squares.len());
    }
}

#[test]
fn signed_face_squares_pass_for_unrelated_signs() {
    let x = cocycle_algebra(&FiniteGroup::cyclic(2), 3).unwrap();
    let fib = Fibration::over_point(x);
    let table = malcev_table(&fib, 3);
    let first = FirstFiller { fib: &fib };
    let signed = SignedLifts {
        plus: &table,
        minus: &first,
    };
    let squares = face_squares(2, 2, true, CAP).unwrap();
    let report = sweep_squares("facesquares", &fib, Lifts::signed(&signed), &squares, CAP).unwrap();
    assert!(report.is_ok(), "{:?}", report.failures.first());
}

/// Sources with the shape predicted by the case analysis: faces `j'` and
/// `j'+1` first, then the degenerate simplex. Other attachment orders give
/// valid squares as well and are reported as unexpected shapes.
fn canonical(squares: &[SequenceSquare]) -> Vec<(&SequenceSquare, IotaStar)> {
    squares
        .iter()
        .filter_map(|sq| match iota_star(sq) {
            Ok(star) => Some((sq, star)),
            Err(AwfsError::UnexpectedShape(_)) => None,
            Err(e) => panic!("{e}"),
        })
        .collect()
}

#[test]
fn iota_star_shapes() {
    // (n, m) = (2, 2) with j' = 0: three steps ending in Λ^3_3
    let target = horn_filling(2, 2, None);
    let squares = pullback_squares(&degeneracy_map(2, 0).unwrap(), &target, CAP).unwrap();
    let shaped = canonical(&squares);
    assert_eq!(shaped.len(), 2);
    assert!(squares.len() > shaped.len());
    for (sq, star) in shaped {
        assert_eq!((star.j_prime, star.length, star.m_star), (0, 3, 3));
        assert_eq!(star.generator.spec(), spec(3, 3));
        let pulled = crate::sieve::pullback_sieve(sq.f(), target.end()).unwrap();
        assert_eq!(sq.source().end(), &pulled);
    }

    // (n, m) = (2, 1) with j' = 1: two steps, m* decided by the first face
    let target = horn_filling(2, 1, None);
    let squares = pullback_squares(&degeneracy_map(2, 1).unwrap(), &target, CAP).unwrap();
    let mut m_stars: Vec<usize> = canonical(&squares).iter().map(|(_, star)| star.m_star).collect();
    m_stars.sort();
    assert_eq!(m_stars, vec![1, 2]);

    // embedded in a larger simplex, j misses the image
    let target = HornPushoutSequence::new(
        crate::sieve::Sieve::generated_by(2, [0b001]).unwrap(),
        vec![step(1, 0, None, &[0, 1], 2)],
    )
    .unwrap();
    let sq = pullback_squares(&degeneracy_map(2, 2).unwrap(), &target, CAP).unwrap().remove(0);
    assert_eq!(sq.source().len(), 1);
    assert!(matches!(iota_star(&sq), Err(AwfsError::Precondition(_))));
}

#[test]
fn iota_star_carries_the_target_sign() {
    let target = horn_filling(2, 1, Some(Sign::Minus));
    let squares = pullback_squares(&degeneracy_map(2, 0).unwrap(), &target, CAP).unwrap();
    for (_, star) in canonical(&squares) {
        assert!(star.respects_sign());
        assert_eq!(star.generator.sign(), Some(Sign::Minus));
    }
}

#[test]
fn iota_star_predictions_hold_everywhere() {
    for n in 1..=3 {
        for m in 0..=n {
            let target = horn_filling(n, m, None);
            for j in 0..=n {
                let squares = pullback_squares(&degeneracy_map(n, j).unwrap(), &target, CAP).unwrap();
                let shaped = canonical(&squares);
                // either face may go first
                assert_eq!(shaped.len(), 2, "n={n} m={m} j={j}");
                let admissible = crate::kan::horn_pullback_indices(n, m, j).unwrap();
                for (_, star) in shaped {
                    assert!(admissible.iter().any(|&(ms, _)| ms == star.m_star));
                    assert_eq!(star.length, if j == m { 2 } else { 3 });
                }
            }
        }
    }
}

#[test]
fn degeneracy_squares_missing_the_simplex_always_pass() {
    let x = cocycle_algebra(&FiniteGroup::cyclic(2), 3).unwrap();
    let fib = Fibration::over_point(x);
    let table = malcev_table(&fib, 3);
    let p = enumerate_problems(&fib, spec(2, 0)).unwrap().remove(0);
    let other = fib.total().lookup(2, "<1>").unwrap();
    let broken = table.with_override(p, other);
    let squares: Vec<SequenceSquare> = degeneracy_squares(2, 2, false, CAP)
        .unwrap()
        .into_iter()
        .filter(|sq| matches!(iota_star(sq), Err(AwfsError::Precondition(_))))
        .collect();
    assert!(!squares.is_empty());
    let report = sweep_squares("degeneracy", &fib, Lifts::Plain(&broken), &squares, CAP).unwrap();
    assert!(report.is_ok(), "{:?}", report.failures.first());
}

#[test]
fn degeneracy_squares_detect_a_broken_assignment() {
    let x = cocycle_algebra(&FiniteGroup::cyclic(2), 3).unwrap();
    let fib = Fibration::over_point(x);
    let table = malcev_table(&fib, 3);
    let squares = degeneracy_squares(2, 2, false, CAP).unwrap();
    let good = sweep_squares("degeneracy", &fib, Lifts::Plain(&table), &squares, CAP).unwrap();
    assert!(good.is_ok(), "{:?}", good.failures.first());

    let p = enumerate_problems(&fib, spec(2, 0)).unwrap().remove(0);
    let other = fib.total().lookup(2, "<1>").unwrap();
    let broken = table.with_override(p, other);
    let bad = sweep_squares("degeneracy", &fib, Lifts::Plain(&broken), &squares, CAP).unwrap();
    assert!(!bad.is_ok());
    assert_eq!(bad.instances, good.instances);
}

#[test]
fn d_squares_characterize_degenerate_preference() {
    let fib = nerve_z2(4);
    let table = malcev_table(&fib, 3);
    let report = check_d_squares(&fib, &table, 3).unwrap();
    assert!(report.is_ok(), "{:?}", report.failures.first());
    // one instance per non-identity epi [n] -> [b], horn and b-simplex
    let binomial = |n: usize, k: usize| (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
    let expected: usize = (1..=3)
        .map(|n| (0..n).map(|b| binomial(n, b) * (n + 1) * fib.total().len(b)).sum::<usize>())
        .sum();
    assert_eq!(report.instances, expected);

    // Λ^1_1 over the vertex is z ∘ s_0 for the only vertex z
    let p = LiftingProblem::from_names(&fib, spec(1, 1), &["()".into()], None).unwrap();
    let edge = fib.total().lookup(1, "(1)").unwrap();
    let broken = table.clone().with_override(p.clone(), edge);
    let report = check_d_squares(&fib, &broken, 3).unwrap();
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0]["problem"], p.encode(&fib));
}

#[test]
fn single_d_square() {
    let x = constant_algebra(&FiniteMalcevAlgebra::heyting_chain(2), 2);
    let fib = Fibration::over_point(x);
    let table = malcev_table(&fib, 2);
    let s0 = degeneracy_map(0, 0).unwrap();
    for z in 0..2 {
        for m in 0..=1 {
            assert!(check_d_square(&fib, &table, &s0, spec(1, m), z, 0).unwrap().is_ok());
        }
    }
    assert!(matches!(
        check_d_square(&fib, &table, &MonotoneMap::identity(1), spec(1, 0), 0, 0),
        Err(AwfsError::Precondition(_))
    ));
    let z2 = nerve_z2(2);
    let y = nerve_abelian(&FiniteGroup::cyclic(2), 2).unwrap();
    let alpha = crate::salg::SimplicialMap::new(z2.total(), &y, vec![vec![0], vec![0, 1], vec![0, 1, 2, 3]]).unwrap();
    let fib = Fibration::new(z2.total().clone(), y, alpha).unwrap();
    let table = LiftTable::tabulate(&fib, &FirstFiller { fib: &fib }, 2).unwrap();
    let s0 = degeneracy_map(1, 0).unwrap();
    assert!(matches!(
        check_d_square(&fib, &table, &s0, spec(2, 1), 1, 0),
        Err(AwfsError::Incompatible(_))
    ));
}

/// Signed lifts agree with the effective checker on every sign-respecting
/// degeneracy square.
fn signed_agreement(fib: &Fibration, signed: &SignedLifts<'_>, max_ambient: usize, maxdim: usize) -> (bool, bool) {
    let effective = check_effective(fib, signed, maxdim).unwrap().is_ok();
    let squares: Vec<SequenceSquare> = degeneracy_squares(max_ambient, maxdim, true, CAP)
        .unwrap()
        .into_iter()
        .filter(|sq| iota_star(sq).map_or(true, |s| s.respects_sign()))
        .chain(face_squares(max_ambient, 1, true, CAP).unwrap())
        .collect();
    let respected = sweep_squares("signed", fib, Lifts::signed(signed), &squares, CAP)
        .unwrap()
        .is_ok();
    (effective, respected)
}

#[test]
fn signed_squares_characterize_effective_lifts() {
    let fib = nerve_z2(4);
    let table = malcev_table(&fib, 4);
    assert_eq!(signed_agreement(&fib, &SignedLifts::duplicated(&table), 3, 3), (true, true));

    let x = cocycle_algebra(&FiniteGroup::cyclic(2), 3).unwrap();
    let fib = Fibration::over_point(x);
    let table = malcev_table(&fib, 3);
    assert_eq!(signed_agreement(&fib, &SignedLifts::duplicated(&table), 2, 2), (true, true));
    let p = enumerate_problems(&fib, spec(2, 0)).unwrap().remove(0);
    let other = fib.total().lookup(2, "<1>").unwrap();
    let broken = table.clone().with_override(p, other);
    let signed = SignedLifts {
        plus: &table,
        minus: &broken,
    };
    assert_eq!(signed_agreement(&fib, &signed, 2, 2), (false, false));
    let dp = degenerate_preferring_assignment(&fib, &broken);
    let fixed = LiftTable::tabulate(&fib, &dp, 3).unwrap();
    let signed = SignedLifts {
        plus: &table,
        minus: &fixed,
    };
    assert_eq!(signed_agreement(&fib, &signed, 2, 2), (true, true));
}

#[test]
fn plain_squares_characterize_symmetric_effective_lifts() {
    let x = cocycle_algebra(&FiniteGroup::cyclic(2), 3).unwrap();
    let fib = Fibration::over_point(x);
    let table = malcev_table(&fib, 3);
    let p = enumerate_problems(&fib, spec(2, 0)).unwrap().remove(0);
    let other = fib.total().lookup(2, "<1>").unwrap();
    let broken = table.clone().with_override(p, other);
    let squares = degeneracy_squares(2, 2, false, CAP).unwrap();
    for lifts in [&table, &broken] {
        let symmetric = check_symmetric_effective(&fib, lifts, 2).unwrap().is_ok();
        let respected = sweep_squares("plain", &fib, Lifts::Plain(lifts), &squares, CAP).unwrap().is_ok();
        assert_eq!(symmetric, respected);
    }
}

#[test]
fn composed_lifts_solve_composite_problems() {
    let (upper, lower) = z4_over_z2();
    let upper_lifts = FirstFiller { fib: &upper };
    let lower_table = malcev_table(&lower, 3);
    let composed = ComposedLifts::new(&upper, &upper_lifts, &lower, &lower_table).unwrap();
    let report = crate::kan::check_lifts(composed.composite(), &composed, 3).unwrap();
    assert!(report.is_ok(), "{:?}", report.failures.first());
    assert!(ComposedLifts::new(&lower, &lower_table, &upper, &upper_lifts).is_err());
}

#[test]
fn square_instance_counts_match_over_a_base() {
    let (upper, _) = z4_over_z2();
    let lifts = FirstFiller { fib: &upper };
    let squares: Vec<SequenceSquare> = face_squares(2, 2, false, CAP)
        .unwrap()
        .into_iter()
        .chain(degeneracy_squares(2, 2, false, CAP).unwrap())
        .collect();
    let report = sweep_squares("squares", &upper, Lifts::Plain(&lifts), &squares, CAP).unwrap();
    assert!(report.instances > squares.len());
    assert_eq!(report.instances, expected_square_instances(&upper, &squares).unwrap());
}

/// Nerve of Z/4 over nerve of Z/2 by reduction, and nerve of Z/2 over a point.
fn z4_over_z2() -> (Fibration, Fibration) {
    let z4 = nerve_abelian(&FiniteGroup::cyclic(4), 3).unwrap();
    let z2 = nerve_abelian(&FiniteGroup::cyclic(2), 3).unwrap();
    let components = (0..=3)
        .map(|l| {
            (0..z4.len(l))
                .map(|e| {
                    let name = z4.name(l, e);
                    let reduced: String = name
                        .chars()
                        .map(|c| c.to_digit(10).map_or(c, |d| char::from_digit(d % 2, 10).unwrap()))
                        .collect();
                    z2.lookup(l, &reduced).unwrap()
                })
                .collect()
        })
        .collect();
    let alpha = crate::salg::SimplicialMap::new(&z4, &z2, components).unwrap();
    let upper = Fibration::new(z4, z2.clone(), alpha).unwrap();
    (upper, Fibration::over_point(z2))
}
