use super::*;
use crate::groups::parse_element;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BUDGET: usize = 1_000_000;
type Gae = GroupAlgebraElement<Complex64>;

fn f2() -> GroupModel {
    r#"{"kind":"free","rank":2,"marked":"a"}"#.parse().unwrap()
}

fn z2() -> GroupModel {
    r#"{"kind":"finitely_generated_abelian","invariants":[0,0],"marked":[[1,0]]}"#.parse().unwrap()
}

fn cat_map() -> GroupModel {
    r#"{"kind":"semidirect","matrix":[[2,1],[1,1]],"marked":"acting_Z"}"#.parse().unwrap()
}

fn f2_times_z2() -> GroupModel {
    r#"{"kind":"direct_product","factors":[{"kind":"free","rank":2,"marked":"a"},{"kind":"finite_cyclic","n":2,"marked":"whole"}]}"#
        .parse()
        .unwrap()
}

fn el(m: &GroupModel, s: &str) -> Element {
    parse_element(m, s).unwrap()
}

fn x(m: &GroupModel, s: &str) -> Gae {
    Gae::parse(m, s).unwrap()
}

#[test]
fn conditional_expectation_examples() {
    let m = f2();
    assert_eq!(conditional_expectation(&m, &x(&m, "a^2")).unwrap(), x(&m, "a^2"));
    let conj = x(&m, "b").mul(&m, &x(&m, "a")).unwrap().mul(&m, &x(&m, "b^-1")).unwrap();
    assert!(conditional_expectation(&m, &conj).unwrap().is_zero());
    let z = z2();
    for k in -3..=3 {
        let ak = format!("({k},0)");
        let y = expectation_of_twisted(&z, &x(&z, "(0,1)"), &el(&z, &ak), &x(&z, "(0,1)")).unwrap();
        assert_eq!(y, x(&z, &ak));
    }
}

#[test]
fn st_examples() {
    let m = f2();
    let f = [el(&m, "b"), el(&m, "b^-1")];
    let r = st_condition(&m, &f, 8, 10, BUDGET).unwrap();
    assert_eq!(r.verdict, StVerdict::HoldsWithE(vec![]));
    assert!(r.witnesses.is_empty());

    let z = z2();
    let f = [el(&z, "(0,1)"), el(&z, "(0,-1)")];
    let r = st_condition(&z, &f, 8, 10, BUDGET).unwrap();
    assert_eq!(r.verdict, StVerdict::Violation);
    for (g, g0, h) in &r.witnesses {
        assert!(z.in_marked(&z.product([g, g0, h]).unwrap()).unwrap());
    }
    assert!(r.witnesses.iter().any(|(_, g0, _)| *g0 == el(&z, "(8,0)")));

    let s = cat_map();
    let f = [el(&s, "((1,0),0)"), el(&s, "((-1,0),0)")];
    let r = st_condition(&s, &f, 10, 10, BUDGET).unwrap();
    assert!(matches!(r.verdict, StVerdict::HoldsWithE(ref e) if e.len() <= 10));

    assert!(matches!(
        st_condition(&m, &[el(&m, "a")], 3, 1, BUDGET),
        Err(MasaError::FIntersectsMarked(_))
    ));
}

#[test]
fn st_exceptions_are_finite_for_arbitrary_f_in_free_group() {
    let m = f2();
    let f = [el(&m, "b"), el(&m, "a*b^-1")];
    let r = st_condition(&m, &f, 8, 10, BUDGET).unwrap();
    assert_eq!(r.verdict, StVerdict::HoldsWithE(vec![el(&m, "a^-1")]));
}

#[test]
fn stabilizer_examples() {
    let m = f2();
    let r = stabilizer_kg(&m, &el(&m, "b"), 6, BUDGET).unwrap();
    assert_eq!(r.structure, KgStructure::Trivial);
    assert!(r.exact && r.found.is_empty());

    let t = f2_times_z2();
    let r = stabilizer_kg(&t, &el(&t, "[b; (0)]"), 4, BUDGET).unwrap();
    let KgStructure::Finite(list) = &r.structure else {
        panic!("{:?}", r.structure)
    };
    assert_eq!(list.len(), 2);
    assert!(list.contains(&(el(&t, "[e; (1)]"), el(&t, "[e; (1)]"))));
    assert_eq!(r.found, vec![(el(&t, "[e; (1)]"), el(&t, "[e; (1)]"))]);

    let z = z2();
    let r = stabilizer_kg(&z, &el(&z, "(0,1)"), 3, BUDGET).unwrap();
    assert_eq!(r.structure, KgStructure::Infinite);
    assert!(r.found.contains(&(el(&z, "(2,0)"), el(&z, "(-2,0)"))));

    let s = cat_map();
    assert_eq!(stabilizer_kg(&s, &el(&s, "((1,0),0)"), 5, BUDGET).unwrap().structure, KgStructure::Trivial);
    let sq: GroupModel = r#"{"kind":"free","rank":2,"marked":"a^2"}"#.parse().unwrap();
    assert_eq!(stabilizer_kg(&sq, &el(&sq, "a"), 3, BUDGET).unwrap().structure, KgStructure::Infinite);
}

#[test]
fn malnormal_and_icc_examples() {
    let m = f2();
    let r = malnormality_check(&m, 5, BUDGET).unwrap();
    assert!(r.malnormal && r.witness.is_none());
    let z = z2();
    let r = malnormality_check(&z, 3, BUDGET).unwrap();
    assert!(!r.malnormal);
    assert_eq!(r.witness.unwrap().0, el(&z, "(0,1)"));
    let icc = icc_check(&m, 3, None, BUDGET).unwrap();
    assert!(icc.all_exceed && icc.min_class_size > 6);
    assert!(!icc_check(&z, 2, None, BUDGET).unwrap().all_exceed);
}

#[test]
fn cesaro_examples() {
    let m = f2();
    let a = el(&m, "a");
    let r = cesaro_diagnostics(&m, &x(&m, "b"), &a, 50).unwrap();
    assert_eq!((r.i, r.i_prime, r.ii, r.ii_prime), (0.0, 0.0, 0.0, 0.0));
    assert!(r.all_vanish);
    let z = z2();
    let r = cesaro_diagnostics(&z, &x(&z, "(0,1)"), &el(&z, "(1,0)"), 50).unwrap();
    assert_eq!((r.i, r.i_prime, r.ii, r.ii_prime), (1.0, 1.0, 1.0, 1.0));
    assert!(!r.all_vanish && r.l1_exact);
    let r = cesaro_diagnostics(&m, &Gae::zero(), &a, 10).unwrap();
    assert!(r.all_vanish);
    assert!(matches!(cesaro_diagnostics(&m, &x(&m, "a + b"), &a, 5), Err(MasaError::NotMeanZero)));
    assert!(cesaro_diagnostics(&m, &x(&m, "b"), &el(&m, "b"), 5).is_err());
}

#[test]
fn l1_norm_quadrature_on_torus() {
    let z = z2();
    // |1 + e^{2πiθ}| integrates to 4/π
    let y = x(&z, "(0,0) + (1,0)");
    let (v, exact) = l1_norm(&z, &y).unwrap();
    assert!(!exact);
    assert!((v - 4.0 / std::f64::consts::PI).abs() < 1e-3);
    let fin: GroupModel = r#"{"kind":"finite_cyclic","n":4,"marked":"whole"}"#.parse().unwrap();
    let (v, exact) = l1_norm(&fin, &x(&fin, "(0) + (2)")).unwrap();
    assert!(exact);
    assert!((v - 1.0).abs() < 1e-12);
}

#[test]
fn ahp_examples() {
    let m = f2();
    let fam = vec![x(&m, "b"), x(&m, "b^2")];
    assert_eq!(ahp_subsequence(&m, &fam, &el(&m, "a"), 5, 100).unwrap(), AhpResult::Found(vec![1, 2, 3, 4, 5]));
    assert_eq!(ahp_subsequence(&m, &[], &el(&m, "a"), 5, 100).unwrap(), AhpResult::Found(vec![1, 2, 3, 4, 5]));
    let z = z2();
    assert!(matches!(
        ahp_subsequence(&z, &[x(&z, "(0,1)")], &el(&z, "(1,0)"), 5, 100).unwrap(),
        AhpResult::Inconclusive { .. }
    ));
}

#[test]
fn wandering_examples() {
    let m = f2();
    let a = el(&m, "a");
    let r = wandering_test(&m, &x(&m, "b"), &a, 50, 1e-12).unwrap();
    assert!(r.wandering && r.max_defect == 0.0);
    // cross terms b a^n a^-1 b^-1 vanish in ⟨a⟩ only at n = 1, giving e
    let r = wandering_test(&m, &x(&m, "b + b*a"), &a, 50, 1e-12).unwrap();
    assert!(!r.wandering);
    assert_eq!(r.max_defect, 1.0);
    assert_eq!(r.worst_n.map(i64::abs), Some(1));
    let r = wandering_test(&m, &x(&m, "b + a*b"), &a, 50, 1e-12).unwrap();
    assert!(r.wandering);
    assert!(wandering_test(&m, &Gae::zero(), &a, 50, 1e-12).unwrap().wandering);
}

#[test]
fn summability_examples() {
    let m = f2();
    let a = el(&m, "a");
    let r = summability_identity(&m, &Gae::zero(), &Gae::zero(), &a).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    let r = summability_identity(&m, &x(&m, "b"), &x(&m, "b"), &a).unwrap();
    assert_eq!((r.lhs, r.rhs, r.ks.clone()), (1.0, 1.0, vec![0]));
    let r = summability_identity(&m, &x(&m, "b"), &x(&m, "b^-1"), &a).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    let z = z2();
    assert!(matches!(
        summability_identity(&z, &x(&z, "(0,1)"), &x(&z, "(0,1)"), &el(&z, "(1,0)")),
        Err(MasaError::Divergent { .. })
    ));
    let s = cat_map();
    let xi = x(&s, "((1,0),0) + (0,2)*((0,1),1) - ((1,1),-2)");
    let r = summability_identity(&s, &xi, &xi, &el(&s, "((0,0),1)")).unwrap();
    assert!((r.lhs - r.rhs).abs() < 1e-10 && r.lhs > 0.0);
}

#[test]
fn orbit_period_bound() {
    assert_eq!(kset::period_bound(1), 2);
    assert_eq!(kset::period_bound(2), 12);
    assert_eq!(kset::period_bound(4), 120);
    let rot: GroupModel = r#"{"kind":"semidirect","matrix":[[0,-1],[1,0]],"marked":"acting_Z"}"#.parse().unwrap();
    let v = [num_bigint::BigInt::from(1), num_bigint::BigInt::from(0)];
    assert_eq!(kset::orbit_period(&rot, &v).unwrap(), Some(4));
    let g = el(&rot, "((1,0),0)");
    let s = solution_set(&rot, &g, &el(&rot, "((0,0),1)"), &g).unwrap();
    assert!(s.is_infinite());
    assert!(s.contains(4) && !s.contains(2));
}

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> Element {
    let letters: Vec<i32> = (0..len).map(|_| [1, -1, 2, -2][rng.gen_range(0..4)]).collect();
    Element::Word(word::reduce(letters))
}

#[test]
fn free_solution_sets_match_wide_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for marked in ["a", "a*b", "b*a^2*b^-1", "a^2"] {
        let m: GroupModel = format!(r#"{{"kind":"free","rank":2,"marked":"{marked}"}}"#).parse().unwrap();
        let v = m.marked_generators()[0].clone();
        for _ in 0..150 {
            let (g, h) = (random_word(&mut rng, 7), random_word(&mut rng, 7));
            let s = solution_set(&m, &g, &v, &h).unwrap();
            let hinv = m.invert(&h).unwrap();
            for k in -60..=60 {
                let inside = m.in_marked(&m.product([&g, &m.power(&v, k).unwrap(), &hinv]).unwrap()).unwrap();
                assert_eq!(s.contains(k), inside, "marked {marked}, g={g:?}, h={h:?}, k={k}");
            }
        }
    }
}

#[test]
fn semidirect_solution_sets_match_wide_scan() {
    let s = cat_map();
    let v = el(&s, "((0,0),1)");
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let gens = s.generators();
    for _ in 0..100 {
        let mut pick = || {
            let mut g = s.identity();
            for _ in 0..rng.gen_range(0..6) {
                g = s.multiply(&g, &gens[rng.gen_range(0..gens.len())]).unwrap();
            }
            g
        };
        let (g, h) = (pick(), pick());
        let set = solution_set(&s, &g, &v, &h).unwrap();
        let hinv = s.invert(&h).unwrap();
        for k in -40..=40 {
            let inside = s.in_marked(&s.product([&g, &s.power(&v, k).unwrap(), &hinv]).unwrap()).unwrap();
            assert_eq!(set.contains(k), inside);
        }
    }
}

fn arb_f2_element() -> impl Strategy<Value = Gae> {
    prop::collection::vec(
        (prop::collection::vec(prop::sample::select(vec![1i32, -1, 2, -2]), 0..5), -3i32..=3, -3i32..=3),
        0..5,
    )
    .prop_map(|terms| {
        Gae::from_terms(
            terms
                .into_iter()
                .map(|(w, re, im)| (Element::Word(word::reduce(w)), Complex64::new(re as f64, im as f64))),
        )
    })
}

proptest! {
    #[test]
    fn expectation_properties(y in arb_f2_element(), p in -3i64..=3, q in -3i64..=3) {
        let m = f2();
        let e = y.conditional_expectation(&m).unwrap();
        prop_assert_eq!(e.conditional_expectation(&m).unwrap(), e.clone());
        prop_assert_eq!(e.trace(&m), y.trace(&m));
        prop_assert!(e.norm2_sq().re <= y.norm2_sq().re);
        let a = el(&m, "a");
        let (h1, h2) = (Gae::unitary(m.power(&a, p).unwrap()), Gae::unitary(m.power(&a, q).unwrap()));
        let lhs = h1.mul(&m, &y).unwrap().mul(&m, &h2).unwrap().conditional_expectation(&m).unwrap();
        let rhs = h1.mul(&m, &e).unwrap().mul(&m, &h2).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn cesaro_values_obey_norm_inequalities(y in arb_f2_element()) {
        let m = f2();
        let y = y.sub(&y.conditional_expectation(&m).unwrap());
        let r = cesaro_diagnostics(&m, &y, &el(&m, "a"), 6).unwrap();
        prop_assert!(r.ii <= r.i + 1e-9);
        prop_assert!(r.ii_prime <= r.i_prime + 1e-9);
        prop_assert!(r.i_prime * r.i_prime <= r.i + 1e-9);
        prop_assert!(r.ii_prime * r.ii_prime <= r.ii + 1e-9);
        prop_assert_eq!(r.i.abs() <= VANISH_TOL, r.ii.abs() <= VANISH_TOL);
    }
}
