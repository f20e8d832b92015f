use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BUDGET: usize = 1_000_000;

fn model(json: &str) -> GroupModel {
    json.parse().unwrap()
}

fn el(m: &GroupModel, s: &str) -> Element {
    parse_element(m, s).unwrap()
}

fn f2_a() -> GroupModel {
    model(r#"{"kind":"free","rank":2,"marked":"a"}"#)
}

fn cat_map() -> GroupModel {
    model(r#"{"kind":"semidirect","matrix":[[2,1],[1,1]],"marked":"acting_Z"}"#)
}

fn all_models() -> Vec<GroupModel> {
    vec![
        f2_a(),
        model(r#"{"kind":"free","rank":3,"marked":["a*b","b^-1*a^-1"]}"#),
        model(r#"{"kind":"finitely_generated_abelian","invariants":[0,0,6],"marked":[[1,0,2]]}"#),
        model(r#"{"kind":"finite_cyclic","n":5,"marked":"whole"}"#),
        cat_map(),
        model(r#"{"kind":"semidirect","matrix":[[0,1,0],[0,0,1],[1,0,0]],"marked":"normal"}"#),
        model(r#"{"kind":"direct_product","factors":[{"kind":"free","rank":2,"marked":"a"},{"kind":"finite_cyclic","n":2,"marked":"whole"}]}"#),
        model(r#"{"kind":"free_product","factors":[{"kind":"finite_cyclic","n":3,"marked":"whole"},{"kind":"free","rank":1,"marked":"a"}],"marked_factor":1}"#),
    ]
}

fn random_element(m: &GroupModel, rng: &mut ChaCha8Rng, max_len: usize) -> Element {
    let gens = m.generators();
    let len = rng.gen_range(0..=max_len);
    let mut g = m.identity();
    for _ in 0..len {
        g = m.multiply(&g, &gens[rng.gen_range(0..gens.len())]).unwrap();
    }
    g
}

#[test]
fn free_group_examples() {
    let m = f2_a();
    let a = el(&m, "a");
    assert!(m.is_identity(&m.multiply(&a, &m.invert(&a).unwrap()).unwrap()).unwrap());
    let p = m.multiply(&el(&m, "ab"), &el(&m, "b^-1*a")).unwrap();
    assert_eq!(format_element(&p), "a^2");
}

#[test]
fn semidirect_conjugation_example() {
    let m = cat_map();
    let g = m
        .product([&el(&m, "((0,0),1)"), &el(&m, "((1,0),0)"), &el(&m, "((0,0),-1)")])
        .unwrap();
    assert_eq!(format_element(&g), "((2,1),0)");
}

#[test]
fn membership_examples() {
    let m = f2_a();
    assert!(m.in_marked(&el(&m, "a^5")).unwrap());
    assert!(!m.in_marked(&el(&m, "b*a*b^-1")).unwrap());
    let s = cat_map();
    assert!(!s.in_marked(&el(&s, "((1,0),3)")).unwrap());
    assert!(s.in_marked(&el(&s, "((0,0),-7)")).unwrap());
    let conj = model(r#"{"kind":"free","rank":2,"marked":"b*a^2*b^-1"}"#);
    assert!(conj.in_marked(&el(&conj, "b*a^-4*b^-1")).unwrap());
    assert!(!conj.in_marked(&el(&conj, "b*a*b^-1")).unwrap());
    let ab = model(r#"{"kind":"finitely_generated_abelian","invariants":[0,4],"marked":[[2,1]]}"#);
    assert!(ab.in_marked(&el(&ab, "(4,2)")).unwrap());
    assert!(ab.in_marked(&el(&ab, "(0,0)")).unwrap());
    assert!(!ab.in_marked(&el(&ab, "(2,3)")).unwrap());
    assert!(ab.in_marked(&el(&ab, "(8,0)")).unwrap());
}

#[test]
fn ball_examples() {
    let m = f2_a();
    assert_eq!(m.ball(0, BUDGET).unwrap(), vec![m.identity()]);
    assert_eq!(m.ball(1, BUDGET).unwrap().len(), 5);
    assert_eq!(m.ball(2, BUDGET).unwrap().len(), 17);
    for k in 1..=3usize {
        let fk = GroupModel::free(k, &[]).unwrap();
        for r in 0..=4usize {
            let expected: usize = 1 + (1..=r).map(|i| 2 * k * (2 * k - 1).pow(i as u32 - 1)).sum::<usize>();
            assert_eq!(fk.ball(r, BUDGET).unwrap().len(), expected, "k={k} r={r}");
        }
    }
    assert!(matches!(m.ball(10, 1000), Err(GroupError::BudgetExceeded { .. })));
    let z5 = model(r#"{"kind":"finite_cyclic","n":5}"#);
    assert_eq!(z5.ball(10, BUDGET).unwrap().len(), 5);
}

#[test]
fn group_laws_on_sampled_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in all_models() {
        for _ in 0..10_000 {
            let (a, b, c) = (
                random_element(&m, &mut rng, 5),
                random_element(&m, &mut rng, 5),
                random_element(&m, &mut rng, 5),
            );
            let l = m.multiply(&m.multiply(&a, &b).unwrap(), &c).unwrap();
            let r = m.multiply(&a, &m.multiply(&b, &c).unwrap()).unwrap();
            assert_eq!(l, r);
            assert!(m.is_identity(&m.multiply(&a, &m.invert(&a).unwrap()).unwrap()).unwrap());
            assert_eq!(m.multiply(&m.identity(), &a).unwrap(), a);
            m.check(&l).unwrap();
        }
    }
}

#[test]
fn marked_subgroups_commute_and_coordinates_are_homomorphic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in all_models() {
        let gens = m.marked_generators();
        for x in &gens {
            for y in &gens {
                assert_eq!(m.multiply(x, y).unwrap(), m.multiply(y, x).unwrap());
            }
        }
        let ball = m.marked_ball(3, BUDGET).unwrap();
        for _ in 0..200 {
            let x = &ball[rng.gen_range(0..ball.len())];
            let y = &ball[rng.gen_range(0..ball.len())];
            assert!(m.in_marked(x).unwrap());
            let cx = m.marked_coords(x).unwrap().unwrap();
            assert_eq!(m.element_from_marked_coords(&cx).unwrap(), *x);
            let cxy = m.marked_coords(&m.multiply(x, y).unwrap()).unwrap().unwrap();
            let cy = m.marked_coords(y).unwrap().unwrap();
            let shape = m.marked_shape();
            for i in 0..shape.free {
                assert_eq!(cxy.free[i], cx.free[i] + cy.free[i]);
            }
            for (i, &d) in shape.torsion.iter().enumerate() {
                assert_eq!(cxy.torsion[i].rem_euclid(d as i64), (cx.torsion[i] + cy.torsion[i]).rem_euclid(d as i64));
            }
        }
    }
}

#[test]
fn element_strings_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in all_models() {
        for _ in 0..200 {
            let g = random_element(&m, &mut rng, 6);
            let s = format_element(&g);
            assert_eq!(parse_element(&m, &s).unwrap(), g, "{s}");
        }
    }
    let dp = &all_models()[6];
    assert_eq!(format_element(&el(dp, "[b; (1)]")), "[b; (1)]");
    let fp = &all_models()[7];
    assert_eq!(format_element(&el(fp, "{0:(1)}{0:(2)}{1:a}")), "{1:a}");
    assert!(matches!(parse_element(&f2_a(), "a*q"), Err(GroupError::Parse { .. })));
    assert!(parse_element(&cat_map(), "((1,0,0),1)").is_err());
}

#[test]
fn model_json_validation() {
    assert!(r#"{"kind":"free","rank":2,"marked":["a","b"]}"#.parse::<GroupModel>().is_err());
    assert!(r#"{"kind":"free","rank":2,"marked":"whole"}"#.parse::<GroupModel>().is_err());
    assert!(r#"{"kind":"semidirect","matrix":[[2,0],[0,1]],"marked":"acting_Z"}"#.parse::<GroupModel>().is_err());
    assert!(r#"{"kind":"free","rank":2,"colour":1}"#.parse::<GroupModel>().is_err());
    let doc: ModelDoc = serde_json::from_str(r#"{"kind":"semidirect","matrix":[[2,1],[1,1]],"marked":"acting_Z"}"#).unwrap();
    let again: ModelDoc = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(doc, again);
}

proptest! {
    #[test]
    fn free_normal_forms_are_canonical(letters in prop::collection::vec(prop::sample::select(vec![1i32, -1, 2, -2]), 0..20)) {
        let m = GroupModel::free(2, &[]).unwrap();
        let g = Element::Word(word::reduce(letters));
        prop_assert!(m.is_identity(&m.multiply(&g, &m.invert(&g).unwrap()).unwrap()).unwrap());
        prop_assert_eq!(parse_element(&m, &format_element(&g)).unwrap(), g);
    }

    #[test]
    fn semidirect_law_is_exact(v in prop::collection::vec(-5i64..5, 2), w in prop::collection::vec(-5i64..5, 2), m in -6i64..6, n in -6i64..6) {
        let s = cat_map();
        let big = |x: &Vec<i64>| x.iter().map(|&y| BigInt::from(y)).collect::<Vec<_>>();
        let p = s.multiply(&Element::Semidirect(big(&v), m), &Element::Semidirect(big(&w), n)).unwrap();
        let aw = s.act(m, &big(&w)).unwrap();
        let expect: Vec<BigInt> = big(&v).iter().zip(&aw).map(|(a, b)| a + b).collect();
        prop_assert_eq!(p, Element::Semidirect(expect, m + n));
    }
}
