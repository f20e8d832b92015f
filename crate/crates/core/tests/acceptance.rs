//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use std::collections::BTreeSet;
use std::time::Instant;

use sml::bimodule::measure::polarization_check;
use sml::bimodule::{
    disintegrate, eta_from_vectors, fiber_mass_check, fingerprint, compare, Axis, Base, BivariateMeasure, FiniteKoopmanModel,
    Weights,
};
use sml::circle_measures::{wiener_atom_energy, CircleMeasure, Density, Point, RieszSpec};
use sml::group_masa::{self as gm, GroupAlgebraElement, KgStructure, StVerdict};
use sml::groups::{parse_element, Element, GroupModel};
use sml::rank_one::{build_tower, check_measure_preserving, correlation_sequence, CutSpacerSpec};
use sml::scalar::{gauss, GaussQ};

const BUDGET: usize = 1_000_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn model(s: &str) -> GroupModel {
    s.parse().expect("model")
}

fn el(m: &GroupModel, s: &str) -> Element {
    parse_element(m, s).expect("element")
}

fn wiener_recovery() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..50 {
        let k = rng.gen_range(1..=5);
        let mut pts: Vec<i64> = Vec::new();
        while pts.len() < k {
            let p = rng.gen_range(0..1000);
            let far = pts.iter().all(|&q| {
                let d = (p - q).rem_euclid(1000);
                d.min(1000 - d) >= 50
            });
            if far {
                pts.push(p);
            }
        }
        let atoms: Vec<(Point, f64)> = pts.iter().map(|&p| (Point::rational(p, 1000), rng.gen_range(0.2..1.0))).collect();
        let (c, freq, phase) = (rng.gen_range(0.0..0.5), rng.gen_range(1..20) as f64, rng.gen_range(0.0..1.0));
        let density = Density::from_fn(1 << 14, |x| c * (1.0 + 0.5 * (std::f64::consts::TAU * (freq * x + phase)).cos())).unwrap();
        let mu = CircleMeasure::new(atoms, Some(density), None).unwrap();
        let target = mu.atom_energy();
        let got = *wiener_atom_energy(&mu, 10_000).unwrap().last().unwrap();
        let err = (got - target).abs();
        worst = worst.max(err / target);
        ok &= err <= 0.01 * target + 1e-6;
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(ok && secs < 10.0, format!("50 measures, max relative error {worst:.3e}, {secs:.2} s (limit 10 s)"))
}

fn riesz_oracle() -> Verdict {
    let start = Instant::now();
    let grid = 1usize << 14;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let j = rng.gen_range(1..=4);
        let mut freqs = vec![rng.gen_range(1..=5i64)];
        while freqs.len() < j {
            let last = *freqs.last().unwrap();
            freqs.push(3 * last + 1 + rng.gen_range(0..3));
        }
        let coeffs: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let spec = RieszSpec::new(freqs.clone(), coeffs.clone()).unwrap();
        let mut buf: Vec<Complex64> = (0..grid)
            .map(|x| {
                let t = x as f64 / grid as f64;
                let p: f64 = freqs
                    .iter()
                    .zip(&coeffs)
                    .map(|(&n, &a)| 1.0 + a * (std::f64::consts::TAU * n as f64 * t).cos())
                    .product();
                Complex64::new(p, 0.0)
            })
            .collect();
        fft.process(&mut buf);
        for n in -200i64..=200 {
            let quad = buf[(-n).rem_euclid(grid as i64) as usize] / grid as f64;
            worst = worst.max((quad - Complex64::new(spec.coefficient(n), 0.0)).norm());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst < 1e-8 && secs < 5.0, format!("20 parameter sets, |n| ≤ 200, max error {worst:.3e}, {secs:.2} s (limit 5 s)"))
}

fn staircase_structure() -> Verdict {
    let heights = CutSpacerSpec::staircase(4).heights(4);
    let spec = CutSpacerSpec::staircase(6);
    let tower = build_tower(&spec, 6, BUDGET).unwrap();
    let preserving = check_measure_preserving(&spec, &tower, BUDGET);
    let ok = heights[1..] == [2, 7, 27, 118] && preserving.is_ok() && tower.height() == 3651;
    verdict(ok, format!("heights {:?}, K = 6 measure preserving: {}", &heights[1..], preserving.is_ok()))
}

fn staircase_decay() -> Verdict {
    let spec = CutSpacerSpec::staircase(8);
    let tower = build_tower(&spec, 8, BUDGET).unwrap();
    let h = spec.heights(8);
    let (h3, h4) = (h[3] as usize, h[4] as usize);
    let c = correlation_sequence(&tower, &tower.default_function(), h4).unwrap();
    let ratio = c.max_ratio(h3, h4);
    verdict(ratio < 0.2, format!("K = 8, max |c(m)|/c(0) over {h3} ≤ m ≤ {h4} = {ratio:.4} (bound 0.2)"))
}

fn st_suite() -> Verdict {
    let start = Instant::now();
    let f2 = model(r#"{"kind":"free","rank":2,"marked":"a"}"#);
    let mut free_ok = true;
    let mut count = 0;
    for g in f2.ball(4, BUDGET).unwrap() {
        if f2.in_marked(&g).unwrap() {
            continue;
        }
        let f = [g.clone(), f2.invert(&g).unwrap()];
        let r = gm::st_condition(&f2, &f, 8, 64, BUDGET).unwrap();
        free_ok &= r.verdict == StVerdict::HoldsWithE(vec![]);
        count += 1;
    }
    let z2 = model(r#"{"kind":"finitely_generated_abelian","invariants":[0,0],"marked":[[1,0]]}"#);
    let r = gm::st_condition(&z2, &[el(&z2, "(0,1)"), el(&z2, "(0,-1)")], 8, 64, BUDGET).unwrap();
    let abelian_ok = r.verdict == StVerdict::Violation && !r.witnesses.is_empty();
    let cat = model(r#"{"kind":"semidirect","matrix":[[2,1],[1,1]],"marked":"acting_Z"}"#);
    let r = gm::st_condition(&cat, &[el(&cat, "((1,0),0)"), el(&cat, "((-1,0),0)")], 8, 64, BUDGET).unwrap();
    let semi_ok = matches!(r.verdict, StVerdict::HoldsWithE(_));
    let secs = start.elapsed().as_secs_f64();
    verdict(
        free_ok && abelian_ok && semi_ok && secs < 30.0,
        format!("F₂: {count} sets F all holds_with_E(∅): {free_ok}; ℤ² violation: {abelian_ok}; semidirect finite E: {semi_ok}; {secs:.2} s (limit 30 s)"),
    )
}

fn torsion_stabilizer() -> Verdict {
    let t = model(
        r#"{"kind":"direct_product","factors":[{"kind":"free","rank":2,"marked":"a"},{"kind":"finite_cyclic","n":2,"marked":"whole"}]}"#,
    );
    let order = match gm::stabilizer_kg(&t, &el(&t, "[b; (0)]"), 4, BUDGET).unwrap().structure {
        KgStructure::Finite(list) => Some(list.len()),
        _ => None,
    };
    let f2 = model(r#"{"kind":"free","rank":2,"marked":"a"}"#);
    let trivial = gm::stabilizer_kg(&f2, &el(&f2, "b"), 4, BUDGET).unwrap().structure == KgStructure::Trivial;
    verdict(order == Some(2) && trivial, format!("|K_(b,0)| = {order:?}, K_b trivial: {trivial}"))
}

/// H = Π ℤ/n_i acting on a disjoint union of coset spaces H/K.
fn coset_model(invariants: &[u64], rng: &mut ChaCha8Rng, max_points: usize) -> FiniteKoopmanModel {
    let regular_gens: Vec<Vec<usize>> = {
        let order: u64 = invariants.iter().product();
        let probe = FiniteKoopmanModel::new(invariants.to_vec(), vec![(0..order as usize).collect(); invariants.len()], None);
        // the identity action is valid for any H; it only provides the group law
        let probe = probe.unwrap();
        (0..invariants.len())
            .map(|i| {
                let mut d = vec![0u64; invariants.len()];
                d[i] = 1 % invariants[i];
                let e = probe.index(&d);
                (0..order as usize).map(|h| probe.add(h, e)).collect()
            })
            .collect()
    };
    let group = FiniteKoopmanModel::new(invariants.to_vec(), regular_gens, None).unwrap();
    let subgroups = group.dual_subgroups();
    let mut gens: Vec<Vec<usize>> = vec![Vec::new(); invariants.len()];
    let mut orbit_sizes = Vec::new();
    loop {
        let k = &subgroups[rng.gen_range(0..subgroups.len())];
        let reps: BTreeSet<usize> = (0..group.order())
            .map(|h| k.iter().map(|&x| group.add(h, x)).min().unwrap())
            .collect();
        let reps: Vec<usize> = reps.into_iter().collect();
        let size: usize = orbit_sizes.iter().sum();
        if size + reps.len() > max_points {
            if orbit_sizes.is_empty() {
                continue;
            }
            break;
        }
        for (i, g) in gens.iter_mut().enumerate() {
            let mut d = vec![0u64; invariants.len()];
            d[i] = 1 % invariants[i];
            let e = group.index(&d);
            for &r in &reps {
                let image = k.iter().map(|&x| group.add(group.add(r, e), x)).min().unwrap();
                g.push(size + reps.iter().position(|&q| q == image).unwrap());
            }
        }
        orbit_sizes.push(reps.len());
        if rng.gen_bool(0.4) {
            break;
        }
    }
    let masses: Vec<f64> = orbit_sizes.iter().map(|_| rng.gen_range(0.5..2.0)).collect();
    let total: f64 = masses.iter().sum();
    let weights: Vec<f64> = orbit_sizes
        .iter()
        .zip(&masses)
        .flat_map(|(&n, &m)| std::iter::repeat(m / total / n as f64).take(n))
        .collect();
    FiniteKoopmanModel::new(invariants.to_vec(), gens, Some(weights)).unwrap()
}

const SMALL_GROUPS: [&[u64]; 11] = [&[2], &[3], &[4], &[5], &[6], &[7], &[8], &[2, 2], &[2, 4], &[2, 2, 2], &[1]];

fn random_mean_zero(k: &FiniteKoopmanModel, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let f: Vec<Complex64> = (0..k.points()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let m = k.mean(&f);
    f.into_iter().map(|v| v - m).collect()
}

fn snag_identity() -> Verdict {
    let start = Instant::now();
    let groups: [&[u64]; 10] = [&[2], &[3], &[4], &[6], &[8], &[12], &[2, 2], &[2, 3], &[2, 6], &[3, 3]];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let k = coset_model(groups[trial % groups.len()], &mut rng, 12);
        let (f1, f2) = (random_mean_zero(&k, &mut rng), random_mean_zero(&k, &mut rng));
        let n = k.order();
        let g: Vec<usize> = (0..4).map(|_| rng.gen_range(0..n)).collect();
        worst = worst.max(k.snag_identity_check(&f1, &f2, g[0], g[1], g[2], g[3]).unwrap().defect);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst < 1e-10 && secs < 60.0, format!("100 instances, |X|,|H| ≤ 12, max defect {worst:.3e}, {secs:.2} s (limit 60 s)"))
}

fn transport_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut models = 0;
    for inv in SMALL_GROUPS {
        for _ in 0..4 {
            let k = coset_model(inv, &mut rng, 16);
            worst = worst.max(k.transport_defect().unwrap());
            models += 1;
        }
    }
    verdict(worst < 1e-12, format!("{models} Koopman models with |H| ≤ 8, max defect {worst:.3e}"))
}

fn parseval_summability() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f2 = model(r#"{"kind":"free","rank":2,"marked":"a"}"#);
    let cat = model(r#"{"kind":"semidirect","matrix":[[2,1],[1,1]],"marked":"acting_Z"}"#);
    let ball: Vec<Element> = f2.ball(3, BUDGET).unwrap().into_iter().filter(|g| !f2.in_marked(g).unwrap()).collect();
    let random_free = |rng: &mut ChaCha8Rng| {
        GroupAlgebraElement::from_terms(
            (0..rng.gen_range(1..5)).map(|_| (ball[rng.gen_range(0..ball.len())].clone(), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))),
        )
    };
    let random_semi = |rng: &mut ChaCha8Rng| {
        let mut terms = Vec::new();
        while terms.len() < 3 {
            let (x, y, m) = (rng.gen_range(-2..=2), rng.gen_range(-2..=2), rng.gen_range(-2..=2));
            if (x, y) != (0, 0) {
                terms.push((el(&cat, &format!("(({x},{y}),{m})")), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
            }
        }
        GroupAlgebraElement::from_terms(terms)
    };
    let mut worst: f64 = 0.0;
    let (va, vs) = (el(&f2, "a"), el(&cat, "((0,0),1)"));
    for i in 0..100 {
        let r = if i % 2 == 0 {
            gm::summability_identity(&f2, &random_free(&mut rng), &random_free(&mut rng), &va)
        } else {
            gm::summability_identity(&cat, &random_semi(&mut rng), &random_semi(&mut rng), &vs)
        };
        let r = r.unwrap();
        worst = worst.max((r.lhs - r.rhs).abs());
    }
    verdict(worst < 1e-10, format!("100 pairs (F₂, semidirect), max |lhs − rhs| {worst:.3e}"))
}

fn exact_corpus() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let models = [
        model(r#"{"kind":"finitely_generated_abelian","invariants":[4,2],"marked":[[1,0]]}"#),
        model(r#"{"kind":"finitely_generated_abelian","invariants":[2,2,2],"marked":[[1,0,0],[0,1,0]]}"#),
        model(r#"{"kind":"finite_cyclic","n":4,"marked":[[2]]}"#),
        model(r#"{"kind":"direct_product","factors":[{"kind":"free","rank":2,"marked":"trivial"},{"kind":"finite_cyclic","n":4,"marked":"whole"}]}"#),
    ];
    let mut inputs = 0;
    let mut ok = true;
    for m in &models {
        let elements: Vec<Element> = m.ball(2, BUDGET).unwrap();
        for _ in 0..10 {
            let mut pick = || {
                GroupAlgebraElement::<GaussQ>::from_terms(
                    (0..rng.gen_range(1..4)).map(|_| (elements[rng.gen_range(0..elements.len())].clone(), gauss(rng.gen_range(-3..4), rng.gen_range(1..4), rng.gen_range(-3..4), 1))),
                )
            };
            let (a, b) = (pick(), pick());
            ok &= fiber_mass_check(m, &a, &b, BUDGET).unwrap().exact();
            let (eta, _) = eta_from_vectors(m, &a, &b, BUDGET).unwrap();
            for axis in [Axis::First, Axis::Second] {
                let d = disintegrate(&eta, axis, Base::Haar).unwrap();
                ok &= d.concentrated() && d.reconstruct() == eta;
                if let Ok(d) = disintegrate(&eta, axis, Base::Pushforward) {
                    ok &= d.reconstruct() == eta;
                }
            }
            inputs += 1;
        }
    }
    let third = gauss(1, 3, 0, 1);
    let beta = BivariateMeasure::from_points(3, [((1, 1), third.clone()), ((1, 2), third.clone()), ((2, 2), third)]).unwrap();
    ok &= disintegrate(&beta, Axis::First, Base::Pushforward).unwrap().reconstruct() == beta;
    verdict(ok, format!("{} inputs, reconstruction and fiber-mass identity exact in ℚ(i)", inputs + 1))
}

fn polarization() -> Verdict {
    let m = model(r#"{"kind":"finitely_generated_abelian","invariants":[4,3],"marked":[[1,0]]}"#);
    let elements = m.ball(3, BUDGET).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let i = Complex64::new(0.0, 1.0);
    for _ in 0..100 {
        let mut pick = || {
            GroupAlgebraElement::from_terms(
                (0..rng.gen_range(1..5)).map(|_| (elements[rng.gen_range(0..elements.len())].clone(), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))),
            )
        };
        let (a, b) = (pick(), pick());
        let e = |x: &GroupAlgebraElement, y: &GroupAlgebraElement| eta_from_vectors(&m, x, y, BUDGET).unwrap().0;
        let ib = b.scale(&i);
        let r = polarization_check(
            &e(&a, &b),
            &e(&a, &a),
            &e(&b, &b),
            &e(&a.add(&b), &a.add(&b)),
            &e(&a.sub(&b), &a.sub(&b)),
            &e(&a.add(&ib), &a.add(&ib)),
            &e(&a.sub(&ib), &a.sub(&ib)),
        );
        worst = worst.max(r.max_defect());
    }
    verdict(worst < 1e-12, format!("100 pairs, max polarization/domination defect {worst:.3e}"))
}

fn fingerprint_separation() -> Verdict {
    let mut seqs: Vec<Weights> = (1..=9).map(|k| Weights::geometric(k as f64 / 10.0)).collect();
    seqs.push(Weights::Explicit { values: vec![0.6, 0.3, 0.1] });
    let fps: Vec<_> = seqs.iter().map(|w| fingerprint(w, 32).unwrap()).collect();
    let mut distinct = true;
    for a in 0..fps.len() {
        for b in 0..fps.len() {
            if a != b {
                distinct &= !compare(&fps[a], &fps[b]);
            }
        }
    }
    let equal = seqs.iter().zip(&fps).all(|(w, f)| compare(&fingerprint(w, 32).unwrap(), f));
    verdict(distinct && equal, format!("10 sequences pairwise distinct: {distinct}; equal sequences equal: {equal}"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("Wiener recovery", wiener_recovery),
        ("Riesz oracle", riesz_oracle),
        ("staircase structure", staircase_structure),
        ("staircase decay", staircase_decay),
        ("(ST) suite", st_suite),
        ("torsion stabilizer", torsion_stabilizer),
        ("SNAG / crossed-product identity", snag_identity),
        ("transport identity", transport_identity),
        ("Parseval summability", parseval_summability),
        ("disintegration and fiber masses", exact_corpus),
        ("polarization and domination", polarization),
        ("fingerprint separation", fingerprint_separation),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
