mod common;

use common::*;
use fraisse::amalgamation::free_amalgam;
use fraisse::concentration::{diagonal_embedding, group_closure, l1_power, PowerSpace};
use fraisse::embeddings::{automorphisms, check_embedding, enumerate_embeddings, push_forward, rho_in, Embedding};
use fraisse::format::{parse, serialize};
use fraisse::ramsey::{random_coloring, worst_coloring, RamseyInstance, WorstValue};
use fraisse::rational::int;
use fraisse::ratlp::{self, Bounds, LinearProgram, LpStatus, Relation, Sense};
use fraisse::structures::{canonicalize, generated_substructure, validate, Space};
use fraisse::{MetricStructure, PointedStructure, Rational};
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn structure(seed: u64, shape: Shape) -> MetricStructure {
    random_structure(&mut ChaCha8Rng::seed_from_u64(seed), shape)
}

/// `(A, B0, B1, φ0, φ1)` cut out of one random structure.
fn amalgamation_instance(seed: u64) -> (PointedStructure, MetricStructure, MetricStructure, Embedding, Embedding) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_structure(&mut rng, Shape::default());
    let mut a_pts: Vec<usize> = s.constants().to_vec();
    let (mut p0, mut p1) = (Vec::new(), Vec::new());
    for p in 0..s.len() {
        if s.is_constant(p) {
            continue;
        }
        match rng.gen_range(0..3) {
            0 => a_pts.push(p),
            1 => p0.push(p),
            _ => p1.push(p),
        }
    }
    if a_pts.is_empty() {
        a_pts.push(p0.pop().or_else(|| p1.pop()).unwrap());
    }
    a_pts.sort();
    let side = |extra: &[usize]| {
        let mut pts = a_pts.clone();
        pts.extend_from_slice(extra);
        let b = s.induced(&pts).unwrap();
        let phi = Embedding::new((0..a_pts.len()).collect());
        (b, phi)
    };
    let (b0, phi0) = side(&p0);
    let (b1, phi1) = side(&p1);
    (PointedStructure::whole(s.induced(&a_pts).unwrap()), b0, b1, phi0, phi1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalize_is_idempotent(seed in any::<u64>()) {
        let s = structure(seed, Shape::default());
        let c = canonicalize(&s).unwrap();
        prop_assert_eq!(canonicalize(&c).unwrap(), c);
    }

    #[test]
    fn format_round_trip(seed in any::<u64>()) {
        let s = structure(seed, Shape::default());
        let text = serialize(&s);
        let back = parse(&text).unwrap();
        prop_assert_eq!(serialize(&back), text);
        prop_assert_eq!(back, s);
    }

    #[test]
    fn rho_is_a_metric(seed in any::<u64>()) {
        let c = structure(seed, Shape { max_points: 4, ..Shape::default() });
        let a = generated_substructure(&c, &(0..c.len().min(2)).collect::<Vec<_>>()).unwrap();
        let set = enumerate_embeddings(&a, &c).unwrap();
        for i in 0..set.len() {
            prop_assert!(set.rho(i, i).is_zero());
            for j in 0..set.len() {
                prop_assert_eq!(set.rho(i, j), set.rho(j, i));
                if i != j {
                    prop_assert!(set.rho(i, j) > Rational::zero());
                }
                for k in 0..set.len() {
                    prop_assert!(set.rho(i, k) <= set.rho(i, j) + set.rho(j, k));
                }
            }
        }
    }

    #[test]
    fn automorphisms_form_a_group(seed in any::<u64>()) {
        let b = structure(seed, Shape { max_points: 5, ..Shape::default() });
        let auts = automorphisms(&b);
        prop_assert_eq!(&auts[0], &Embedding::identity(b.len()));
        for g in &auts {
            prop_assert!(auts.contains(&g.inverse()));
            for h in &auts {
                prop_assert!(auts.contains(&g.after(h).unwrap()));
            }
        }
    }

    #[test]
    fn push_forward_preserves_rho(seed in any::<u64>()) {
        let b = structure(seed, Shape { max_points: 4, ..Shape::default() });
        let a = generated_substructure(&b, &[0]).unwrap();
        let family = enumerate_embeddings(&a, &b).unwrap().members().to_vec();
        for beta in automorphisms(&b) {
            let image = push_forward(&family, &beta).unwrap();
            for (i, x) in family.iter().enumerate() {
                for (j, y) in family.iter().enumerate() {
                    prop_assert_eq!(rho_in(&a, &b, &image[i], &image[j]), rho_in(&a, &b, x, y));
                }
            }
        }
    }

    #[test]
    fn free_amalgam_arms_agree(seed in any::<u64>()) {
        let (a, b0, b1, phi0, phi1) = amalgamation_instance(seed);
        let r = free_amalgam(&a, &b0, &b1, &phi0, &phi1).unwrap();
        prop_assert!(validate(&r.amalgam).is_empty());
        prop_assert_eq!(r.left_arm.after(&phi0).unwrap(), r.right_arm.after(&phi1).unwrap());
        check_embedding(&b0, &r.amalgam, &r.left_arm).unwrap();
        check_embedding(&b1, &r.amalgam, &r.right_arm).unwrap();
    }

    #[test]
    fn random_colorings_are_lipschitz(seed in any::<u64>()) {
        let c = structure(seed, Shape { max_points: 4, ..Shape::default() });
        let dom = Arc::new(enumerate_embeddings(&generated_substructure(&c, &[0]).unwrap(), &c).unwrap());
        let g = random_coloring(dom, seed).unwrap();
        prop_assert!(g.lipschitz_violations().is_empty());
    }

    #[test]
    fn diagonal_is_isometric(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_structure(&mut rng, Shape { max_points: 4, ..Shape::default() });
        let auts = automorphisms(&b);
        let gs: Vec<Embedding> = (0..n).map(|_| auts[rng.gen_range(0..auts.len())].clone()).collect();
        let space = PowerSpace::new(b.clone(), n).unwrap();
        let d = diagonal_embedding(&b, &gs).unwrap();
        check_embedding(&b, &space, &d).unwrap();
        for x in 0..b.len() {
            for y in 0..b.len() {
                let sum: Rational = gs.iter().map(|g| b.dist(g.image(x), g.image(y)).clone()).sum();
                prop_assert_eq!(sum / int(n as i64), b.dist(x, y).clone());
                prop_assert_eq!(space.distance(d.image(x), d.image(y)).into_owned(), b.dist(x, y).clone());
            }
        }
    }

    #[test]
    fn l1_powers_validate(seed in any::<u64>(), n in 1usize..3) {
        let b = structure(seed, Shape { max_points: 4, ..Shape::default() });
        let p = l1_power(&b, n).unwrap();
        prop_assert!(validate(&p.structure).is_empty());
    }

    #[test]
    fn lp_optimum_dominates_feasible_points(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = rng.gen_range(1..4);
        let mut lp = LinearProgram::new();
        let vars: Vec<_> = (0..nv).map(|i| lp.var_with(format!("x{i}"), Bounds::between(int(0), int(4)))).collect();
        for _ in 0..rng.gen_range(1..5) {
            let terms = vars.iter().map(|&v| (v, int(rng.gen_range(-3..4)))).collect();
            lp.constrain(terms, Relation::Le, int(rng.gen_range(0..8)));
        }
        lp.set_objective(Sense::Maximize, vars.iter().map(|&v| (v, int(rng.gen_range(-3..4)))).collect());
        let out = ratlp::solve(&lp).unwrap();
        // the origin is always feasible
        prop_assert_eq!(out.status, LpStatus::Optimal);
        let opt = out.optimum.clone().unwrap();
        prop_assert!(lp.is_satisfied_by(out.assignment.as_ref().unwrap()));
        for _ in 0..50 {
            let x: Vec<Rational> = (0..nv).map(|_| int(rng.gen_range(0..5))).collect();
            if lp.is_satisfied_by(&x) {
                prop_assert!(lp.objective_value(&x) <= opt);
            }
        }
    }
}

#[test]
fn delta_and_theta_exhaustive() {
    // S3 acting on the triangle
    let t = triangle();
    let g = group_closure(&t, &[Embedding::new(vec![1, 2, 0]), Embedding::new(vec![1, 0, 2])]).unwrap();
    let h = g.order();
    for a in 0..h {
        for b in 0..h {
            for c in 0..h {
                assert!(g.delta(a, c) <= g.delta(a, b) + g.delta(b, c));
                assert_eq!(g.delta(a, b), g.delta(g.compose(c, a), g.compose(c, b)));
                assert_eq!(g.delta(a, b), g.delta(g.compose(a, c), g.compose(b, c)));
            }
        }
    }
    // Θ_i on H^3 (216 elements) is a δ_n-isometric permutation
    let all: Vec<Vec<usize>> = (0..h * h * h).map(|i| vec![i / (h * h), i / h % h, i % h]).collect();
    for i in 0..2 {
        let mut seen = std::collections::HashSet::new();
        for x in &all {
            let tx = g.theta(i, x).unwrap();
            assert!(seen.insert(tx.clone()));
            for y in all.iter().step_by(17) {
                assert_eq!(g.delta_n(&tx, &g.theta(i, y).unwrap()), g.delta_n(x, y));
            }
        }
        assert_eq!(seen.len(), all.len());
    }
}

#[test]
fn worst_value_grows_with_the_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut done = 0;
    while done < 10 {
        let Some(inst) = random_ramsey_instance(&mut rng, fraisse::rational::ratio(1, 2)) else {
            continue;
        };
        let sub = RamseyInstance::new(
            inst.a.clone(),
            inst.b.clone(),
            inst.family[..inst.family.len() - 1].to_vec(),
            inst.epsilon.clone(),
            inst.c.clone(),
        )
        .unwrap();
        let (WorstValue::Finite(big), WorstValue::Finite(small)) = (
            worst_coloring(&inst).unwrap().worst_value,
            worst_coloring(&sub).unwrap().worst_value,
        ) else {
            panic!("B embeds in C by construction")
        };
        assert!(small <= big);
        done += 1;
    }
}
