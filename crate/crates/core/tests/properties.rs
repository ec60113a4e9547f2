mod common;

use common::*;
use flatchain::chains::io::{chain_from_json, chain_to_json};
use flatchain::chains::PolyChain;
use flatchain::cones::{cone, cone_boundary_check, quantize_zero_chain, CoeffNet};
use flatchain::flatnorm::{build_complex, embed_chain, flat_distance, flat_norm_upper, SolveMode};
use flatchain::foundation::{CoefficientGroup, Functional, GroupElement, NormedSpace};
use flatchain::harness::{generate_random_chain, lattice_centers, ChainBudget};
use flatchain::linalg::{vector, Vector};
use flatchain::mass::{chain_norms, density, mass, mass_direct, DirectGrid};
use flatchain::slicing::{restrict_complement, restrict_halfspace, slice};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

const Z: CoefficientGroup = CoefficientGroup::Integers;
const R: CoefficientGroup = CoefficientGroup::Reals;

fn space_for(kind: u8, d: usize, seed: u64) -> NormedSpace {
    match kind % 5 {
        0 => NormedSpace::lp(d, 1.0).unwrap(),
        1 => NormedSpace::euclidean(d),
        2 => NormedSpace::lp(d, f64::INFINITY).unwrap(),
        3 => NormedSpace::lp(d, 3.0).unwrap(),
        _ => random_polytope_norm(&mut rng(seed), d, 2),
    }
}

fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, d)
}

/// `mass(a - b)` is zero iff the chains agree after canonicalization.
fn same_chain(a: &PolyChain, b: &PolyChain) -> f64 {
    mass(&a.sub(b).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn norm_axioms(kind in 0u8..5, d in 1usize..=4, seed in any::<u64>(), a in -10.0..10.0f64, seed_v in any::<u64>()) {
        let sp = space_for(kind, d, seed);
        let mut r = rng(seed_v);
        let v = random_point(&mut r, d, 5.0);
        let w = random_point(&mut r, d, 5.0);
        let nv = sp.norm(&v);
        prop_assert!((sp.norm(&(&v * a)) - a.abs() * nv).abs() <= 1e-12 * (1.0 + a.abs() * nv));
        prop_assert!(sp.norm(&(&v + &w)) <= nv + sp.norm(&w) + 1e-12 * (1.0 + nv));
        prop_assert!(nv >= 0.0);
    }

    #[test]
    fn dual_norm_bounds_pairing(kind in 0u8..5, d in 1usize..=4, seed in any::<u64>(), f in vec_strategy(4), x in vec_strategy(4)) {
        let sp = space_for(kind, d, seed);
        let f = vector(&f[..d]);
        let x = vector(&x[..d]);
        let df = sp.dual_norm(&f);
        prop_assert!(f.dot(&x) <= df * sp.norm(&x) + 1e-9 * (1.0 + df * sp.norm(&x)));
        let full: Vec<Vector> = (0..d).map(|i| flatchain::linalg::unit(d, i)).collect();
        let sub = sp.subspace_dual_norm(&full, &f).unwrap();
        prop_assert!((sub - df).abs() <= 1e-6 * (1.0 + df));
    }

    #[test]
    fn integer_and_real_group_norm_axioms(a in -1000i64..1000, b in -1000i64..1000, x in -1e3..1e3f64, y in -1e3..1e3f64) {
        let (ga, gb) = (GroupElement::Int(a), GroupElement::Int(b));
        prop_assert_eq!(ga.add(&gb).unwrap().norm() <= ga.norm() + gb.norm(), true);
        prop_assert_eq!(ga.neg().norm(), ga.norm());
        prop_assert_eq!(ga.is_zero(), ga.norm() == 0.0);
        let (rx, ry) = (GroupElement::Real(x), GroupElement::Real(y));
        prop_assert!(rx.add(&ry).unwrap().norm() <= rx.norm() + ry.norm() + 1e-12);
        prop_assert_eq!(rx.neg().norm(), rx.norm());
    }

    #[test]
    fn boundary_of_boundary_vanishes(d in 1usize..=4, k in 2usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        prop_assume!(k <= d);
        let sp = NormedSpace::euclidean(d);
        let p = random_chain(&mut rng(seed), &sp, Z, k, n, 1.0);
        let bb = p.boundary().unwrap().boundary().unwrap();
        prop_assert!(bb.canonicalize().is_zero(), "ddP has {} summands", bb.canonicalize().len());
    }

    #[test]
    fn canonicalize_idempotent_and_mass_preserving(kind in 0u8..5, d in 2usize..=3, k in 1usize..=2, n in 1usize..=3, seed in any::<u64>()) {
        prop_assume!(k <= d);
        let sp = space_for(kind, d, seed);
        let p = random_chain(&mut rng(seed), &sp, Z, k, n, 1.0);
        let c = p.canonicalize();
        prop_assert_eq!(chain_to_json(&c.canonicalize()), chain_to_json(&c));
        // disjoint generic simplices: the raw summand sum is the mass unless they overlap
        let m_raw = flatchain::mass::summand_mass(&p).unwrap();
        let m = mass(&p).unwrap();
        prop_assert!(m <= m_raw + 1e-9);
        prop_assert!((mass(&c).unwrap() - m).abs() <= 1e-9 * (1.0 + m));
    }

    #[test]
    fn canonicalize_mass_invariant_for_duplicated_summands(d in 2usize..=3, k in 1usize..=2, seed in any::<u64>(), times in 1i64..4) {
        prop_assume!(k <= d);
        let sp = NormedSpace::euclidean(d);
        let p = random_chain(&mut rng(seed), &sp, Z, k, 1, 1.0);
        let mut q = p.clone();
        for _ in 1..times {
            q = PolyChain::new(sp.clone(), Z, k, [q.summands(), p.summands()].concat()).unwrap();
        }
        let m = mass(&p).unwrap();
        prop_assert!((mass(&q).unwrap() - times as f64 * m).abs() <= 1e-9 * (1.0 + m));
    }

    #[test]
    fn boundary_support_in_support(d in 2usize..=3, k in 1usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        prop_assume!(k <= d);
        let sp = NormedSpace::euclidean(d);
        let p = random_chain(&mut rng(seed), &sp, Z, k, n, 1.0);
        prop_assert!(same_chain(&p.boundary().unwrap(), &p.canonicalize().boundary().unwrap()) <= 1e-9);
        let support = p.support();
        for face in p.boundary().unwrap().support() {
            for v in face.vertices() {
                prop_assert!(support.iter().any(|s| s.contains(v, 1e-7)), "boundary vertex {:?} outside support", v.as_slice());
            }
        }
    }

    #[test]
    fn pushforward_commutes_with_boundary(d in 2usize..=3, k in 1usize..=2, seed in any::<u64>()) {
        prop_assume!(k <= d);
        let mut r = rng(seed);
        let sp = NormedSpace::euclidean(d);
        let p = random_chain(&mut r, &sp, Z, k, 2, 1.0);
        let a = loop {
            let a: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| r.gen_range(-2.0..2.0));
            if a.determinant().abs() > 0.1 {
                break a;
            }
        };
        let t = random_point(&mut r, d, 1.0);
        let lhs = p.affine_pushforward(&a, &t).unwrap().boundary().unwrap();
        let rhs = p.boundary().unwrap().affine_pushforward(&a, &t).unwrap();
        prop_assert!(same_chain(&lhs, &rhs) <= 1e-9);
    }

    #[test]
    fn chain_file_round_trip(kind in 0u8..5, d in 1usize..=3, k in 0usize..=2, seed in any::<u64>()) {
        prop_assume!(k <= d);
        let sp = space_for(kind, d, seed);
        let p = random_chain(&mut rng(seed), &sp, R, k, 2, 1.0);
        let text = chain_to_json(&p);
        prop_assert_eq!(chain_to_json(&chain_from_json(&text).unwrap()), text);
    }

    #[test]
    fn euclidean_density_is_one(d in 2usize..=4, k in 1usize..=3, seed in any::<u64>()) {
        prop_assume!(k <= d);
        let sp = NormedSpace::euclidean(d);
        let pts = random_simplex(&mut rng(seed), d, k, 1.0);
        let poly = flatchain::chains::OrientedPolytope::simplex(&pts).unwrap();
        prop_assert!((density(&sp, &poly.plane().unwrap()).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn mass_homogeneity_and_one_direction_scaling(kind in 0u8..5, d in 2usize..=3, k in 1usize..=2, seed in any::<u64>(), s in 0.1..5.0f64) {
        prop_assume!(k <= d);
        let sp = space_for(kind, d, seed);
        let mut r = rng(seed);
        let pts = random_simplex(&mut r, d, k, 1.0);
        let g = random_coeff(&mut r, Z);
        let m = mass(&simplex_chain(&sp, Z, g, &pts)).unwrap();
        let scaled: Vec<Vector> = pts.iter().map(|p| p * s).collect();
        let ms = mass(&simplex_chain(&sp, Z, g, &scaled)).unwrap();
        prop_assert!((ms - s.powi(k as i32) * m).abs() <= 1e-12 * ms.max(1.0) * 10.0);
        // stretch the first edge only
        let mut one = pts.clone();
        one[1] = &pts[0] + (&pts[1] - &pts[0]) * s;
        let m1 = mass(&simplex_chain(&sp, Z, g, &one)).unwrap();
        prop_assert!((m1 - s * m).abs() <= 1e-12 * m1.max(1.0) * 10.0);
    }

    #[test]
    fn mass_subadditive(kind in 0u8..5, d in 2usize..=3, k in 1usize..=2, seed in any::<u64>()) {
        prop_assume!(k <= d);
        let sp = space_for(kind, d, seed);
        let mut r = rng(seed);
        let a = random_chain(&mut r, &sp, R, k, 2, 1.0);
        let b = random_chain(&mut r, &sp, R, k, 2, 1.0);
        prop_assert!(mass(&a.add(&b).unwrap()).unwrap() <= mass(&a).unwrap() + mass(&b).unwrap() + 1e-9);
        let n = chain_norms(&a).unwrap();
        prop_assert!((n.n_value - n.mass - n.boundary_mass).abs() <= 1e-12 * (1.0 + n.n_value));
    }

    #[test]
    fn restriction_additivity_and_slice_support(kind in 0u8..5, d in 2usize..=3, k in 1usize..=2, seed in any::<u64>(), level in -0.8..0.8f64) {
        prop_assume!(k <= d);
        let sp = space_for(kind, d, seed);
        let mut r = rng(seed);
        let p = random_chain(&mut r, &sp, Z, k, 2, 1.0).canonicalize();
        let f = Functional::unit(&sp, random_point(&mut r, d, 1.0)).unwrap();
        let m = mass(&p).unwrap();
        let below = mass(&restrict_halfspace(&p, &f, level)).unwrap();
        let above = mass(&restrict_complement(&p, &f, level)).unwrap();
        prop_assert!((below + above - m).abs() <= 1e-9 * (1.0 + m));
        let s = slice(&p, &f, level).unwrap();
        for poly in s.support() {
            for v in poly.vertices() {
                prop_assert!((f.eval(v) - level).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn cone_boundary_identity(kind in 0u8..5, d in 2usize..=3, k in 0usize..=2, seed in any::<u64>()) {
        prop_assume!(k < d);
        let sp = space_for(kind, d, seed);
        let mut r = rng(seed);
        let p = random_chain(&mut r, &sp, Z, k, 2, 1.0);
        let z = random_point(&mut r, d, 2.0);
        prop_assert!(cone_boundary_check(&z, &p).unwrap() <= 1e-9);
        prop_assert_eq!(cone(&z, &p).unwrap().k(), k + 1);
    }

    #[test]
    fn quantized_coefficients_do_not_grow(seed in any::<u64>(), step in 0.01..0.5f64) {
        let sp = NormedSpace::euclidean(2);
        let p = random_chain(&mut rng(seed), &sp, R, 0, 4, 1.0);
        let centers = lattice_centers(&sp, &vector(&[-1.0, -1.0]), &vector(&[1.0, 1.0]), 0.3, None);
        let q = quantize_zero_chain(&p, &centers, 0.3, CoeffNet::Grid(step)).unwrap();
        let before: f64 = p.summands().iter().map(|s| s.coeff.norm()).sum();
        let after: f64 = q.chain.summands().iter().map(|s| s.coeff.norm()).sum();
        prop_assert!(after <= before + 1e-12);
        for x in -20..20 {
            let g = GroupElement::Real(x as f64 * 0.37);
            prop_assert!(CoeffNet::Grid(step).project(&g).norm() <= g.norm());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn flat_norm_axioms(seed in any::<u64>(), k in 0usize..=1) {
        let sp = NormedSpace::lp(2, 1.0).unwrap();
        let res = 4;
        let budget = ChainBudget { lattice: Some(0.25), ..ChainBudget::unit_box(2, 2, 10.0) };
        let a = generate_random_chain(&sp, Z, k, seed, &budget).unwrap();
        let b = generate_random_chain(&sp, Z, k, seed.wrapping_add(1), &budget).unwrap();
        let complex = build_complex(&sp, &vector(&[0.0, 0.0]), &vector(&[1.0, 1.0]), res).unwrap();
        let (ea, ra) = embed_chain(&a, &complex).unwrap();
        let (eb, rb) = embed_chain(&b, &complex).unwrap();
        prop_assert!(ra.exact && rb.exact);
        for mode in [SolveMode::Real, SolveMode::Integer] {
            let fa = flat_norm_upper(&complex, &ea, mode).unwrap();
            let fb = flat_norm_upper(&complex, &eb, mode).unwrap();
            prop_assert!(fa.value >= 0.0);
            prop_assert!(fa.value <= mass(&a).unwrap() + 1e-9);
            prop_assert!((fa.recompute(&complex, &ea).unwrap() - fa.value).abs() <= 1e-9);
            prop_assert_eq!(fa.value < 1e-12, a.canonicalize().is_zero());
            let sum = a.add(&b).unwrap();
            let (es, _) = embed_chain(&sum, &complex).unwrap();
            let fs = flat_norm_upper(&complex, &es, mode).unwrap();
            prop_assert!(fs.value <= fa.value + fb.value + 1e-6);
            let dab = flat_distance(&a, &b, &complex, mode).unwrap();
            let dba = flat_distance(&b, &a, &complex, mode).unwrap();
            prop_assert!((dab.certificate.value - dba.certificate.value).abs() <= 1e-6);
        }
    }

    #[test]
    fn mass_direct_matches_density_on_segments(kind in 0u8..5, d in 2usize..=3, seed in any::<u64>()) {
        let sp = space_for(kind, d, seed);
        let mut r = rng(seed);
        let pts = random_simplex(&mut r, d, 1, 1.0);
        let g = random_coeff(&mut r, Z);
        let c = simplex_chain(&sp, Z, g, &pts);
        let m = mass(&c).unwrap();
        let md = mass_direct(&sp, &c.summands()[0], DirectGrid::default()).unwrap();
        prop_assert!((m - g.norm() * sp.distance(&pts[0], &pts[1])).abs() <= 1e-9 * (1.0 + m));
        prop_assert!((md - m).abs() <= 1e-3 * m.max(1.0));
    }

    #[test]
    fn generator_is_deterministic_and_bounded(d in 1usize..=3, k in 0usize..=2, seed in any::<u64>(), q in 1.0..10.0f64) {
        prop_assume!(k <= d);
        let sp = NormedSpace::euclidean(d);
        let budget = ChainBudget::unit_box(d, 3, q);
        match generate_random_chain(&sp, Z, k, seed, &budget) {
            Ok(a) => {
                let b = generate_random_chain(&sp, Z, k, seed, &budget).unwrap();
                prop_assert_eq!(chain_to_json(&a), chain_to_json(&b));
                prop_assert!(chain_norms(&a).unwrap().n_value <= q);
            }
            Err(e) => prop_assert!(matches!(e, flatchain::Error::Infeasible(_))),
        }
    }
}

#[test]
fn modular_group_axioms_exhaustive() {
    for m in 2..=12u32 {
        let g = CoefficientGroup::integers_mod(m).unwrap();
        let elems: Vec<GroupElement> = (0..m as i64).map(|i| g.from_int(i)).collect();
        for a in &elems {
            assert_eq!(a.is_zero(), a.norm() == 0.0);
            assert_eq!(a.neg().norm(), a.norm());
            assert!(a.add(&a.neg()).unwrap().is_zero());
            for b in &elems {
                let s = a.add(b).unwrap();
                assert_eq!(s, b.add(a).unwrap());
                assert!(s.norm() <= a.norm() + b.norm() + 1e-12, "m={m}: |{a:?}+{b:?}|");
                for c in &elems {
                    assert_eq!(s.add(c).unwrap(), a.add(&b.add(c).unwrap()).unwrap());
                }
            }
        }
    }
}

/// Overlapping tetrahedra that once produced a dropped sliver and a
/// non-convex merge during canonicalization.
#[test]
fn canonical_boundary_regressions() {
    let sp = NormedSpace::euclidean(3);
    for seed in [15699892684096402315u64, 17800750445591723377] {
        let p = random_chain(&mut rng(seed), &sp, Z, 3, 3, 1.0);
        let c = p.canonicalize();
        assert!(same_chain(&p.boundary().unwrap(), &c.boundary().unwrap()) <= 1e-9, "seed {seed}");
        assert!(c.boundary().unwrap().boundary().unwrap().canonicalize().is_zero());
    }
}
