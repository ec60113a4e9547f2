#![allow(dead_code)]

use flatchain::chains::{OrientedPolytope, PolyChain, SimpleChain};
use flatchain::foundation::{CoefficientGroup, GroupElement, NormSpec, NormedSpace};
use flatchain::linalg::{affine_rank, unit, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `±e_i` plus `extra` random symmetric facet pairs.
pub fn random_polytope_norm(rng: &mut ChaCha8Rng, d: usize, extra: usize) -> NormedSpace {
    let mut facets = Vec::new();
    for i in 0..d {
        facets.push(unit(d, i));
        facets.push(-unit(d, i));
    }
    for _ in 0..extra {
        let h = Vector::from_iterator(d, (0..d).map(|_| rng.gen_range(-1.0..1.0)));
        facets.push(h.clone());
        facets.push(-h);
    }
    NormedSpace::new(d, NormSpec::Polytope { facets }).unwrap()
}

/// ℓ1, ℓ2, ℓ∞ and two random polytope norms.
pub fn norm_family(rng: &mut ChaCha8Rng, d: usize) -> Vec<(String, NormedSpace)> {
    vec![
        ("l1".into(), NormedSpace::lp(d, 1.0).unwrap()),
        ("l2".into(), NormedSpace::euclidean(d)),
        ("linf".into(), NormedSpace::lp(d, f64::INFINITY).unwrap()),
        ("poly_a".into(), random_polytope_norm(rng, d, 2)),
        ("poly_b".into(), random_polytope_norm(rng, d, 3)),
    ]
}

pub fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vector {
    Vector::from_iterator(d, (0..d).map(|_| rng.gen_range(-scale..scale)))
}

/// Nondegenerate random k-simplex vertices in `[-scale, scale]^d`.
pub fn random_simplex(rng: &mut ChaCha8Rng, d: usize, k: usize, scale: f64) -> Vec<Vector> {
    loop {
        let pts: Vec<Vector> = (0..=k).map(|_| random_point(rng, d, scale)).collect();
        if affine_rank(&pts, 1e-3) == k {
            return pts;
        }
    }
}

pub fn random_coeff(rng: &mut ChaCha8Rng, group: CoefficientGroup) -> GroupElement {
    match group {
        CoefficientGroup::Integers => GroupElement::Int(*[-3i64, -2, -1, 1, 2, 3].get(rng.gen_range(0..6)).unwrap()),
        CoefficientGroup::IntegersMod(m) => group.from_int(rng.gen_range(1..m as i64)),
        CoefficientGroup::Reals => GroupElement::Real(rng.gen_range(0.25..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }),
    }
}

pub fn simplex_chain(space: &NormedSpace, group: CoefficientGroup, coeff: GroupElement, pts: &[Vector]) -> PolyChain {
    PolyChain::simplex(space, group, coeff, pts).unwrap()
}

/// Sum of `n` random k-simplices with random coefficients.
pub fn random_chain(rng: &mut ChaCha8Rng, space: &NormedSpace, group: CoefficientGroup, k: usize, n: usize, scale: f64) -> PolyChain {
    let d = space.dim();
    let summands = (0..n)
        .map(|_| {
            let pts = random_simplex(rng, d, k, scale);
            SimpleChain {
                coeff: random_coeff(rng, group),
                poly: if k == 0 {
                    OrientedPolytope::point(pts[0].clone())
                } else {
                    OrientedPolytope::simplex(&pts).unwrap()
                },
            }
        })
        .collect();
    PolyChain::new(space.clone(), group, k, summands).unwrap()
}

pub fn euclidean_volume(pts: &[Vector]) -> f64 {
    let k = pts.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let d = pts[0].len();
    let m = nalgebra::DMatrix::from_fn(d, k, |i, j| pts[j + 1][i] - pts[0][i]);
    let gram = m.transpose() * &m;
    gram.determinant().max(0.0).sqrt() / (1..=k).map(|i| i as f64).product::<f64>()
}
