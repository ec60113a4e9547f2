use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chains::{OrientedPolytope, PolyChain, SimpleChain};
use crate::error::{Error, Result};
use crate::foundation::{CoefficientGroup, GroupElement, NormedSpace};
use crate::linalg::{self, Vector};
use crate::mass::chain_norms;

pub const MAX_ATTEMPTS: u64 = 100;

/// Limits for [`generate_random_chain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainBudget {
    pub max_summands: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// bound on `N(P) = M(P) + M(∂P)`
    pub max_n: f64,
    /// snap vertices to this lattice (measured from `lo`) and use axis-aligned
    /// simplices only
    #[serde(default)]
    pub lattice: Option<f64>,
}

impl ChainBudget {
    pub fn unit_box(dim: usize, max_summands: usize, max_n: f64) -> ChainBudget {
        ChainBudget {
            max_summands,
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
            max_n,
            lattice: None,
        }
    }
}

fn random_coeff(rng: &mut ChaCha8Rng, group: CoefficientGroup) -> GroupElement {
    match group {
        CoefficientGroup::Integers => {
            let n = rng.gen_range(1..=2i64);
            GroupElement::Int(if rng.gen_bool(0.5) { n } else { -n })
        }
        CoefficientGroup::IntegersMod(m) => group.from_int(rng.gen_range(1..m as i64)),
        CoefficientGroup::Reals => {
            let x: f64 = rng.gen_range(0.25..2.0);
            GroupElement::Real(if rng.gen_bool(0.5) { x } else { -x })
        }
    }
}

fn inside(x: &Vector, lo: &[f64], hi: &[f64]) -> bool {
    (0..x.len()).all(|i| x[i] >= lo[i] - 1e-12 && x[i] <= hi[i] + 1e-12)
}

fn random_simplex(rng: &mut ChaCha8Rng, d: usize, k: usize, budget: &ChainBudget, shrink: f64) -> Option<Vec<Vector>> {
    let extent = (0..d).map(|i| budget.hi[i] - budget.lo[i]).fold(f64::INFINITY, f64::min);
    for _ in 0..50 {
        let base = match budget.lattice {
            Some(h) => Vector::from_iterator(
                d,
                (0..d).map(|i| {
                    let steps = ((budget.hi[i] - budget.lo[i]) / h + 1e-9).floor() as i64;
                    budget.lo[i] + h * rng.gen_range(0..=steps) as f64
                }),
            ),
            None => Vector::from_iterator(d, (0..d).map(|i| rng.gen_range(budget.lo[i]..=budget.hi[i]))),
        };
        let mut pts = vec![base.clone()];
        let axis_aligned = budget.lattice.is_some() || rng.gen_bool(0.5);
        let mut axes: Vec<usize> = (0..d).collect();
        for i in 0..k {
            let j = rng.gen_range(i..d);
            axes.swap(i, j);
        }
        for &axis in axes.iter().take(k) {
            let edge = if axis_aligned {
                let len = match budget.lattice {
                    Some(h) => h * rng.gen_range(1..=3) as f64,
                    None => shrink * extent * rng.gen_range(0.05..0.4),
                };
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                linalg::unit(d, axis) * (sign * len)
            } else {
                let dir = Vector::from_iterator(d, (0..d).map(|_| rng.gen_range(-1.0..1.0)));
                if dir.norm() < 1e-3 {
                    continue;
                }
                dir.normalize() * (shrink * extent * rng.gen_range(0.05..0.4))
            };
            pts.push(&base + edge);
        }
        if pts.len() == k + 1 && pts.iter().all(|p| inside(p, &budget.lo, &budget.hi)) && linalg::affine_rank(&pts, 1e-9) == k {
            return Some(pts);
        }
    }
    None
}

fn attempt(
    space: &NormedSpace,
    group: CoefficientGroup,
    k: usize,
    rng: &mut ChaCha8Rng,
    budget: &ChainBudget,
    shrink: f64,
) -> Result<PolyChain> {
    let d = space.dim();
    let count = rng.gen_range(1..=budget.max_summands);
    let mut summands = Vec::with_capacity(count);
    for _ in 0..count {
        let Some(pts) = random_simplex(rng, d, k, budget, shrink) else {
            continue;
        };
        let coeff = random_coeff(rng, group);
        let poly = if k == 0 {
            OrientedPolytope::point(pts[0].clone())
        } else {
            OrientedPolytope::simplex(&pts)?
        };
        summands.push(SimpleChain { coeff, poly });
    }
    Ok(PolyChain::new(space.clone(), group, k, summands)?.canonicalize())
}

/// Random chain of axis-aligned and rotated simplices inside the budget box,
/// regenerated (with a fresh stream and shorter edges) until `N ≤ max_n`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail
pub fn generate_random_chain(space: &NormedSpace, group: CoefficientGroup, k: usize, seed: u64, budget: &ChainBudget) -> Result<PolyChain> {
    let d = space.dim();
    if k > d {
        return Err(Error::DimensionMismatch { expected: d, got: k });
    }
    if budget.lo.len() != d || budget.hi.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: budget.lo.len(),
        });
    }
    if budget.lo.iter().zip(&budget.hi).any(|(a, b)| !(a < b)) {
        return Err(Error::Infeasible("bounding box is empty".into()));
    }
    if budget.max_summands == 0 {
        return Ok(PolyChain::zero(space.clone(), group, k));
    }
    for n in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n);
        let shrink = 0.95f64.powi(n as i32);
        let chain = attempt(space, group, k, &mut rng, budget, shrink)?;
        if chain_norms(&chain)?.n_value <= budget.max_n {
            return Ok(chain);
        }
    }
    Err(Error::Infeasible(format!(
        "no chain with N <= {} after {MAX_ATTEMPTS} attempts",
        budget.max_n
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::io::chain_to_json;

    #[test]
    fn deterministic_and_bounded() {
        let sp = NormedSpace::euclidean(2);
        let b = ChainBudget::unit_box(2, 4, 10.0);
        for k in 0..=2 {
            for seed in 0..20 {
                let a = generate_random_chain(&sp, CoefficientGroup::Integers, k, seed, &b).unwrap();
                let c = generate_random_chain(&sp, CoefficientGroup::Integers, k, seed, &b).unwrap();
                assert_eq!(chain_to_json(&a), chain_to_json(&c));
                assert!(chain_norms(&a).unwrap().n_value <= 10.0);
                assert!(a
                    .summands()
                    .iter()
                    .all(|s| s.poly.vertices().iter().all(|v| inside(v, &b.lo, &b.hi))));
            }
        }
        let zero = ChainBudget::unit_box(2, 0, 10.0);
        assert!(generate_random_chain(&sp, CoefficientGroup::Integers, 1, 3, &zero)
            .unwrap()
            .is_zero());
        let tight = ChainBudget::unit_box(2, 3, 1e-6);
        assert!(matches!(
            generate_random_chain(&sp, CoefficientGroup::Integers, 1, 3, &tight),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn lattice_chains_sit_on_the_lattice() {
        let sp = NormedSpace::lp(2, 1.0).unwrap();
        let b = ChainBudget {
            lattice: Some(0.125),
            ..ChainBudget::unit_box(2, 3, 10.0)
        };
        let c = generate_random_chain(&sp, CoefficientGroup::Integers, 1, 7, &b).unwrap();
        for s in c.summands() {
            for v in s.poly.vertices() {
                assert!(v.iter().all(|x| (x / 0.125 - (x / 0.125).round()).abs() < 1e-9));
            }
        }
    }
}
