use crate::chains::{OrientedPolytope, PolyChain, SimpleChain};
use crate::error::{Error, Result};
use crate::geometry::REL_TOL;
use crate::linalg::Vector;
use crate::mass::mass;

/// Cone over one polytope, `None` when `z` lies in its affine hull.
pub fn cone_polytope(z: &Vector, poly: &OrientedPolytope) -> Option<OrientedPolytope> {
    let tol = REL_TOL * poly.euclidean_scale().max((z - &poly.vertices()[0]).norm());
    if poly.frame().distance(z) <= tol {
        return None;
    }
    let mut vertices = poly.vertices().to_vec();
    vertices.push(z.clone());
    let mut basis = vec![&poly.vertices()[0] - z];
    basis.extend(poly.orientation_basis().iter().cloned());
    OrientedPolytope::new(vertices, basis).ok()
}

/// `C_z P`, oriented so that `∂C_z P = P - C_z ∂P` (for k = 0,
/// `∂C_z P = P - (sum of coefficients)[z]`).
pub fn cone(z: &Vector, chain: &PolyChain) -> Result<PolyChain> {
    if z.len() != chain.space().dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.space().dim(),
            got: z.len(),
        });
    }
    if chain.k() == chain.space().dim() {
        // every apex lies in the affine hull of a top-dimensional polytope
        return Ok(PolyChain::zero(chain.space().clone(), chain.group(), chain.k() + 1));
    }
    let summands = chain
        .summands()
        .iter()
        .filter_map(|s| cone_polytope(z, &s.poly).map(|poly| SimpleChain { coeff: s.coeff, poly }))
        .collect();
    PolyChain::new(chain.space().clone(), chain.group(), chain.k() + 1, summands)
}

/// Mass of `∂C_z R - R + C_z ∂R` (with `C_z ∂R` replaced by `ε(R)[z]` for k = 0).
pub fn cone_boundary_check(z: &Vector, chain: &PolyChain) -> Result<f64> {
    let c = cone(z, chain)?;
    let lhs = c.boundary()?.sub(chain)?;
    let correction = if chain.k() == 0 {
        let total = chain
            .summands()
            .iter()
            .fold(chain.group().zero(), |acc, s| acc.add(&s.coeff).expect("same group"));
        chain.with_summands(vec![SimpleChain {
            coeff: total,
            poly: OrientedPolytope::point(z.clone()),
        }])
    } else {
        cone(z, &chain.boundary()?)?
    };
    mass(&lhs.add(&correction)?)
}

/// `M(C_z P) / (max_{x in spt P} |z - x| M(P))`.
pub fn cone_mass_ratio(z: &Vector, chain: &PolyChain) -> Result<f64> {
    let m = mass(chain)?;
    if m == 0.0 {
        return Err(Error::Degenerate("cone mass ratio of a zero chain".into()));
    }
    let space = chain.space();
    let reach = chain
        .summands()
        .iter()
        .flat_map(|s| s.poly.vertices().iter())
        .map(|v| space.distance(z, v))
        .fold(0.0, f64::max);
    if reach == 0.0 {
        return Ok(0.0);
    }
    Ok(mass(&cone(z, chain)?)? / (reach * m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::{CoefficientGroup, GroupElement, NormedSpace};
    use crate::linalg::vector;

    fn seg(sp: &NormedSpace, a: &[f64], b: &[f64]) -> PolyChain {
        PolyChain::simplex(sp, CoefficientGroup::Integers, GroupElement::Int(1), &[vector(a), vector(b)]).unwrap()
    }

    #[test]
    fn cone_over_segment_is_triangle() {
        let sp = NormedSpace::euclidean(2);
        let c = cone(&vector(&[0.0, 0.0]), &seg(&sp, &[1.0, 0.0], &[1.0, 1.0])).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.k(), 2);
        assert!((c.summands()[0].poly.volume() - 0.5).abs() < 1e-12);
        let flat = cone(&vector(&[1.0, 3.0]), &seg(&sp, &[1.0, 0.0], &[1.0, 1.0])).unwrap();
        assert!(flat.is_zero());
        let zero = PolyChain::zero(sp.clone(), CoefficientGroup::Integers, 1);
        assert!(cone(&vector(&[0.0, 0.0]), &zero).unwrap().is_zero());
    }

    #[test]
    fn boundary_identity() {
        let sp = NormedSpace::euclidean(2);
        let sq = PolyChain::from_raw(
            sp.clone(),
            CoefficientGroup::Integers,
            2,
            vec![(
                GroupElement::Int(1),
                vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[1.0, 1.0]), vector(&[0.0, 1.0])],
                vec![vector(&[1.0, 0.0]), vector(&[0.0, 1.0])],
            )],
        )
        .unwrap();
        let sp3 = NormedSpace::euclidean(3);
        assert!(cone_boundary_check(&vector(&[3.0, 3.0]), &sq).unwrap() < 1e-9);
        assert!(cone_boundary_check(&vector(&[0.3, 2.0]), &seg(&sp, &[0.0, 0.0], &[1.0, 0.5])).unwrap() < 1e-9);
        let pts = seg(&sp3, &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).boundary().unwrap();
        assert!(cone_boundary_check(&vector(&[0.0, 1.0, 1.0]), &pts).unwrap() < 1e-9);
    }

    #[test]
    fn mass_ratio_examples() {
        let sp = NormedSpace::euclidean(2);
        let s = seg(&sp, &[0.0, 0.0], &[1.0, 0.0]);
        let r = cone_mass_ratio(&vector(&[0.5, 1.0]), &s).unwrap();
        assert!((r - 0.5 / 1.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(cone_mass_ratio(&vector(&[2.0, 0.0]), &s).unwrap(), 0.0);
    }
}
