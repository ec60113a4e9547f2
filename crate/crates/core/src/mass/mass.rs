use crate::chains::{OrientedPolytope, PolyChain, SimpleChain};
use crate::error::{Error, Result};
use crate::foundation::NormedSpace;
use crate::linalg::{self, Vector};
use crate::mass::density::{density, PlaneKey};

/// `N(P) = M(P) + M(dP)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainNorms {
    pub mass: f64,
    pub boundary_mass: f64,
    pub n_value: f64,
}

/// Size of a single polytope: density of its plane times Euclidean volume.
pub fn polytope_size(space: &NormedSpace, poly: &OrientedPolytope) -> Result<f64> {
    if poly.k() == 0 {
        return Ok(1.0);
    }
    Ok(density(space, &poly.plane()?)? * poly.volume())
}

pub fn simple_mass(space: &NormedSpace, s: &SimpleChain) -> Result<f64> {
    Ok(s.coeff.norm() * polytope_size(space, &s.poly)?)
}

/// Sum of summand masses without canonicalizing. Equals the mass when the
/// summands already have disjoint relative interiors.
pub fn summand_mass(chain: &PolyChain) -> Result<f64> {
    // an empty f64 sum is -0.0
    Ok(chain
        .summands()
        .iter()
        .map(|s| simple_mass(chain.space(), s))
        .sum::<Result<f64>>()?
        + 0.0)
}

pub fn mass(chain: &PolyChain) -> Result<f64> {
    summand_mass(&chain.canonicalize())
}

/// Per-summand masses of the canonical form.
pub fn mass_breakdown(chain: &PolyChain) -> Result<Vec<f64>> {
    let c = chain.canonicalize();
    c.summands().iter().map(|s| simple_mass(c.space(), s)).collect()
}

pub fn chain_norms(chain: &PolyChain) -> Result<ChainNorms> {
    let m = mass(chain)?;
    let b = if chain.k() == 0 { 0.0 } else { mass(&chain.boundary()?)? };
    Ok(ChainNorms {
        mass: m,
        boundary_mass: b,
        n_value: m + b,
    })
}

/// `Sz(P)`: sum over canonical summands of mass / |g|.
pub fn size(chain: &PolyChain) -> Result<f64> {
    let c = chain.canonicalize();
    Ok(c.summands()
        .iter()
        .map(|s| polytope_size(c.space(), &s.poly))
        .sum::<Result<f64>>()?
        + 0.0)
}

/// `Sz(P) / diam(spt P)^k`, diameter in the space norm.
pub fn fullness(space: &NormedSpace, simple: &SimpleChain) -> Result<f64> {
    if simple.coeff.is_zero() {
        return Err(Error::Degenerate("zero chain has no fullness".into()));
    }
    let sz = polytope_size(space, &simple.poly)?;
    let diam = simple.poly.diameter(|v| space.norm(v));
    Ok(sz / diam.powi(simple.poly.k() as i32))
}

/// A simplex built by the full-simplex construction.
#[derive(Debug, Clone)]
pub struct FullSimplex {
    /// vertices in R^d, oriented so that `(v1 - v0, ...)` agrees with the plane basis
    pub vertices: Vec<Vector>,
    pub fullness: f64,
}

impl FullSimplex {
    pub fn polytope(&self) -> Result<OrientedPolytope> {
        OrientedPolytope::simplex(&self.vertices)
    }
}

/// Builds a k-simplex in `plane` one vertex at a time: the current j-simplex
/// is scaled to norm-diameter j+1, then an apex is placed at height 1 over its
/// centroid for a unit-dual functional vanishing on it.
pub fn full_simplex(space: &NormedSpace, plane: &PlaneKey) -> Result<FullSimplex> {
    if plane.ambient() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: plane.ambient(),
        });
    }
    let e = plane.basis();
    let k = plane.k();
    let embed = |c: &Vector| -> Vector {
        let mut x = linalg::zeros(space.dim());
        for (ci, ei) in c.iter().zip(e) {
            x.axpy(*ci, ei, 1.0);
        }
        x
    };
    let n_plane = |c: &Vector| space.norm(&embed(c));
    let u = linalg::unit(k, 0);
    let mut verts: Vec<Vector> = vec![linalg::zeros(k), &u / n_plane(&u)];
    for j in 1..k {
        let diam = pairwise_max(&verts, &n_plane);
        let s = (j as f64 + 1.0) / diam;
        for v in verts.iter_mut() {
            *v *= s;
        }
        let dirs: Vec<Vector> = verts[1..].iter().map(|v| v - &verts[0]).collect();
        let ortho = linalg::gram_schmidt(&dirs, 1e-12).ok_or_else(|| Error::Degenerate("simplex collapsed".into()))?;
        let g = linalg::orthonormal_complement(&ortho, k)[0].clone();
        // phi = g / sdn has unit dual norm on the plane; phi(g) = 1 / sdn
        let sdn = space.subspace_dual_norm(e, &g)?;
        let apex = linalg::centroid(&verts) + &g * sdn;
        verts.push(apex);
    }
    let mut vertices: Vec<Vector> = verts.iter().map(embed).collect();
    let cols: Vec<Vector> = verts[1..].iter().map(|v| v - &verts[0]).collect();
    if k >= 2 && linalg::det_columns(&cols) < 0.0 {
        vertices.swap(1, 2);
    }
    let poly = OrientedPolytope::simplex(&vertices)?;
    let sz = polytope_size(space, &poly)?;
    let diam = poly.diameter(|v| space.norm(v));
    Ok(FullSimplex {
        vertices,
        fullness: sz / diam.powi(k as i32),
    })
}

fn pairwise_max(pts: &[Vector], n: &impl Fn(&Vector) -> f64) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(n(&(&pts[i] - &pts[j])));
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::{CoefficientGroup, GroupElement};
    use crate::linalg::vector;

    fn square(space: &NormedSpace) -> PolyChain {
        PolyChain::from_raw(
            space.clone(),
            CoefficientGroup::Integers,
            2,
            vec![(
                GroupElement::Int(1),
                vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[1.0, 1.0]), vector(&[0.0, 1.0])],
                vec![vector(&[1.0, 0.0]), vector(&[0.0, 1.0])],
            )],
        )
        .unwrap()
    }

    #[test]
    fn zero_chain_mass() {
        let sp = NormedSpace::euclidean(2);
        let c = PolyChain::from_raw(
            sp,
            CoefficientGroup::Integers,
            0,
            vec![
                (GroupElement::Int(2), vec![vector(&[0.0, 0.0])], vec![]),
                (GroupElement::Int(3), vec![vector(&[1.0, 0.0])], vec![]),
            ],
        )
        .unwrap();
        assert_eq!(mass(&c).unwrap(), 5.0);
    }

    #[test]
    fn segment_and_square_masses() {
        let linf = NormedSpace::lp(2, f64::INFINITY).unwrap();
        let seg = PolyChain::simplex(
            &linf,
            CoefficientGroup::Integers,
            GroupElement::Int(1),
            &[vector(&[0.0, 0.0]), vector(&[1.0, 1.0])],
        )
        .unwrap();
        assert!((mass(&seg).unwrap() - 1.0).abs() < 1e-12);
        let l1 = NormedSpace::lp(2, 1.0).unwrap();
        assert!((mass(&square(&l1)).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn size_and_fullness() {
        let l2 = NormedSpace::euclidean(2);
        let seg = PolyChain::simplex(
            &l2,
            CoefficientGroup::Integers,
            GroupElement::Int(3),
            &[vector(&[0.0, 0.0]), vector(&[1.0, 0.0])],
        )
        .unwrap();
        assert!((size(&seg).unwrap() - 1.0).abs() < 1e-12);
        let sq = square(&l2);
        assert!((fullness(&l2, &sq.summands()[0]).unwrap() - 0.5).abs() < 1e-12);
        let tri = PolyChain::simplex(
            &l2,
            CoefficientGroup::Integers,
            GroupElement::Int(1),
            &[vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])],
        )
        .unwrap();
        assert!((fullness(&l2, &tri.summands()[0]).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn full_simplex_examples() {
        let l2 = NormedSpace::euclidean(2);
        let p = PlaneKey::new(&[vector(&[1.0, 0.0]), vector(&[0.0, 1.0])]).unwrap();
        let fs = full_simplex(&l2, &p).unwrap();
        assert!((fs.fullness - 0.25).abs() < 1e-12);
        let seg = full_simplex(&l2, &PlaneKey::new(&[vector(&[1.0, 1.0])]).unwrap()).unwrap();
        assert!((seg.fullness - 1.0).abs() < 1e-12);
        let linf = NormedSpace::lp(3, f64::INFINITY).unwrap();
        let p = PlaneKey::new(&[vector(&[1.0, 0.0, 0.0]), vector(&[0.0, 1.0, 0.0])]).unwrap();
        assert!(full_simplex(&linf, &p).unwrap().fullness >= 0.1);
    }
}
