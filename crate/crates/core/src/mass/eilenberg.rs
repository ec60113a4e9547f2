//! Ratio `int M(P ∩ f^{-1}(r)) dr / (Lip(f) M(P))`.
//!
//! For an affine `g` on a flat piece `Q` the slice integral is exact by the
//! coarea formula: `sigma_{k-1}(ker g) |grad g| vol(Q)`. Linear `f` use that
//! directly; other functions use it on the pieces of a piecewise-linear
//! interpolant.

use serde::Serialize;

use crate::chains::PolyChain;
use crate::error::{Error, Result};
use crate::foundation::NormedSpace;
use crate::geometry::Frame;
use crate::linalg::{self, Vector};
use crate::mass::{density, mass, PlaneKey};
use crate::slicing::{pl_pieces, LipschitzFn};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EilenbergReport {
    pub integral: f64,
    pub lipschitz: f64,
    pub mass: f64,
    /// `None` for a zero chain or a constant function
    pub ratio: Option<f64>,
    /// subdivision stage used for nonlinear `f` (0 for linear)
    pub stage: usize,
}

/// `sigma_{k-1}(ker a) |a|` for a local gradient `a` in `frame`.
fn slice_density(space: &NormedSpace, frame: &Frame, a: &Vector) -> Result<f64> {
    let n = a.norm();
    if n <= 1e-14 {
        return Ok(0.0);
    }
    if frame.k() == 1 {
        return Ok(n);
    }
    let perp = linalg::orthonormal_complement(std::slice::from_ref(&(a / n)), frame.k());
    let dirs: Vec<Vector> = perp.iter().map(|c| frame.direction(c)).collect();
    Ok(density(space, &PlaneKey::new(&dirs)?)? * n)
}

pub fn eilenberg_ratio(chain: &PolyChain, f: &LipschitzFn, stage: usize) -> Result<EilenbergReport> {
    if chain.k() == 0 {
        return Err(Error::DimensionTooLow { required: 1, k: 0 });
    }
    let space = chain.space();
    let c = chain.canonicalize();
    let mut integral = 0.0;
    for s in c.summands() {
        let frame = s.poly.frame();
        let g = s.coeff.norm();
        if let LipschitzFn::Linear { covector, .. } = f {
            let a = Vector::from_iterator(frame.k(), frame.basis.iter().map(|e| e.dot(covector)));
            integral += g * slice_density(space, frame, &a)? * s.poly.volume();
        } else {
            for (piece, a) in pl_pieces(space, s, f, stage)? {
                integral += g * slice_density(space, frame, &a)? * piece.volume();
            }
        }
    }
    let lipschitz = f.lipschitz(space);
    let m = mass(&c)?;
    let ratio = (m > 0.0 && lipschitz > 0.0).then(|| integral / (lipschitz * m));
    Ok(EilenbergReport {
        integral,
        lipschitz,
        mass: m,
        ratio,
        stage: if f.is_linear() { 0 } else { stage },
    })
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
    fn square_with_coordinate_function() {
        let sq = square(&NormedSpace::euclidean(2));
        let f = LipschitzFn::Linear {
            covector: vector(&[1.0, 0.0]),
            offset: 0.0,
        };
        let r = eilenberg_ratio(&sq, &f, 0).unwrap();
        assert!((r.integral - 1.0).abs() < 1e-12);
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-12);
        let constant = LipschitzFn::Linear {
            covector: vector(&[0.0, 0.0]),
            offset: 1.0,
        };
        assert_eq!(eilenberg_ratio(&sq, &constant, 0).unwrap().integral, 0.0);
    }

    #[test]
    fn distance_to_center() {
        let sq = square(&NormedSpace::euclidean(2));
        let f = LipschitzFn::DistanceToPoint(vector(&[0.5, 0.5]));
        let r = eilenberg_ratio(&sq, &f, 5).unwrap();
        // |grad f| = 1 almost everywhere, so the integral is the area
        assert!((r.integral - 1.0).abs() < 2e-2, "{r:?}");
        assert!(r.ratio.unwrap().is_finite());
    }

    #[test]
    fn l1_square_with_diagonal_functional() {
        // slices of x + y are anti-diagonal segments of l1 length 2|t|
        let sq = square(&NormedSpace::lp(2, 1.0).unwrap());
        let f = LipschitzFn::Linear {
            covector: vector(&[1.0, 1.0]),
            offset: 0.0,
        };
        let r = eilenberg_ratio(&sq, &f, 0).unwrap();
        assert!((r.integral - 2.0).abs() < 1e-9, "{r:?}");
    }
}
