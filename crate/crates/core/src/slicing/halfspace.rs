use crate::chains::{PolyChain, SimpleChain};
use crate::error::{Error, Result};
use crate::foundation::Functional;
use crate::geometry::REL_TOL;

/// The part of `chain` in the open halfspace `{f < r}`. Pieces of distinct
/// summands stay disjoint, so a canonical input gives a canonical output.
pub fn restrict_halfspace(chain: &PolyChain, f: &Functional, r: f64) -> PolyChain {
    let summands = chain
        .summands()
        .iter()
        .filter_map(|s| s.poly.clip(&f.covector, r).map(|poly| SimpleChain { coeff: s.coeff, poly }))
        .collect();
    chain.with_summands(summands)
}

/// The part of `chain` in `{f > r}`.
pub fn restrict_complement(chain: &PolyChain, f: &Functional, r: f64) -> PolyChain {
    let neg = Functional {
        covector: -&f.covector,
        dual_norm: f.dual_norm,
    };
    restrict_halfspace(chain, &neg, -r)
}

/// Returns an error when the level `r` contains a whole facet of a summand
/// (or a whole summand); slices there depend on the side convention.
pub fn check_level(chain: &PolyChain, f: &Functional, r: f64) -> Result<()> {
    let tol = REL_TOL * chain.scale() * f.covector.norm().max(1e-300);
    let on_level = |pts: &[crate::linalg::Vector]| pts.iter().all(|v| (f.eval(v) - r).abs() <= tol);
    for (index, s) in chain.summands().iter().enumerate() {
        if on_level(s.poly.vertices()) {
            return Err(Error::ExceptionalLevel {
                level: r,
                message: format!("summand {index} lies in the level set"),
            });
        }
        for (_, facet) in s.poly.facets() {
            if on_level(facet.vertices()) {
                return Err(Error::ExceptionalLevel {
                    level: r,
                    message: format!("level contains a facet of summand {index}"),
                });
            }
        }
    }
    Ok(())
}

/// `P ∩ f^{-1}(r) = ∂(P ⌞ {f < r}) - (∂P) ⌞ {f < r}`, canonicalized.
pub fn slice(chain: &PolyChain, f: &Functional, r: f64) -> Result<PolyChain> {
    if chain.k() == 0 {
        return Err(Error::DimensionTooLow { required: 1, k: 0 });
    }
    check_level(chain, f, r)?;
    let inner = restrict_halfspace(chain, f, r).boundary()?;
    let outer = restrict_halfspace(&chain.boundary()?, f, r);
    Ok(inner.sub(&outer)?.canonicalize())
}
