use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::chains::{OrientedPolytope, PolyChain, SimpleChain};
use crate::cones::cone;
use crate::error::{Error, Result};
use crate::flatnorm::complex::SimplicialComplex;
use crate::foundation::{CoefficientGroup, GroupElement};
use crate::geometry::REL_TOL;
use crate::linalg::Vector;
use crate::mass::mass;

/// A chain on the simplices of one dimension of a complex.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexChain {
    pub k: usize,
    pub group: CoefficientGroup,
    pub coeffs: Vec<GroupElement>,
}

impl ComplexChain {
    pub fn zero(complex: &SimplicialComplex, group: CoefficientGroup, k: usize) -> ComplexChain {
        ComplexChain {
            k,
            group,
            coeffs: vec![group.zero(); complex.count(k)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|g| g.is_zero())
    }

    pub fn add(&self, other: &ComplexChain) -> Result<ComplexChain> {
        if self.k != other.k || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::ChainMismatch("complex chains of different dimension".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(ComplexChain {
            k: self.k,
            group: self.group,
            coeffs,
        })
    }

    pub fn neg(&self) -> ComplexChain {
        ComplexChain {
            k: self.k,
            group: self.group,
            coeffs: self.coeffs.iter().map(|g| g.neg()).collect(),
        }
    }

    pub fn sub(&self, other: &ComplexChain) -> Result<ComplexChain> {
        self.add(&other.neg())
    }

    /// `sum |g_i| m_i`.
    pub fn mass(&self, complex: &SimplicialComplex) -> f64 {
        self.coeffs.iter().zip(&complex.masses[self.k]).map(|(g, m)| g.norm() * m).sum()
    }

    pub fn boundary(&self, complex: &SimplicialComplex) -> Result<ComplexChain> {
        if self.k == 0 {
            return Err(Error::DimensionTooLow { required: 1, k: 0 });
        }
        let mut out = ComplexChain::zero(complex, self.group, self.k - 1);
        for (col, g) in complex.boundary[self.k].columns.iter().zip(&self.coeffs) {
            if g.is_zero() {
                continue;
            }
            for &(r, s) in col {
                out.coeffs[r] = out.coeffs[r].add(&g.signed(s > 0))?;
            }
        }
        Ok(out)
    }

    pub fn to_poly_chain(&self, complex: &SimplicialComplex) -> Result<PolyChain> {
        let mut summands = Vec::new();
        for (i, g) in self.coeffs.iter().enumerate() {
            if !g.is_zero() {
                summands.push(SimpleChain {
                    coeff: *g,
                    poly: complex.simplex_polytope(self.k, i)?,
                });
            }
        }
        PolyChain::new(complex.space.clone(), self.group, self.k, summands)
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, PartialEq)]
pub struct EmbedReport {
    pub exact: bool,
    /// upper bound for the flat distance between the chain and its embedding
    pub discrepancy: f64,
    pub snapped_summands: usize,
}

fn bbox(pts: &[Vector]) -> (Vector, Vector) {
    let mut lo = pts[0].clone();
    let mut hi = pts[0].clone();
    for p in pts {
        for i in 0..p.len() {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

/// Complex k-simplices filling the summand exactly, with orientation signs.
fn exact_cover(complex: &SimplicialComplex, poly: &OrientedPolytope, tol: f64) -> Option<Vec<(usize, bool)>> {
    let k = poly.k();
    let (lo, hi) = bbox(poly.vertices());
    let mut out = Vec::new();
    let mut volume = 0.0;
    for (i, s) in complex.simplices[k].iter().enumerate() {
        let pts: Vec<&Vector> = s.iter().map(|&v| &complex.vertices[v]).collect();
        let inside_box = pts.iter().all(|p| (0..p.len()).all(|c| p[c] >= lo[c] - tol && p[c] <= hi[c] + tol));
        if !inside_box || !pts.iter().all(|p| poly.contains(p, tol)) {
            continue;
        }
        let simplex = complex.simplex_polytope(k, i).ok()?;
        out.push((i, poly.orientation_sign(&simplex) > 0.0));
        volume += simplex.volume();
    }
    let target = poly.volume();
    ((volume - target).abs() <= 1e-9 * target.max(1e-300) * (1.0 + out.len() as f64)).then_some(out)
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn point_segment_distance(x: &Vector, a: &Vector, b: &Vector) -> f64 {
    let ab = b - a;
    let t = ((x - a).dot(&ab) / ab.norm_squared().max(1e-300)).clamp(0.0, 1.0);
    (x - (a + ab * t)).norm()
}

/// Edge path from `from` to `to` staying near the segment `[a, b]`.
fn edge_path(
    complex: &SimplicialComplex,
    adjacency: &[Vec<(usize, usize)>],
    from: usize,
    to: usize,
    a: &Vector,
    b: &Vector,
) -> Option<Vec<(usize, bool)>> {
    let n = complex.vertices.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Entry(0.0, from));
    let h = complex.cell_diameter();
    while let Some(Entry(d, u)) = heap.pop() {
        if u == to {
            break;
        }
        if d > dist[u] {
            continue;
        }
        for &(v, e) in &adjacency[u] {
            let (x, y) = (&complex.vertices[u], &complex.vertices[v]);
            let mid = (x + y) * 0.5;
            let w = complex.space.distance(x, y) * (1.0 + 4.0 * point_segment_distance(&mid, a, b) / h);
            if d + w < dist[v] {
                dist[v] = d + w;
                prev[v] = Some((u, e));
                heap.push(Entry(d + w, v));
            }
        }
    }
    let mut path = Vec::new();
    let mut cur = to;
    while cur != from {
        let (u, e) = prev[cur]?;
        // edges are stored with increasing vertex index
        path.push((e, u < cur));
        cur = u;
    }
    path.reverse();
    Some(path)
}

/// Embeds `chain` into `complex`. Summands that are unions of complex
/// simplices embed exactly; points snap to the nearest vertex and segments to
/// nearby edge paths, with the flat distance of the perturbation bounded by an
/// explicit filling.
pub fn embed_chain(chain: &PolyChain, complex: &SimplicialComplex) -> Result<(ComplexChain, EmbedReport)> {
    if chain.space() != &complex.space {
        return Err(Error::ChainMismatch("chain and complex live in different spaces".into()));
    }
    let k = chain.k();
    let group = chain.group();
    let scale = (&complex.hi - &complex.lo).norm();
    let tol = REL_TOL * scale.max(1.0);
    let mut out = ComplexChain::zero(complex, group, k);
    let mut report = EmbedReport {
        exact: true,
        ..Default::default()
    };
    let mut adjacency: Option<Vec<Vec<(usize, usize)>>> = None;
    let space = chain.space();
    for (index, s) in chain.summands().iter().enumerate() {
        if s.poly.vertices().iter().any(|v| !complex.contains(v, tol)) {
            return Err(Error::NotEmbeddable(format!("summand {index} leaves the box")));
        }
        if k == 0 {
            let x = &s.poly.vertices()[0];
            let (v, d) = complex.nearest_vertex(x);
            out.coeffs[v] = out.coeffs[v].add(&s.coeff)?;
            if d > tol {
                report.exact = false;
                report.snapped_summands += 1;
                report.discrepancy += s.coeff.norm() * d;
            }
            continue;
        }
        if let Some(cover) = exact_cover(complex, &s.poly, tol) {
            for (i, positive) in cover {
                out.coeffs[i] = out.coeffs[i].add(&s.coeff.signed(positive))?;
            }
            continue;
        }
        if k > 1 {
            return Err(Error::NotEmbeddable(format!(
                "summand {index} is not a union of complex {k}-simplices"
            )));
        }
        let adjacency = adjacency.get_or_insert_with(|| {
            let mut adj = vec![Vec::new(); complex.vertices.len()];
            for (e, s) in complex.simplices[1].iter().enumerate() {
                adj[s[0]].push((s[1], e));
                adj[s[1]].push((s[0], e));
            }
            adj
        });
        // orient along the summand
        let (mut a, mut b) = (s.poly.vertices()[0].clone(), s.poly.vertices()[1].clone());
        if (&b - &a).dot(&s.poly.orientation_basis()[0]) < 0.0 {
            std::mem::swap(&mut a, &mut b);
        }
        let (va, _) = complex.nearest_vertex(&a);
        let (vb, _) = complex.nearest_vertex(&b);
        let path = edge_path(complex, adjacency, va, vb, &a, &b)
            .ok_or_else(|| Error::NotEmbeddable(format!("no edge path for summand {index}")))?;
        let mut path_chain = ComplexChain::zero(complex, CoefficientGroup::Integers, 1);
        for &(e, forward) in &path {
            out.coeffs[e] = out.coeffs[e].add(&s.coeff.signed(forward))?;
            path_chain.coeffs[e] = path_chain.coeffs[e].add(&GroupElement::Int(if forward { 1 } else { -1 }))?;
        }
        // [a,b] - path = ∂C_a(L) + [a,va] + [vb,b] with L the closed loop
        let unit = |p: &Vector, q: &Vector| -> Option<SimpleChain> {
            OrientedPolytope::simplex(&[p.clone(), q.clone()]).ok().map(|poly| SimpleChain {
                coeff: GroupElement::Int(1),
                poly,
            })
        };
        let (pa, pb) = (complex.vertices[va].clone(), complex.vertices[vb].clone());
        let mut loop_parts: Vec<SimpleChain> = [unit(&pa, &a), unit(&a, &b), unit(&b, &pb)].into_iter().flatten().collect();
        let path_poly = path_chain.to_poly_chain(complex)?;
        loop_parts.extend(path_poly.neg().summands().iter().cloned());
        let loop_chain = PolyChain::new(space.clone(), CoefficientGroup::Integers, 1, loop_parts)?;
        let filling = mass(&cone(&a, &loop_chain)?)?;
        let ends = space.distance(&a, &pa) + space.distance(&b, &pb);
        let d = s.coeff.norm() * (filling + ends);
        if d > tol {
            report.exact = false;
            report.snapped_summands += 1;
            report.discrepancy += d;
        }
    }
    Ok((out, report))
}

/// Group of the combined chain: integers and reals stay put, moduli must match.
pub(crate) fn common_group(a: CoefficientGroup, b: CoefficientGroup) -> Result<CoefficientGroup> {
    if a == b {
        Ok(a)
    } else {
        Err(Error::GroupMismatch(format!("{a:?} vs {b:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatnorm::complex::build_complex;
    use crate::foundation::NormedSpace;
    use crate::linalg::vector;

    fn unit_complex(n: usize) -> SimplicialComplex {
        build_complex(&NormedSpace::euclidean(2), &vector(&[0.0, 0.0]), &vector(&[1.0, 1.0]), n).unwrap()
    }

    fn seg(a: &[f64], b: &[f64]) -> PolyChain {
        PolyChain::simplex(
            &NormedSpace::euclidean(2),
            CoefficientGroup::Integers,
            GroupElement::Int(1),
            &[vector(a), vector(b)],
        )
        .unwrap()
    }

    #[test]
    fn grid_edges_embed_exactly() {
        let c = unit_complex(2);
        let (e, r) = embed_chain(&seg(&[0.0, 0.0], &[1.0, 0.0]), &c).unwrap();
        assert!(r.exact);
        assert_eq!(r.discrepancy, 0.0);
        assert!((e.mass(&c) - 1.0).abs() < 1e-12);
        let back = e.to_poly_chain(&c).unwrap();
        assert!(mass(&back.sub(&seg(&[0.0, 0.0], &[1.0, 0.0])).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn diagonal_is_kuhn_edge() {
        let c = unit_complex(1);
        let (e, r) = embed_chain(&seg(&[0.0, 0.0], &[1.0, 1.0]), &c).unwrap();
        assert!(r.exact);
        assert_eq!(e.coeffs.iter().filter(|g| !g.is_zero()).count(), 1);
        let (rev, _) = embed_chain(&seg(&[1.0, 1.0], &[0.0, 0.0]), &c).unwrap();
        assert!(rev.add(&e).unwrap().is_zero());
    }

    #[test]
    fn irrational_slope_reports_discrepancy() {
        let c = unit_complex(4);
        let s = seg(&[0.0, 0.0], &[1.0, 1.0 / 2f64.sqrt()]);
        let (e, r) = embed_chain(&s, &c).unwrap();
        assert!(!r.exact);
        assert!(r.discrepancy > 0.0 && r.discrepancy <= 0.5, "{r:?}");
        // path endpoints are the snapped endpoints
        let b = e.boundary(&c).unwrap();
        assert_eq!(b.coeffs.iter().filter(|g| !g.is_zero()).count(), 2);
    }

    #[test]
    fn squares_embed_with_orientation() {
        let c = unit_complex(2);
        let sq = PolyChain::from_raw(
            NormedSpace::euclidean(2),
            CoefficientGroup::Integers,
            2,
            vec![(
                GroupElement::Int(3),
                vec![vector(&[0.0, 0.0]), vector(&[0.5, 0.0]), vector(&[0.5, 0.5]), vector(&[0.0, 0.5])],
                vec![vector(&[0.0, 1.0]), vector(&[1.0, 0.0])],
            )],
        )
        .unwrap();
        let (e, r) = embed_chain(&sq, &c).unwrap();
        assert!(r.exact);
        assert!(e.coeffs.iter().all(|g| g.is_zero() || g.norm() == 3.0));
        let back = e.to_poly_chain(&c).unwrap();
        assert!(crate::mass::mass(&back.sub(&sq).unwrap()).unwrap() < 1e-12);
        assert!(embed_chain(&seg(&[0.0, 0.0], &[2.0, 0.0]), &c).is_err());
    }
}
