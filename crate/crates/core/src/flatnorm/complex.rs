use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use spade::{ConstrainedDelaunayTriangulation, InsertionError, Point2, Triangulation};

use crate::chains::{OrientedPolytope, PolyChain};
use crate::error::{Error, Result};
use crate::foundation::NormedSpace;
use crate::geometry::REL_TOL;
use crate::linalg::Vector;
use crate::mass::polytope_size;

pub const MAX_COMPLEX_DIM: usize = 4;

/// Sparse signed incidence: `columns[j]` lists `(row, ±1)` for simplex `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Incidence {
    pub rows: usize,
    pub columns: Vec<Vec<(usize, i8)>>,
}

/// Triangulation of an axis-aligned box: a Kuhn grid, or in the plane a
/// constrained Delaunay triangulation adapted to given chains. Simplices are
/// sorted vertex index tuples, oriented by their vertex order.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    pub space: NormedSpace,
    pub lo: Vector,
    pub hi: Vector,
    pub resolution: usize,
    pub vertices: Vec<Vector>,
    /// `simplices[j]`: the j-simplices
    pub simplices: Vec<Vec<Vec<usize>>>,
    /// `boundary[j]` maps j-chains to (j-1)-chains (`boundary[0]` is empty)
    pub boundary: Vec<Incidence>,
    /// size of each simplex (mass with unit coefficient)
    pub masses: Vec<Vec<f64>>,
    index: Vec<HashMap<Vec<usize>, usize>>,
    /// vertices form the regular `resolution` grid in index order
    grid: bool,
    cell_diameter: f64,
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        let mut next = Vec::new();
        for p in &out {
            for i in 0..d {
                if !p.contains(&i) {
                    let mut q = p.clone();
                    q.push(i);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

fn subsets_of_size(s: &[usize], j: usize, out: &mut BTreeSet<Vec<usize>>) {
    let n = s.len();
    let mut idx: Vec<usize> = (0..j).collect();
    loop {
        out.insert(idx.iter().map(|&i| s[i]).collect());
        let mut i = j;
        while i > 0 && idx[i - 1] == i - 1 + n - j {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for t in i..j {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail
pub fn build_complex(space: &NormedSpace, lo: &Vector, hi: &Vector, resolution: usize) -> Result<SimplicialComplex> {
    let d = space.dim();
    if d > MAX_COMPLEX_DIM {
        return Err(Error::Unsupported(format!("complexes are limited to dimension {MAX_COMPLEX_DIM}")));
    }
    if lo.len() != d || hi.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if lo.len() != d { lo.len() } else { hi.len() },
        });
    }
    if resolution == 0 {
        return Err(Error::Unsupported("resolution must be at least 1".into()));
    }
    if lo.iter().zip(hi.iter()).any(|(a, b)| !(a < b)) {
        return Err(Error::Degenerate("box has empty interior".into()));
    }
    let n = resolution;
    let side = n + 1;
    let total = side.pow(d as u32);
    if total > 200_000 {
        return Err(Error::Unsupported(format!("grid with {total} vertices is too large")));
    }
    let multi = |mut id: usize| -> Vec<usize> {
        (0..d)
            .map(|_| {
                let c = id % side;
                id /= side;
                c
            })
            .collect()
    };
    let linear = |m: &[usize]| m.iter().rev().fold(0usize, |acc, &c| acc * side + c);
    let vertices: Vec<Vector> = (0..total)
        .map(|id| {
            let m = multi(id);
            Vector::from_iterator(d, (0..d).map(|i| lo[i] + (hi[i] - lo[i]) * m[i] as f64 / n as f64))
        })
        .collect();

    let perms = permutations(d);
    let mut faces: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); d + 1];
    for cube in 0..n.pow(d as u32) {
        let mut c = cube;
        let base: Vec<usize> = (0..d)
            .map(|_| {
                let x = c % n;
                c /= n;
                x
            })
            .collect();
        for p in &perms {
            let mut cur = base.clone();
            let mut top = vec![linear(&cur)];
            for &i in p {
                cur[i] += 1;
                top.push(linear(&cur));
            }
            // path vertices increase in every coordinate, hence in index
            for (j, set) in faces.iter_mut().enumerate() {
                subsets_of_size(&top, j + 1, set);
            }
        }
    }
    let step = Vector::from_iterator(d, (0..d).map(|i| (hi[i] - lo[i]) / n as f64));
    let cell_diameter = space.norm(&step);
    assemble(space, lo, hi, resolution, vertices, faces, true, cell_diameter)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    space: &NormedSpace,
    lo: &Vector,
    hi: &Vector,
    resolution: usize,
    vertices: Vec<Vector>,
    faces: Vec<BTreeSet<Vec<usize>>>,
    grid: bool,
    cell_diameter: f64,
) -> Result<SimplicialComplex> {
    let d = space.dim();
    let simplices: Vec<Vec<Vec<usize>>> = faces.into_iter().map(|s| s.into_iter().collect()).collect();
    let index: Vec<HashMap<Vec<usize>, usize>> = simplices
        .iter()
        .map(|list| list.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
        .collect();

    let mut boundary = vec![Incidence {
        rows: 0,
        columns: vec![Vec::new(); simplices[0].len()],
    }];
    for j in 1..=d {
        let columns = simplices[j]
            .iter()
            .map(|s| {
                (0..s.len())
                    .map(|i| {
                        let mut face = s.clone();
                        face.remove(i);
                        (index[j - 1][&face], if i % 2 == 0 { 1 } else { -1 })
                    })
                    .collect()
            })
            .collect();
        boundary.push(Incidence {
            rows: simplices[j - 1].len(),
            columns,
        });
    }

    let masses = simplices
        .iter()
        .map(|list| {
            list.par_iter()
                .map(|s| {
                    let pts: Vec<Vector> = s.iter().map(|&i| vertices[i].clone()).collect();
                    polytope_size(space, &OrientedPolytope::simplex(&pts)?)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let complex = SimplicialComplex {
        space: space.clone(),
        lo: lo.clone(),
        hi: hi.clone(),
        resolution,
        vertices,
        simplices,
        boundary,
        masses,
        index,
        grid,
        cell_diameter,
    };
    if !complex.boundary_squares_to_zero() {
        return Err(Error::Degenerate("boundary matrices do not compose to zero".into()));
    }
    Ok(complex)
}

/// Planar triangulation of the box containing the `resolution` grid points and
/// every vertex and edge of `chains`, so that those chains embed exactly.
/// Crossing edges are split at their intersection.
pub fn adapted_complex(
    space: &NormedSpace,
    lo: &Vector,
    hi: &Vector,
    resolution: usize,
    chains: &[&PolyChain],
) -> Result<SimplicialComplex> {
    if space.dim() != 2 {
        return Err(Error::Unsupported("adapted complexes are planar".into()));
    }
    let grid = build_complex(space, lo, hi, resolution)?;
    let insertion = |e: InsertionError| Error::Degenerate(format!("triangulation: {e}"));
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    for v in &grid.vertices {
        cdt.insert(Point2::new(v[0], v[1])).map_err(insertion)?;
    }
    let scale = (hi - lo).norm();
    for chain in chains {
        if chain.space() != space {
            return Err(Error::ChainMismatch("chain and complex live in different spaces".into()));
        }
        for (index, s) in chain.summands().iter().enumerate() {
            let verts = s.poly.vertices();
            if verts.iter().any(|v| !grid.contains(v, REL_TOL * scale.max(1.0))) {
                return Err(Error::NotEmbeddable(format!("summand {index} leaves the box")));
            }
            let handles = verts
                .iter()
                .map(|v| cdt.insert(Point2::new(v[0], v[1])).map_err(insertion))
                .collect::<Result<Vec<_>>>()?;
            let edges: Vec<(usize, usize)> = match chain.k() {
                0 => Vec::new(),
                1 => vec![(0, 1)],
                _ => {
                    // convex polygon: consecutive vertices by angle about the centroid
                    let c = verts.iter().fold(Vector::zeros(2), |acc, v| acc + v) / verts.len() as f64;
                    let mut order: Vec<usize> = (0..verts.len()).collect();
                    order.sort_by(|&a, &b| {
                        let angle = |v: &Vector| (v[1] - c[1]).atan2(v[0] - c[0]);
                        angle(&verts[a]).total_cmp(&angle(&verts[b]))
                    });
                    (0..order.len()).map(|i| (order[i], order[(i + 1) % order.len()])).collect()
                }
            };
            for (a, b) in edges {
                if handles[a] != handles[b] {
                    cdt.add_constraint_and_split(handles[a], handles[b], |p| p);
                }
            }
        }
    }
    let vertices: Vec<Vector> = cdt
        .vertices()
        .map(|v| Vector::from_vec(vec![v.position().x, v.position().y]))
        .collect();
    let mut faces: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); 3];
    for f in cdt.inner_faces() {
        let mut tri: Vec<usize> = f.vertices().iter().map(|v| v.fix().index()).collect();
        tri.sort_unstable();
        for (j, set) in faces.iter_mut().enumerate() {
            subsets_of_size(&tri, j + 1, set);
        }
    }
    let diameter = faces[2]
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])])
        .map(|(a, b)| space.distance(&vertices[a], &vertices[b]))
        .fold(0.0, f64::max);
    assemble(space, lo, hi, resolution, vertices, faces, false, diameter)
}

impl SimplicialComplex {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn count(&self, j: usize) -> usize {
        self.simplices.get(j).map_or(0, |s| s.len())
    }

    pub fn find(&self, j: usize, vertices: &[usize]) -> Option<usize> {
        self.index.get(j)?.get(vertices).copied()
    }

    /// Coordinates of the vertices of simplex `i` of dimension `j`.
    pub fn simplex_points(&self, j: usize, i: usize) -> Vec<Vector> {
        self.simplices[j][i].iter().map(|&v| self.vertices[v].clone()).collect()
    }

    pub fn simplex_polytope(&self, j: usize, i: usize) -> Result<OrientedPolytope> {
        let pts = self.simplex_points(j, i);
        if j == 0 {
            return Ok(OrientedPolytope::point(pts[0].clone()));
        }
        OrientedPolytope::simplex(&pts)
    }

    /// Applies `boundary[j]` to a coefficient vector on j-simplices.
    pub fn apply_boundary(&self, j: usize, x: &[f64]) -> Vec<f64> {
        let b = &self.boundary[j];
        let mut out = vec![0.0; b.rows];
        for (col, &v) in b.columns.iter().zip(x) {
            if v != 0.0 {
                for &(r, s) in col {
                    out[r] += s as f64 * v;
                }
            }
        }
        out
    }

    pub fn boundary_squares_to_zero(&self) -> bool {
        (2..self.boundary.len()).all(|j| {
            self.boundary[j].columns.iter().all(|col| {
                let mut acc: HashMap<usize, i32> = HashMap::new();
                for &(r, s) in col {
                    for &(r2, s2) in &self.boundary[j - 1].columns[r] {
                        *acc.entry(r2).or_default() += (s * s2) as i32;
                    }
                }
                acc.values().all(|&v| v == 0)
            })
        })
    }

    /// Nearest vertex and its distance in the space norm.
    pub fn nearest_vertex(&self, x: &Vector) -> (usize, f64) {
        if !self.grid {
            return self
                .vertices
                .iter()
                .enumerate()
                .map(|(i, v)| (i, self.space.distance(v, x)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((0, f64::INFINITY));
        }
        let d = self.dim();
        let n = self.resolution;
        let side = n + 1;
        let mut id = 0usize;
        for i in (0..d).rev() {
            let t = ((x[i] - self.lo[i]) / (self.hi[i] - self.lo[i]) * n as f64).round();
            let c = t.clamp(0.0, n as f64) as usize;
            id = id * side + c;
        }
        (id, self.space.distance(&self.vertices[id], x))
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lo[i] - tol && x[i] <= self.hi[i] + tol)
    }

    /// Largest norm diameter of a grid cell (of a top simplex when adapted).
    pub fn cell_diameter(&self) -> f64 {
        self.cell_diameter
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{PolyChain, SimpleChain};
    use crate::foundation::{CoefficientGroup, GroupElement};
    use crate::linalg::vector;
    use crate::mass::mass;

    #[test]
    fn kuhn_counts() {
        let sp = NormedSpace::euclidean(2);
        let c = build_complex(&sp, &vector(&[0.0, 0.0]), &vector(&[1.0, 1.0]), 1).unwrap();
        assert_eq!((c.count(0), c.count(1), c.count(2)), (4, 5, 2));
        let sp3 = NormedSpace::euclidean(3);
        let c3 = build_complex(&sp3, &vector(&[0.0; 3]), &vector(&[1.0; 3]), 1).unwrap();
        assert_eq!(c3.count(3), 6);
        assert!(c3.boundary_squares_to_zero());
        let c4 = build_complex(&sp, &vector(&[0.0, 0.0]), &vector(&[1.0, 1.0]), 3).unwrap();
        assert_eq!(c4.count(2), 18);
        let total: f64 = c4.masses[2].iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incidence_agrees_with_chain_boundary() {
        let sp = NormedSpace::euclidean(3);
        let c = build_complex(&sp, &vector(&[0.0; 3]), &vector(&[1.0; 3]), 1).unwrap();
        for j in 1..=3 {
            for i in 0..c.count(j) {
                let s = PolyChain::new(
                    sp.clone(),
                    CoefficientGroup::Integers,
                    j,
                    vec![SimpleChain {
                        coeff: GroupElement::Int(1),
                        poly: c.simplex_polytope(j, i).unwrap(),
                    }],
                )
                .unwrap();
                let mut faces = Vec::new();
                for &(r, sign) in &c.boundary[j].columns[i] {
                    faces.push(SimpleChain {
                        coeff: GroupElement::Int(sign as i64),
                        poly: c.simplex_polytope(j - 1, r).unwrap(),
                    });
                }
                let combinatorial = PolyChain::new(sp.clone(), CoefficientGroup::Integers, j - 1, faces).unwrap();
                let diff = s.boundary().unwrap().sub(&combinatorial).unwrap();
                assert!(mass(&diff).unwrap() < 1e-12, "j={j} i={i}");
            }
        }
    }

    #[test]
    fn adapted_complex_contains_crossing_segments() {
        let sp = NormedSpace::euclidean(2);
        let (lo, hi) = (vector(&[0.0, 0.0]), vector(&[1.0, 1.0]));
        let seg = |a: &[f64], b: &[f64]| {
            PolyChain::simplex(&sp, CoefficientGroup::Integers, GroupElement::Int(1), &[vector(a), vector(b)]).unwrap()
        };
        // an anti-diagonal is not a Kuhn edge; the second segment crosses it
        let p = seg(&[0.0, 1.0], &[1.0, 0.0]).add(&seg(&[0.1, 0.2], &[0.9, 0.7])).unwrap();
        let c = adapted_complex(&sp, &lo, &hi, 2, &[&p]).unwrap();
        assert!(c.boundary_squares_to_zero());
        let area: f64 = c.masses[2].iter().sum();
        assert!((area - 1.0).abs() < 1e-12);
        let (e, r) = crate::flatnorm::embed_chain(&p, &c).unwrap();
        assert!(r.exact, "{r:?}");
        assert!((e.mass(&c) - mass(&p).unwrap()).abs() < 1e-9);
        assert!(adapted_complex(&NormedSpace::euclidean(3), &vector(&[0.0; 3]), &vector(&[1.0; 3]), 1, &[]).is_err());
    }
}
