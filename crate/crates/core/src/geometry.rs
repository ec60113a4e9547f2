//! Convex polytopes in local coordinates of an affine flat.
//!
//! A [`Frame`] fixes an origin and an orthonormal basis of a k-flat in R^d.
//! A [`LocalPolytope`] is a full-dimensional convex polytope in R^k, stored
//! with both its vertices and its facet halfspaces `n . x <= b` (unit `n`).

use crate::linalg::{self, Vector};

/// Relative geometric tolerance used throughout.
pub const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub origin: Vector,
    pub basis: Vec<Vector>,
}

impl Frame {
    /// Frame whose basis comes from Gram-Schmidt on `directions`; the
    /// orientation of `directions` is preserved.
    pub fn new(origin: Vector, directions: &[Vector]) -> Option<Frame> {
        let basis = linalg::gram_schmidt(directions, 1e-10)?;
        Some(Frame { origin, basis })
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.origin.len()
    }

    pub fn to_local(&self, x: &Vector) -> Vector {
        let d = x - &self.origin;
        Vector::from_iterator(self.k(), self.basis.iter().map(|e| e.dot(&d)))
    }

    pub fn to_global(&self, c: &Vector) -> Vector {
        let mut x = self.origin.clone();
        for (ci, e) in c.iter().zip(&self.basis) {
            x.axpy(*ci, e, 1.0);
        }
        x
    }

    /// Linear part of `to_global`.
    pub fn direction(&self, c: &Vector) -> Vector {
        let mut x = linalg::zeros(self.ambient());
        for (ci, e) in c.iter().zip(&self.basis) {
            x.axpy(*ci, e, 1.0);
        }
        x
    }

    /// Euclidean distance from `x` to the flat.
    pub fn distance(&self, x: &Vector) -> f64 {
        (x - self.to_global(&self.to_local(x))).norm()
    }

    /// Sign of the change of basis between two frames of the same direction space.
    pub fn orientation_sign(&self, other: &Frame) -> f64 {
        let k = self.k();
        if k == 0 {
            return 1.0;
        }
        let m = nalgebra::DMatrix::from_fn(k, k, |i, j| self.basis[i].dot(&other.basis[j]));
        m.determinant().signum()
    }

    /// Whether `other` spans the same affine flat, up to `tol`.
    pub fn same_flat(&self, other: &Frame, tol: f64) -> bool {
        if self.k() != other.k() || self.ambient() != other.ambient() {
            return false;
        }
        if self.distance(&other.origin) > tol {
            return false;
        }
        other
            .basis
            .iter()
            .all(|e| (e - self.direction(&self.to_local(&(e + &self.origin)))).norm() <= 1e-8)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vector,
    pub offset: f64,
}

impl Halfspace {
    pub fn eval(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn flipped(&self) -> Halfspace {
        Halfspace {
            normal: -&self.normal,
            offset: -self.offset,
        }
    }

    pub fn same_as(&self, other: &Halfspace, tol: f64) -> bool {
        (&self.normal - &other.normal).norm() <= 1e-9 && (self.offset - other.offset).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalPolytope {
    pub vertices: Vec<Vector>,
    pub facets: Vec<Halfspace>,
}

fn scale_of(pts: &[Vector]) -> f64 {
    linalg::euclidean_diameter(pts)
        .max(pts.iter().map(linalg::max_abs).fold(0.0, f64::max))
        .max(1e-300)
}

fn dedup_points(pts: &[Vector], tol: f64) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(pts.len());
    for p in pts {
        if !out.iter().any(|q| (q - p).norm() <= tol) {
            out.push(p.clone());
        }
    }
    out
}

fn k_subsets(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

impl LocalPolytope {
    pub fn k(&self) -> usize {
        self.vertices.first().map_or(0, |v| v.len())
    }

    /// Convex hull of a point set in R^k. `None` if the hull has empty interior.
    pub fn hull(points: &[Vector]) -> Option<LocalPolytope> {
        if points.is_empty() {
            return None;
        }
        let k = points[0].len();
        let scale = scale_of(points);
        let tol = REL_TOL * scale;
        let pts = dedup_points(points, tol);
        if k == 0 {
            return Some(LocalPolytope {
                vertices: vec![pts[0].clone()],
                facets: Vec::new(),
            });
        }
        if linalg::affine_rank(&pts, tol) < k {
            return None;
        }
        if k == 1 {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            return Some(LocalPolytope {
                vertices: vec![linalg::vector(&[lo]), linalg::vector(&[hi])],
                facets: vec![
                    Halfspace {
                        normal: linalg::vector(&[-1.0]),
                        offset: -lo,
                    },
                    Halfspace {
                        normal: linalg::vector(&[1.0]),
                        offset: hi,
                    },
                ],
            });
        }
        let mut facets: Vec<Halfspace> = Vec::new();
        k_subsets(pts.len(), k, |sub| {
            let diffs: Vec<Vector> = sub[1..].iter().map(|&i| &pts[i] - &pts[sub[0]]).collect();
            let n = linalg::cross(&diffs, k);
            let len = n.norm();
            let prod: f64 = diffs.iter().map(|d| d.norm()).product();
            if len <= 1e-9 * prod.max(1e-300) {
                return;
            }
            let n = n / len;
            let b = n.dot(&pts[sub[0]]);
            let (mut above, mut below) = (false, false);
            for p in &pts {
                let s = n.dot(p) - b;
                if s > tol {
                    above = true;
                } else if s < -tol {
                    below = true;
                }
                if above && below {
                    return;
                }
            }
            let h = if above {
                Halfspace { normal: -n, offset: -b }
            } else {
                Halfspace { normal: n, offset: b }
            };
            if !facets.iter().any(|f| f.same_as(&h, tol)) {
                facets.push(h);
            }
        });
        let mut poly = LocalPolytope { vertices: pts, facets };
        poly.prune(tol);
        Some(poly)
    }

    /// Drops non-vertices and facets that do not support a (k-1)-face.
    fn prune(&mut self, tol: f64) {
        let k = self.k();
        if k <= 1 {
            return;
        }
        let tight: Vec<Vec<usize>> = self
            .facets
            .iter()
            .map(|f| {
                (0..self.vertices.len())
                    .filter(|&i| f.eval(&self.vertices[i]).abs() <= tol)
                    .collect()
            })
            .collect();
        let keep_facet: Vec<bool> = tight
            .iter()
            .map(|t| {
                let pts: Vec<Vector> = t.iter().map(|&i| self.vertices[i].clone()).collect();
                linalg::affine_rank(&pts, tol) == k - 1
            })
            .collect();
        let facets: Vec<Halfspace> = self
            .facets
            .iter()
            .zip(&keep_facet)
            .filter(|(_, &k)| k)
            .map(|(f, _)| f.clone())
            .collect();
        let vertices: Vec<Vector> = (0..self.vertices.len())
            .filter(|&i| {
                let normals: Vec<Vector> = facets
                    .iter()
                    .filter(|f| f.eval(&self.vertices[i]).abs() <= tol)
                    .map(|f| f.normal.clone())
                    .collect();
                linalg::rank(&normals, 1e-9) == k
            })
            .map(|i| self.vertices[i].clone())
            .collect();
        self.facets = facets;
        self.vertices = vertices;
    }

    pub fn scale(&self) -> f64 {
        scale_of(&self.vertices)
    }

    pub fn tolerance(&self) -> f64 {
        REL_TOL * self.scale()
    }

    pub fn centroid(&self) -> Vector {
        linalg::centroid(&self.vertices)
    }

    /// Smallest facet-to-opposite-vertex distance: a thickness that, unlike
    /// the volume, stays large for long thin slivers with sizeable facets.
    pub fn width(&self) -> f64 {
        if self.k() == 1 {
            return self.volume();
        }
        self.facets
            .iter()
            .map(|f| self.vertices.iter().map(|v| f.offset - f.normal.dot(v)).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean k-volume.
    pub fn volume(&self) -> f64 {
        let k = self.k();
        match k {
            0 => 1.0,
            1 => (self.vertices[1][0] - self.vertices[0][0]).abs(),
            _ => {
                let c = self.centroid();
                let tol = self.tolerance();
                let mut total = 0.0;
                for f in &self.facets {
                    let h = f.offset - f.normal.dot(&c);
                    if h <= 0.0 {
                        continue;
                    }
                    let face: Vec<Vector> = self.vertices.iter().filter(|v| f.eval(v).abs() <= tol).cloned().collect();
                    total += h * facet_volume(&f.normal, &face);
                }
                total / k as f64
            }
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.facets.iter().all(|f| f.eval(x) <= tol)
    }

    /// Intersection with `{n . x <= b}`; `None` when the result has no interior.
    pub fn clip(&self, h: &Halfspace) -> Option<LocalPolytope> {
        let k = self.k();
        let tol = self.tolerance();
        let s: Vec<f64> = self.vertices.iter().map(|v| h.eval(v)).collect();
        if s.iter().all(|&x| x <= tol) {
            return Some(self.clone());
        }
        if s.iter().all(|&x| x >= -tol) {
            return None;
        }
        if k == 1 {
            let n = h.normal[0];
            let cut = h.offset / n;
            let (lo, hi) = (self.vertices[0][0], self.vertices[1][0]);
            let (lo, hi) = if n > 0.0 { (lo, cut.min(hi)) } else { (cut.max(lo), hi) };
            if hi - lo <= tol {
                return None;
            }
            return LocalPolytope::hull(&[linalg::vector(&[lo]), linalg::vector(&[hi])]);
        }
        let mut verts: Vec<Vector> = Vec::new();
        for (v, &sv) in self.vertices.iter().zip(&s) {
            if sv <= tol {
                verts.push(v.clone());
            }
        }
        for (i, j) in self.edges(tol) {
            let (a, b) = (s[i], s[j]);
            if (a < -tol && b > tol) || (a > tol && b < -tol) {
                let t = a / (a - b);
                verts.push(&self.vertices[i] + (&self.vertices[j] - &self.vertices[i]) * t);
            }
        }
        let verts = dedup_points(&verts, tol);
        if linalg::affine_rank(&verts, tol) < k {
            return None;
        }
        let mut facets = self.facets.clone();
        facets.push(h.clone());
        let mut out = LocalPolytope { vertices: verts, facets };
        out.prune(tol);
        if out.facets.len() <= k || out.width() <= tol {
            return None;
        }
        Some(out)
    }

    pub fn clip_all(&self, hs: &[Halfspace]) -> Option<LocalPolytope> {
        let mut p = self.clone();
        for h in hs {
            p = p.clip(h)?;
        }
        Some(p)
    }

    /// Vertex pairs spanning an edge (common tight facets of rank k-1).
    pub fn edges(&self, tol: f64) -> Vec<(usize, usize)> {
        let k = self.k();
        let n = self.vertices.len();
        let tight: Vec<Vec<bool>> = self
            .vertices
            .iter()
            .map(|v| self.facets.iter().map(|f| f.eval(v).abs() <= tol).collect())
            .collect();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let common: Vec<Vector> = (0..self.facets.len())
                    .filter(|&f| tight[i][f] && tight[j][f])
                    .map(|f| self.facets[f].normal.clone())
                    .collect();
                if linalg::rank(&common, 1e-9) == k - 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Facets as (outward normal, vertex list).
    pub fn facet_faces(&self) -> Vec<(Vector, Vec<Vector>)> {
        let tol = self.tolerance();
        self.facets
            .iter()
            .map(|f| {
                let face = self.vertices.iter().filter(|v| f.eval(v).abs() <= tol).cloned().collect();
                (f.normal.clone(), face)
            })
            .collect()
    }

    pub fn affine_image(&self, map: impl Fn(&Vector) -> Vector) -> Option<LocalPolytope> {
        let pts: Vec<Vector> = self.vertices.iter().map(map).collect();
        LocalPolytope::hull(&pts)
    }
}

/// (k-1)-volume of the face with the given unit normal.
fn facet_volume(normal: &Vector, face: &[Vector]) -> f64 {
    let k = normal.len();
    if k == 1 {
        return 1.0;
    }
    let tangent = linalg::orthonormal_complement(std::slice::from_ref(normal), k);
    let local: Vec<Vector> = face
        .iter()
        .map(|v| Vector::from_iterator(k - 1, tangent.iter().map(|t| t.dot(v))))
        .collect();
    LocalPolytope::hull(&local).map_or(0.0, |p| p.volume())
}

/// Orthonormal basis of `normal^perp` in R^k with `det[normal, basis] > 0`.
pub fn oriented_tangent(normal: &Vector) -> Vec<Vector> {
    let k = normal.len();
    let mut t = linalg::orthonormal_complement(std::slice::from_ref(normal), k);
    if k >= 2 {
        let mut cols = vec![normal.clone()];
        cols.extend(t.iter().cloned());
        if linalg::det_columns(&cols) < 0.0 {
            t[0] = -&t[0];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn square() -> LocalPolytope {
        LocalPolytope::hull(&[
            vector(&[0.0, 0.0]),
            vector(&[1.0, 0.0]),
            vector(&[1.0, 1.0]),
            vector(&[0.0, 1.0]),
            vector(&[0.5, 0.5]),
        ])
        .unwrap()
    }

    #[test]
    fn hull_drops_interior_points() {
        let s = square();
        assert_eq!(s.vertices.len(), 4);
        assert_eq!(s.facets.len(), 4);
        assert!((s.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clip_square_in_half() {
        let s = square();
        let h = Halfspace {
            normal: vector(&[1.0, 0.0]),
            offset: 0.5,
        };
        let c = s.clip(&h).unwrap();
        assert!((c.volume() - 0.5).abs() < 1e-12);
        assert_eq!(c.vertices.len(), 4);
        let miss = Halfspace {
            normal: vector(&[1.0, 0.0]),
            offset: -0.1,
        };
        assert!(s.clip(&miss).is_none());
    }

    #[test]
    fn cube_and_simplex_volumes() {
        let mut pts = Vec::new();
        for c in 0..8 {
            pts.push(vector(&[(c & 1) as f64, (c >> 1 & 1) as f64, (c >> 2 & 1) as f64]));
        }
        let cube = LocalPolytope::hull(&pts).unwrap();
        assert_eq!(cube.facets.len(), 6);
        assert!((cube.volume() - 1.0).abs() < 1e-12);
        let tet = LocalPolytope::hull(&[
            vector(&[0.0, 0.0, 0.0]),
            vector(&[1.0, 0.0, 0.0]),
            vector(&[0.0, 1.0, 0.0]),
            vector(&[0.0, 0.0, 1.0]),
        ])
        .unwrap();
        assert!((tet.volume() - 1.0 / 6.0).abs() < 1e-12);
        let cut = cube
            .clip(&Halfspace {
                normal: vector(&[1.0, 1.0, 1.0]) / 3f64.sqrt(),
                offset: 1.0 / 3f64.sqrt(),
            })
            .unwrap();
        assert!((cut.volume() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_hull_is_none() {
        assert!(LocalPolytope::hull(&[vector(&[0.0, 0.0]), vector(&[1.0, 1.0]), vector(&[2.0, 2.0])]).is_none());
    }

    #[test]
    fn tangent_orientation() {
        let t = oriented_tangent(&vector(&[0.0, 1.0]));
        assert!(linalg::det_columns(&[vector(&[0.0, 1.0]), t[0].clone()]) > 0.0);
    }
}
