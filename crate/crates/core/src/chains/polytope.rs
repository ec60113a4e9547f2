use crate::error::{Error, Result};
use crate::geometry::{oriented_tangent, Frame, Halfspace, LocalPolytope, REL_TOL};
use crate::linalg::{self, Vector};
use crate::mass::density::PlaneKey;

/// A convex k-polytope in R^d with an orientation of its affine hull.
///
/// Stored in V-representation (`vertices`, `orientation_basis`) together with a
/// frame whose basis is Gram-Schmidt of the orientation basis, and the
/// polytope in that frame's coordinates.
#[derive(Debug, Clone)]
pub struct OrientedPolytope {
    vertices: Vec<Vector>,
    orientation_basis: Vec<Vector>,
    frame: Frame,
    local: LocalPolytope,
}

impl PartialEq for OrientedPolytope {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.orientation_basis == other.orientation_basis
    }
}

impl OrientedPolytope {
    /// Validates and reduces `vertices` to the extreme points of their hull.
    /// Returns `Error::Degenerate` when the hull has no k-volume.
    pub fn new(vertices: Vec<Vector>, orientation_basis: Vec<Vector>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Degenerate("no vertices".into()));
        }
        let d = vertices[0].len();
        let k = orientation_basis.len();
        if k > d {
            return Err(Error::DependentBasis(format!("{k} directions in R^{d}")));
        }
        for v in vertices.iter().chain(&orientation_basis) {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse("non-finite coordinate".into()));
            }
        }
        let frame = Frame::new(vertices[0].clone(), &orientation_basis)
            .ok_or_else(|| Error::DependentBasis("orientation basis is dependent".into()))?;
        let scale = linalg::euclidean_diameter(&vertices)
            .max(vertices.iter().map(linalg::max_abs).fold(0.0, f64::max))
            .max(1e-300);
        if let Some(v) = vertices.iter().find(|v| frame.distance(v) > 1e-8 * scale) {
            return Err(Error::Degenerate(format!(
                "vertex at distance {} from the oriented flat",
                frame.distance(v)
            )));
        }
        let local: Vec<Vector> = vertices.iter().map(|v| frame.to_local(v)).collect();
        if k == 0 {
            return Ok(Self::point(vertices[0].clone()));
        }
        let mut poly = Self::from_local(frame, &local)?.with_basis(orientation_basis);
        // hull vertices are input points; keep their exact global coordinates
        for (global, lv) in poly.vertices.iter_mut().zip(&poly.local.vertices) {
            let nearest = local
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - lv).norm().total_cmp(&(b.1 - lv).norm()))
                .map(|(i, _)| i)
                .expect("nonempty");
            *global = vertices[nearest].clone();
        }
        Ok(poly)
    }

    /// Builds a polytope from points in `frame` coordinates. The orientation is
    /// that of the frame.
    pub fn from_local(frame: Frame, points: &[Vector]) -> Result<Self> {
        let pts: Vec<Vector> = points.to_vec();
        let local = LocalPolytope::hull(&pts).ok_or_else(|| Error::Degenerate("hull has empty interior".into()))?;
        Self::from_local_polytope(frame, local)
    }

    pub fn from_local_polytope(frame: Frame, local: LocalPolytope) -> Result<Self> {
        let k = frame.k();
        if local.k() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: local.k(),
            });
        }
        if k > 0 && local.width() <= REL_TOL * local.scale() {
            return Err(Error::Degenerate("zero volume".into()));
        }
        let vertices = local.vertices.iter().map(|c| frame.to_global(c)).collect();
        let orientation_basis = frame.basis.clone();
        Ok(OrientedPolytope {
            vertices,
            orientation_basis,
            frame,
            local,
        })
    }

    fn with_basis(mut self, basis: Vec<Vector>) -> Self {
        self.orientation_basis = basis;
        self
    }

    pub fn point(x: Vector) -> Self {
        let frame = Frame {
            origin: x.clone(),
            basis: Vec::new(),
        };
        OrientedPolytope {
            vertices: vec![x],
            orientation_basis: Vec::new(),
            local: LocalPolytope {
                vertices: vec![linalg::zeros(0)],
                facets: Vec::new(),
            },
            frame,
        }
    }

    /// The simplex on `vertices` oriented by `(v1 - v0, ..., vk - v0)`.
    pub fn simplex(vertices: &[Vector]) -> Result<Self> {
        let basis = vertices[1..].iter().map(|v| v - &vertices[0]).collect();
        Self::new(vertices.to_vec(), basis)
    }

    pub fn k(&self) -> usize {
        self.frame.k()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.ambient()
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn orientation_basis(&self) -> &[Vector] {
        &self.orientation_basis
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn local(&self) -> &LocalPolytope {
        &self.local
    }

    pub fn plane(&self) -> Result<PlaneKey> {
        PlaneKey::new(&self.frame.basis)
    }

    /// Euclidean k-volume.
    pub fn volume(&self) -> f64 {
        self.local.volume()
    }

    pub fn diameter(&self, norm: impl Fn(&Vector) -> f64) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.vertices.len() {
            for j in i + 1..self.vertices.len() {
                d = d.max(norm(&(&self.vertices[i] - &self.vertices[j])));
            }
        }
        d
    }

    pub fn euclidean_scale(&self) -> f64 {
        linalg::euclidean_diameter(&self.vertices)
            .max(self.vertices.iter().map(linalg::max_abs).fold(0.0, f64::max))
            .max(1e-300)
    }

    /// Same point set, opposite orientation.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        if self.k() > 0 {
            out.orientation_basis[0] = -&out.orientation_basis[0];
            let mut frame = self.frame.clone();
            frame.basis[0] = -&frame.basis[0];
            let flip = |c: &Vector| {
                let mut c = c.clone();
                c[0] = -c[0];
                c
            };
            out.local = LocalPolytope {
                vertices: self.local.vertices.iter().map(flip).collect(),
                facets: self
                    .local
                    .facets
                    .iter()
                    .map(|h| Halfspace {
                        normal: flip(&h.normal),
                        offset: h.offset,
                    })
                    .collect(),
            };
            out.frame = frame;
        }
        out
    }

    /// Orientation of `other` relative to `self` (+1 or -1); both must span
    /// the same direction space.
    pub fn orientation_sign(&self, other: &OrientedPolytope) -> f64 {
        self.frame.orientation_sign(&other.frame)
    }

    /// Facets with induced orientation, as `(sign, facet)`. For k = 1 the
    /// facets are points, which carry no orientation, so the sign records it.
    pub fn facets(&self) -> Vec<(f64, OrientedPolytope)> {
        let k = self.k();
        if k == 0 {
            return Vec::new();
        }
        if k == 1 {
            let lo = self.frame.to_global(&self.local.vertices[0]);
            let hi = self.frame.to_global(&self.local.vertices[1]);
            return vec![(-1.0, Self::point(lo)), (1.0, Self::point(hi))];
        }
        let mut out = Vec::new();
        for (normal, face) in self.local.facet_faces() {
            let tangent = oriented_tangent(&normal);
            let dirs: Vec<Vector> = tangent.iter().map(|t| self.frame.direction(t)).collect();
            let origin = self.frame.to_global(&face[0]);
            let Some(frame) = Frame::new(origin, &dirs) else { continue };
            let pts: Vec<Vector> = face.iter().map(|c| frame.to_local(&self.frame.to_global(c))).collect();
            if let Ok(p) = Self::from_local(frame, &pts) {
                out.push((1.0, p));
            }
        }
        out
    }

    /// Intersection with the halfspace `{x : f . x < r}` (closure).
    pub fn clip(&self, f: &Vector, r: f64) -> Option<OrientedPolytope> {
        let k = self.k();
        if k == 0 {
            return (f.dot(&self.vertices[0]) < r).then(|| self.clone());
        }
        let normal = Vector::from_iterator(k, self.frame.basis.iter().map(|e| e.dot(f)));
        let offset = r - f.dot(&self.frame.origin);
        let nn = normal.norm();
        if nn <= 1e-12 * f.norm() {
            return (offset > 0.0).then(|| self.clone());
        }
        let h = Halfspace {
            normal: &normal / nn,
            offset: offset / nn,
        };
        let local = self.local.clip(&h)?;
        self.with_local(local)
    }

    /// Intersection with a halfspace given in this polytope's local coordinates.
    pub fn clip_local(&self, h: &Halfspace) -> Option<OrientedPolytope> {
        let local = self.local.clip(h)?;
        self.with_local(local)
    }

    pub fn clip_local_all(&self, hs: &[Halfspace]) -> Option<OrientedPolytope> {
        let local = self.local.clip_all(hs)?;
        self.with_local(local)
    }

    fn with_local(&self, local: LocalPolytope) -> Option<OrientedPolytope> {
        let vertices = local.vertices.iter().map(|c| self.frame.to_global(c)).collect();
        Some(OrientedPolytope {
            vertices,
            orientation_basis: self.orientation_basis.clone(),
            frame: self.frame.clone(),
            local,
        })
    }

    /// Halfspaces of this polytope expressed in global coordinates,
    /// as `(covector, level)` with the polytope in `{f . x <= level}` within its flat.
    pub fn global_facets(&self) -> Vec<(Vector, f64)> {
        self.local
            .facets
            .iter()
            .map(|h| {
                let f = self.frame.direction(&h.normal);
                (f.clone(), h.offset + f.dot(&self.frame.origin))
            })
            .collect()
    }

    /// Image under `x -> a x + t`; `a` must be injective.
    pub fn affine_image(&self, a: &nalgebra::DMatrix<f64>, t: &Vector) -> Result<OrientedPolytope> {
        let vertices = self.vertices.iter().map(|v| a * v + t).collect();
        let basis = self.orientation_basis.iter().map(|b| a * b).collect();
        if self.k() == 0 {
            let v: Vec<Vector> = vertices;
            return Ok(Self::point(v[0].clone()));
        }
        Self::new(vertices, basis)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.frame.distance(x) <= tol && self.local.contains(&self.frame.to_local(x), tol)
    }
}
