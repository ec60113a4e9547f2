//! Mass evaluated straight from the slicing definition:
//! `M(g[P]) = |g| sup_{||f||_* = 1} int M(P ∩ f^{-1}(x)) dx`.
//!
//! The supremum runs over the ambient dual sphere. Slices of a simple chain by
//! one functional all lie in parallel translates of one plane, so the slice
//! mass per unit volume is evaluated once per slice plane (recursively, by the
//! same definition) and memoized. Nested one-dimensional slices use the
//! closed form `sup |f(v)| = |v|`; a top-level segment is searched, with the
//! vertices of a polyhedral dual ball as extra candidates.

use std::collections::HashMap;

use crate::chains::SimpleChain;
use crate::error::{Error, Result};
use crate::foundation::NormedSpace;
use crate::geometry::{Frame, LocalPolytope};
use crate::linalg::{self, Vector};
use crate::mass::density::PlaneKey;
use crate::optimize::{sphere_maximize, SphereSearch};

#[derive(Debug, Clone, Copy)]
pub struct DirectGrid {
    /// deterministic starts on the dual sphere
    pub functional_resolution: usize,
    /// Gauss-Legendre nodes per interval between vertex levels
    pub integral_steps: usize,
}

impl Default for DirectGrid {
    fn default() -> Self {
        DirectGrid {
            functional_resolution: 64,
            integral_steps: 4,
        }
    }
}

pub fn mass_direct(space: &NormedSpace, simple: &SimpleChain, grid: DirectGrid) -> Result<f64> {
    let k = simple.poly.k();
    if k == 0 {
        return Err(Error::DimensionTooLow { required: 1, k: 0 });
    }
    let mut memo = HashMap::new();
    let ratio = unit_ratio(space, simple.poly.frame(), simple.poly.local(), grid, false, &mut memo)?;
    Ok(simple.coeff.norm() * ratio * simple.poly.volume())
}

/// Mass per unit Euclidean volume of `poly` (given in `frame` coordinates).
fn unit_ratio(
    space: &NormedSpace,
    frame: &Frame,
    poly: &LocalPolytope,
    grid: DirectGrid,
    nested: bool,
    memo: &mut HashMap<PlaneKey, f64>,
) -> Result<f64> {
    let key = PlaneKey::new(&frame.basis)?;
    if let Some(r) = memo.get(&key) {
        return Ok(*r);
    }
    let k = frame.k();
    let vol = poly.volume();
    let opts = SphereSearch {
        starts: grid.functional_resolution,
        refine: 3,
        tolerance: 1e-7,
        seed: 1,
    };
    let verts: Vec<Vector> = poly.vertices.iter().map(|c| frame.direction(c)).collect();
    let mut failure = None;
    let best = if k == 1 && nested {
        // sup of |f(v)| over the dual unit ball is |v| (Hahn-Banach)
        space.norm(&(&verts[1] - &verts[0]))
    } else if k == 1 {
        // slices are points of unit mass: the integral is the range of f
        let v = &verts[1] - &verts[0];
        let ratio = |u: &Vector| u.dot(&v).abs() / space.dual_norm(u);
        // a convex objective peaks at an extreme point of a polyhedral dual ball
        let vertex_best = space.polyhedral_facets().map_or(0.0, |hs| hs.iter().map(ratio).fold(0.0, f64::max));
        sphere_maximize(space.dim(), opts, ratio).value.max(vertex_best)
    } else {
        sphere_maximize(space.dim(), opts, |u| {
            let f = u / space.dual_norm(u);
            match slice_integral(space, frame, poly, &f, grid, memo) {
                Ok(x) => x,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            }
        })
        .value
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let r = best / vol;
    memo.insert(key, r);
    Ok(r)
}

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    // nodes and weights on [-1, 1] by Newton iteration on P_n
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `int M(P ∩ f^{-1}(x)) dx` for one functional.
fn slice_integral(
    space: &NormedSpace,
    frame: &Frame,
    poly: &LocalPolytope,
    f: &Vector,
    grid: DirectGrid,
    memo: &mut HashMap<PlaneKey, f64>,
) -> Result<f64> {
    let k = frame.k();
    let a = Vector::from_iterator(k, frame.basis.iter().map(|e| e.dot(f)));
    if a.norm() <= 1e-14 {
        return Ok(0.0);
    }
    // slice plane: a^perp within the frame
    let perp = linalg::orthonormal_complement(std::slice::from_ref(&(&a / a.norm())), k);
    let slice_frame = Frame {
        origin: frame.origin.clone(),
        basis: perp.iter().map(|c| frame.direction(c)).collect(),
    };
    let mut levels: Vec<f64> = poly.vertices.iter().map(|v| a.dot(v)).collect();
    levels.sort_by(|x, y| x.partial_cmp(y).unwrap());
    levels.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    let nodes = gauss_legendre(grid.integral_steps.max(k));
    let edges = poly.edges(poly.tolerance());
    let mut integral = 0.0;
    let mut ratio: Option<f64> = None;
    for w in levels.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        for &(t, wt) in &nodes {
            let x = lo + half * (t + 1.0);
            let Some(section) = cross_section(poly, &edges, &a, x, &perp) else {
                continue;
            };
            let r = match ratio {
                Some(r) => r,
                None => {
                    let r = unit_ratio(space, &slice_frame, &section, grid, true, memo)?;
                    ratio = Some(r);
                    r
                }
            };
            integral += wt * half * r * section.volume();
        }
    }
    Ok(integral)
}

/// `poly ∩ {a . x = level}` in coordinates of `perp`.
fn cross_section(poly: &LocalPolytope, edges: &[(usize, usize)], a: &Vector, level: f64, perp: &[Vector]) -> Option<LocalPolytope> {
    let s: Vec<f64> = poly.vertices.iter().map(|v| a.dot(v) - level).collect();
    let mut pts = Vec::new();
    for &(i, j) in edges {
        if (s[i] < 0.0) != (s[j] < 0.0) {
            let t = s[i] / (s[i] - s[j]);
            let p = &poly.vertices[i] + (&poly.vertices[j] - &poly.vertices[i]) * t;
            pts.push(Vector::from_iterator(perp.len(), perp.iter().map(|e| e.dot(&p))));
        }
    }
    LocalPolytope::hull(&pts)
}
