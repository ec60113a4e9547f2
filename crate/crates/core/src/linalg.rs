//! Small dense linear-algebra helpers shared by the geometry and the optimizers.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;

pub fn vector(xs: &[f64]) -> Vector {
    DVector::from_column_slice(xs)
}

pub fn zeros(n: usize) -> Vector {
    DVector::zeros(n)
}

pub fn unit(n: usize, i: usize) -> Vector {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// Modified Gram-Schmidt. Returns `None` when a vector is (numerically)
/// dependent on its predecessors. The output spans the same flag of
/// subspaces, so the orientation of the input basis is preserved.
pub fn gram_schmidt(vs: &[Vector], tol: f64) -> Option<Vec<Vector>> {
    let mut out: Vec<Vector> = Vec::with_capacity(vs.len());
    for v in vs {
        let scale = v.norm();
        if scale == 0.0 {
            return None;
        }
        let mut w = v.clone();
        // two passes keep the result orthogonal to machine precision
        for _ in 0..2 {
            for u in &out {
                let c = u.dot(&w);
                w.axpy(-c, u, 1.0);
            }
        }
        let n = w.norm();
        if n <= tol * scale {
            return None;
        }
        out.push(w / n);
    }
    Some(out)
}

/// Numerical rank of a set of vectors.
pub fn rank(vs: &[Vector], tol: f64) -> usize {
    let mut basis: Vec<Vector> = Vec::new();
    for v in vs {
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&w);
                w.axpy(-c, u, 1.0);
            }
        }
        let n = w.norm();
        if n > tol * scale.max(1e-300) {
            basis.push(w / n);
        }
    }
    basis.len()
}

/// Dimension of the affine hull of a point set; `tol` is absolute.
pub fn affine_rank(pts: &[Vector], tol: f64) -> usize {
    if pts.is_empty() {
        return 0;
    }
    let mut basis: Vec<Vector> = Vec::new();
    for p in &pts[1..] {
        let mut w = p - &pts[0];
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&w);
                w.axpy(-c, u, 1.0);
            }
        }
        let n = w.norm();
        if n > tol {
            basis.push(w / n);
        }
    }
    basis.len()
}

/// Extends an orthonormal family to an orthonormal basis of R^n and returns
/// only the added vectors, in a deterministic order.
pub fn orthonormal_complement(basis: &[Vector], n: usize) -> Vec<Vector> {
    let mut all: Vec<Vector> = basis.to_vec();
    let mut extra = Vec::new();
    // pick standard vectors by decreasing residual so the result is well conditioned
    while all.len() < n {
        let mut best: Option<(f64, Vector)> = None;
        for i in 0..n {
            let mut w = unit(n, i);
            for _ in 0..2 {
                for u in &all {
                    let c = u.dot(&w);
                    w.axpy(-c, u, 1.0);
                }
            }
            let r = w.norm();
            if best.as_ref().is_none_or(|(b, _)| r > *b + 1e-12) {
                best = Some((r, w));
            }
        }
        let (r, w) = best.expect("n > 0");
        let w = w / r;
        all.push(w.clone());
        extra.push(w);
    }
    extra
}

/// Determinant of the square matrix with the given columns.
pub fn det_columns(cols: &[Vector]) -> f64 {
    let n = cols.len();
    if n == 0 {
        return 1.0;
    }
    let m = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    m.determinant()
}

/// Generalized cross product: a vector orthogonal to the `n-1` given vectors
/// in R^n, computed from signed cofactors. `det[out, v_1, ..., v_{n-1}] > 0`
/// whenever the inputs are independent.
pub fn cross(vs: &[Vector], n: usize) -> Vector {
    debug_assert_eq!(vs.len() + 1, n);
    if n == 1 {
        return vector(&[1.0]);
    }
    let mut out = zeros(n);
    let m = n - 1;
    for i in 0..n {
        let minor = DMatrix::from_fn(m, m, |r, c| {
            let row = if r < i { r } else { r + 1 };
            vs[c][row]
        });
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        out[i] = sign * minor.determinant();
    }
    out
}

/// Solves a small square system, `None` if singular.
pub fn solve(a: &DMatrix<f64>, b: &Vector) -> Option<Vector> {
    a.clone().lu().solve(b)
}

/// Matrix whose columns are the given vectors.
pub fn columns(cols: &[Vector], rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Euclidean diameter of a point set.
pub fn euclidean_diameter(pts: &[Vector]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max((&pts[i] - &pts[j]).norm());
        }
    }
    d
}

pub fn centroid(pts: &[Vector]) -> Vector {
    let mut c = zeros(pts[0].len());
    for p in pts {
        c += p;
    }
    c / pts.len() as f64
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_orthogonal_and_positive() {
        let a = vector(&[1.0, 2.0, 0.5]);
        let b = vector(&[-1.0, 0.0, 3.0]);
        let c = cross(&[a.clone(), b.clone()], 3);
        assert!(c.dot(&a).abs() < 1e-12);
        assert!(c.dot(&b).abs() < 1e-12);
        assert!(det_columns(&[c, a, b]) > 0.0);
    }

    #[test]
    fn gram_schmidt_rejects_dependent() {
        let a = vector(&[1.0, 1.0]);
        let b = vector(&[2.0, 2.0]);
        assert!(gram_schmidt(&[a, b], 1e-9).is_none());
    }

    #[test]
    fn complement_completes_basis() {
        let e = gram_schmidt(&[vector(&[1.0, 1.0, 0.0])], 1e-9).unwrap();
        let c = orthonormal_complement(&e, 3);
        assert_eq!(c.len(), 2);
        for v in &c {
            assert!(v.dot(&e[0]).abs() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert!(c[0].dot(&c[1]).abs() < 1e-12);
    }
}
