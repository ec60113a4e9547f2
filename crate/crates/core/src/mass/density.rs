use std::collections::HashMap;

use nalgebra::DMatrix;
use parking_lot::RwLock;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::foundation::{NormSpec, NormedSpace};
use crate::linalg::{self, Vector};
use crate::optimize::{sphere_maximize, SphereSearch};

const KEY_QUANTUM: f64 = 1e-8;

/// A k-dimensional direction subspace. Two bases of the same subspace give
/// equal keys: the hash is taken over the reduced row echelon form.
#[derive(Debug, Clone)]
pub struct PlaneKey {
    ambient: usize,
    basis: Vec<Vector>,
    key: Vec<i64>,
}

impl PartialEq for PlaneKey {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.key == other.key
    }
}
impl Eq for PlaneKey {}

impl std::hash::Hash for PlaneKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.ambient.hash(state);
        self.key.hash(state);
    }
}

impl PlaneKey {
    pub fn new(basis: &[Vector]) -> Result<Self> {
        let k = basis.len();
        if k == 0 {
            return Err(Error::Degenerate("empty plane basis".into()));
        }
        let d = basis[0].len();
        if basis.iter().any(|b| b.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: basis.iter().map(|b| b.len()).find(|&n| n != d).unwrap_or(d),
            });
        }
        let scale = basis.iter().map(|b| b.norm()).fold(0.0, f64::max);
        if scale == 0.0 || linalg::rank(basis, 1e-10) < k {
            return Err(Error::Degenerate(format!("basis does not span a {k}-plane")));
        }
        let rref = rref(&DMatrix::from_fn(k, d, |i, j| basis[i][j] / scale));
        let rows: Vec<Vector> = (0..k).map(|i| rref.row(i).transpose()).collect();
        let ortho = linalg::gram_schmidt(&rows, 1e-12).ok_or_else(|| Error::Degenerate("plane basis collapsed".into()))?;
        let key = rref.iter().map(|x| (x / KEY_QUANTUM).round() as i64).collect();
        Ok(PlaneKey {
            ambient: d,
            basis: ortho,
            key,
        })
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Canonical orthonormal basis of the subspace.
    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }
}

fn rref(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (piv, val) = (r..rows)
            .map(|i| (i, a[(i, c)].abs()))
            .fold((r, -1.0), |b, x| if x.1 > b.1 { x } else { b });
        if val < 1e-10 {
            continue;
        }
        a.swap_rows(r, piv);
        let p = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        a[(i, j)] -= f * a[(r, j)];
                    }
                }
            }
        }
        r += 1;
    }
    a.apply(|x| {
        if x.abs() < 1e-13 {
            *x = 0.0
        }
    });
    a
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerReport {
    pub starts: usize,
    /// maximizing covector in plane coordinates (empty when closed form)
    pub best_functional: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEntry {
    pub sigma: f64,
    pub report: OptimizerReport,
}

/// Per-plane density table. Concurrent reads, serialized inserts.
#[derive(Debug, Default)]
pub struct MassDensityCache {
    table: RwLock<HashMap<PlaneKey, DensityEntry>>,
}

impl MassDensityCache {
    pub fn get(&self, key: &PlaneKey) -> Option<DensityEntry> {
        self.table.read().get(key).cloned()
    }

    fn insert(&self, key: PlaneKey, entry: DensityEntry) {
        self.table.write().entry(key).or_insert(entry);
    }

    pub fn len(&self) -> usize {
        self.table.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn search_for(k: usize, nested: bool) -> SphereSearch {
    // nested levels feed a maximization one level up, so they can be cheaper
    match (k, nested) {
        (2, false) => SphereSearch::default(),
        (2, true) => SphereSearch {
            starts: 32,
            refine: 2,
            tolerance: 1e-8,
            seed: 0,
        },
        _ => SphereSearch {
            starts: 64,
            refine: 3,
            tolerance: 1e-7,
            seed: 0,
        },
    }
}

/// Volume density of the space norm on `plane`: mass of a simple chain with
/// unit coefficient equals density times Euclidean k-volume.
pub fn density(space: &NormedSpace, plane: &PlaneKey) -> Result<f64> {
    density_entry(space, plane).map(|e| e.sigma)
}

pub fn density_entry(space: &NormedSpace, plane: &PlaneKey) -> Result<DensityEntry> {
    if plane.ambient() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: plane.ambient(),
        });
    }
    compute(space, plane, false)
}

fn compute(space: &NormedSpace, plane: &PlaneKey, nested: bool) -> Result<DensityEntry> {
    let cache = space.density_cache();
    if let Some(e) = cache.get(plane) {
        return Ok(e);
    }
    let k = plane.k();
    let closed = |sigma: f64| DensityEntry {
        sigma,
        report: OptimizerReport {
            starts: 0,
            best_functional: Vec::new(),
            tolerance: 0.0,
        },
    };
    let entry = if space.is_euclidean() {
        closed(1.0)
    } else if k == 1 {
        closed(space.norm(&plane.basis()[0]))
    } else if let NormSpec::WeightedP { p, weights } = space.spec() {
        if *p == 2.0 {
            // Hilbert norm: volume distortion of the linear map W on the plane
            let w = DMatrix::from_diagonal(&Vector::from_column_slice(weights));
            let e = linalg::columns(plane.basis(), space.dim());
            let we = w * e;
            closed((we.transpose() * we).determinant().max(0.0).sqrt())
        } else {
            maximize(space, plane, nested)?
        }
    } else {
        maximize(space, plane, nested)?
    };
    cache.insert(plane.clone(), entry.clone());
    Ok(entry)
}

/// sigma_k(W) = sup over unit g of sigma_{k-1}(g^perp in W) / dualnorm_W(g).
fn maximize(space: &NormedSpace, plane: &PlaneKey, nested: bool) -> Result<DensityEntry> {
    let k = plane.k();
    let e = plane.basis();
    let opts = search_for(k, nested);
    let mut failure: Option<Error> = None;
    let opt = sphere_maximize(k, opts, |g| match ratio(space, e, g) {
        Ok(v) => v,
        Err(err) => {
            failure.get_or_insert(err);
            f64::NEG_INFINITY
        }
    });
    if let Some(err) = failure {
        return Err(err);
    }
    if !(opt.value.is_finite() && opt.value > 0.0) {
        return Err(Error::Degenerate("density maximization failed".into()));
    }
    Ok(DensityEntry {
        sigma: opt.value,
        report: OptimizerReport {
            starts: opts.starts,
            best_functional: opt.point.iter().copied().collect(),
            tolerance: opts.tolerance,
        },
    })
}

fn ratio(space: &NormedSpace, e: &[Vector], g: &Vector) -> Result<f64> {
    let k = e.len();
    let sdn = space.subspace_dual_norm(e, g)?;
    let perp = linalg::orthonormal_complement(std::slice::from_ref(g), k);
    let kernel: Vec<Vector> = perp
        .iter()
        .map(|c| {
            let mut w = linalg::zeros(space.dim());
            for (ci, ei) in c.iter().zip(e) {
                w.axpy(*ci, ei, 1.0);
            }
            w
        })
        .collect();
    let sub = compute(space, &PlaneKey::new(&kernel)?, true)?.sigma;
    Ok(sub * g.norm() / sdn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn plane(vs: &[&[f64]]) -> PlaneKey {
        PlaneKey::new(&vs.iter().map(|v| vector(v)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn keys_identify_subspaces() {
        let a = plane(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let b = plane(&[&[1.0, 1.0, 0.0], &[2.0, -3.0, 0.0]]);
        assert_eq!(a, b);
        let c = plane(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        assert_ne!(a, c);
        let s = plane(&[&[-2.0, 0.0]]);
        assert_eq!(s, plane(&[&[1.0, 0.0]]));
    }

    #[test]
    fn euclidean_density_is_one() {
        let sp = NormedSpace::euclidean(3);
        assert_eq!(density(&sp, &plane(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 1.0]])).unwrap(), 1.0);
    }

    #[test]
    fn planar_densities() {
        let l1 = NormedSpace::lp(2, 1.0).unwrap();
        let full = plane(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!((density(&l1, &full).unwrap() - 2.0).abs() < 1e-9);
        let linf = NormedSpace::lp(2, f64::INFINITY).unwrap();
        assert!((density(&linf, &full).unwrap() - 1.0).abs() < 1e-9);
        assert!(!l1.density_cache().is_empty());
    }

    #[test]
    fn weighted_hilbert_density_is_determinant() {
        let sp = NormedSpace::new(
            2,
            NormSpec::WeightedP {
                p: 2.0,
                weights: vec![2.0, 3.0],
            },
        )
        .unwrap();
        let full = plane(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!((density(&sp, &full).unwrap() - 6.0).abs() < 1e-12);
    }
}
