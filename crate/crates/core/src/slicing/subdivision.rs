//! Edgewise subdivision of order 2. A k-simplex with ordered vertices
//! `v0..vk` is parametrized by `x = v0 + sum_i (u_i / 2)(v_i - v_{i-1})` over
//! `2 >= u_1 >= ... >= u_k >= 0`; the children are the Kuhn simplices of unit
//! cubes that fall inside this region. Every child is a translate of a
//! half-size copy of one of finitely many shapes, so diameters halve and
//! fullness is bounded below.

use std::collections::HashMap;
use std::sync::OnceLock;

use parking_lot::Mutex;

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};

/// One cell of a subdivision tree.
#[derive(Debug, Clone)]
pub struct SubCell {
    pub vertices: Vec<Vector>,
    /// index of the parent cell in the previous stage
    pub parent: Option<usize>,
}

/// Child vertex lists in `u` coordinates (entries in {0,1,2}).
type Patterns = &'static [Vec<Vec<u8>>];

fn child_patterns(k: usize) -> Patterns {
    static CACHE: OnceLock<Mutex<HashMap<usize, Patterns>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(Default::default).lock();
    map.entry(k).or_insert_with(|| Box::leak(build_patterns(k).into_boxed_slice()))
}

fn build_patterns(k: usize) -> Vec<Vec<Vec<u8>>> {
    let mut perms = vec![Vec::<usize>::new()];
    for _ in 0..k {
        perms = perms
            .into_iter()
            .flat_map(|p| {
                let free: Vec<usize> = (0..k).filter(|i| !p.contains(i)).collect();
                free.into_iter().map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    let monotone = |u: &[u8]| u.windows(2).all(|w| w[0] >= w[1]);
    let mut out = Vec::new();
    for a in 0..(1u32 << k) {
        let base: Vec<u8> = (0..k).map(|i| ((a >> i) & 1) as u8).collect();
        for p in &perms {
            let mut path = vec![base.clone()];
            let mut cur = base.clone();
            for &i in p {
                cur[i] += 1;
                path.push(cur.clone());
            }
            if path.iter().all(|u| monotone(u)) {
                out.push(path);
            }
        }
    }
    out
}

fn point_at(vertices: &[Vector], u: &[u8]) -> Vector {
    let mut x = vertices[0].clone();
    for (i, &ui) in u.iter().enumerate() {
        if ui != 0 {
            x.axpy(ui as f64 * 0.5, &(&vertices[i + 1] - &vertices[i]), 1.0);
        }
    }
    x
}

/// The `2^k` children of one simplex, each with its vertices in path order.
pub fn children(vertices: &[Vector]) -> Vec<Vec<Vector>> {
    let k = vertices.len() - 1;
    child_patterns(k)
        .iter()
        .map(|path| path.iter().map(|u| point_at(vertices, u)).collect())
        .collect()
}

fn check_simplex(simplex: &[Vector]) -> Result<()> {
    if simplex.is_empty() {
        return Err(Error::Degenerate("empty simplex".into()));
    }
    let k = simplex.len() - 1;
    if simplex.iter().any(|v| v.len() != simplex[0].len()) {
        return Err(Error::DimensionMismatch {
            expected: simplex[0].len(),
            got: simplex.iter().map(|v| v.len()).find(|&n| n != simplex[0].len()).unwrap_or(0),
        });
    }
    let tol = 1e-12 * linalg::euclidean_diameter(simplex).max(1e-300);
    if linalg::affine_rank(simplex, tol) != k {
        return Err(Error::Degenerate("simplex vertices are affinely dependent".into()));
    }
    Ok(())
}

/// The cells of stage `stage` (stage 0 is the simplex itself).
pub fn standard_subdivision(simplex: &[Vector], stage: usize) -> Result<Vec<Vec<Vector>>> {
    check_simplex(simplex)?;
    let mut cells = vec![simplex.to_vec()];
    for _ in 0..stage {
        cells = cells.iter().flat_map(|c| children(c)).collect();
    }
    Ok(cells)
}

/// All stages `0..=stages` with parent links.
pub fn subdivision_tree(simplex: &[Vector], stages: usize) -> Result<Vec<Vec<SubCell>>> {
    check_simplex(simplex)?;
    let mut tree = vec![vec![SubCell {
        vertices: simplex.to_vec(),
        parent: None,
    }]];
    for _ in 0..stages {
        let next = tree
            .last()
            .expect("nonempty")
            .iter()
            .enumerate()
            .flat_map(|(i, c)| {
                children(&c.vertices).into_iter().map(move |v| SubCell {
                    vertices: v,
                    parent: Some(i),
                })
            })
            .collect();
        tree.push(next);
    }
    Ok(tree)
}

fn simplex_volume(vs: &[Vector]) -> f64 {
    let cols: Vec<Vector> = vs[1..].iter().map(|v| v - &vs[0]).collect();
    linalg::det_columns(&cols).abs() / linalg::factorial(vs.len() - 1)
}

/// Smallest ratio `vol(child) / diam(child)^k` over `(vol(Δ) / diam(Δ)^k)`
/// seen in the first three stages of the standard simplex. All later stages
/// repeat these shapes, so this bounds the fullness loss of the subdivision in
/// Euclidean terms. Cached per `k`.
pub fn fullness_floor(k: usize) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    if let Some(v) = CACHE.get_or_init(Default::default).lock().get(&k) {
        return *v;
    }
    let ratio = |vs: &[Vector]| simplex_volume(vs) / linalg::euclidean_diameter(vs).powi(k as i32);
    let mut simplex = vec![linalg::zeros(k)];
    simplex.extend((0..k).map(|i| linalg::unit(k, i)));
    let base = ratio(&simplex);
    let mut eta = 1.0f64;
    let mut cells = vec![simplex];
    for _ in 0..3 {
        cells = cells.iter().flat_map(|c| children(c)).collect();
        for c in &cells {
            eta = eta.min(ratio(c) / base);
        }
    }
    CACHE.get_or_init(Default::default).lock().insert(k, eta);
    eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn standard(k: usize) -> Vec<Vector> {
        let mut s = vec![linalg::zeros(k)];
        s.extend((0..k).map(|i| linalg::unit(k, i)));
        s
    }

    #[test]
    fn child_counts_and_volumes() {
        for k in 1..=4 {
            let s = standard(k);
            assert_eq!(standard_subdivision(&s, 0).unwrap(), vec![s.clone()]);
            let c = standard_subdivision(&s, 1).unwrap();
            assert_eq!(c.len(), 1 << k);
            let total: f64 = c.iter().map(|x| simplex_volume(x)).sum();
            assert!((total - simplex_volume(&s)).abs() < 1e-12);
            for x in &c {
                assert!((simplex_volume(x) - simplex_volume(&s) / (1 << k) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diameters_halve() {
        let s = vec![vector(&[0.0, 0.0]), vector(&[2.0, 0.3]), vector(&[0.5, 1.7])];
        let d0 = linalg::euclidean_diameter(&s);
        for stage in 1..4 {
            let max = standard_subdivision(&s, stage)
                .unwrap()
                .iter()
                .map(|c| linalg::euclidean_diameter(c))
                .fold(0.0, f64::max);
            assert!(max <= d0 / (1 << stage) as f64 + 1e-12);
        }
    }

    #[test]
    fn children_cover_parent() {
        let s = standard(3);
        let c = standard_subdivision(&s, 2).unwrap();
        let total: f64 = c.iter().map(|x| simplex_volume(x)).sum();
        assert!((total - 1.0 / 6.0).abs() < 1e-12);
        assert!(fullness_floor(3) > 0.0 && fullness_floor(3) <= 1.0);
    }

    #[test]
    fn degenerate_input() {
        let s = vec![vector(&[0.0, 0.0]), vector(&[1.0, 1.0]), vector(&[2.0, 2.0])];
        assert!(standard_subdivision(&s, 1).is_err());
    }
}
