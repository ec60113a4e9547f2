//! Deterministic derivative-free optimizers: multi-start maximization over a
//! sphere and pattern search over R^n. Both refine with a shrinking local
//! grid that probes every combination of axis moves. The sphere search also
//! polls seeded random tangent directions before shrinking, since ridges of
//! piecewise-linear objectives need not follow any grid direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{orthonormal_complement, vector, Vector};

/// random tangent polls per tangent dimension before the step shrinks
const RIDGE_POLLS: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct SphereSearch {
    pub starts: usize,
    /// number of best starts that get refined
    pub refine: usize,
    /// final step size of the local grid
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SphereSearch {
    fn default() -> Self {
        SphereSearch {
            starts: 64,
            refine: 4,
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SphereOptimum {
    pub point: Vector,
    pub value: f64,
    pub evaluations: usize,
}

/// Deterministic start points on the unit sphere of R^m (antipodal pairs are
/// not both needed when the objective is even, but we do not assume that).
pub fn sphere_starts(m: usize, count: usize, seed: u64) -> Vec<Vector> {
    match m {
        0 => Vec::new(),
        1 => vec![vector(&[1.0]), vector(&[-1.0])],
        2 => (0..count)
            .map(|i| {
                let t = std::f64::consts::TAU * (i as f64 + 0.5 * (seed % 2) as f64) / count as f64;
                vector(&[t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            // Fibonacci lattice
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let y = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - y * y).sqrt();
                    let t = golden * i as f64 + seed as f64;
                    vector(&[r * t.cos(), y, r * t.sin()])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| loop {
                    let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let v = vector(&v);
                    let n = v.norm();
                    if n > 1e-3 && n <= 1.0 {
                        break v / n;
                    }
                })
                .collect()
        }
    }
}

fn local_moves(dim: usize) -> Vec<Vec<f64>> {
    // all of {-1, 0, 1}^dim except the origin
    let mut out = Vec::new();
    let total = 3usize.pow(dim as u32);
    for code in 0..total {
        let mut c = code;
        let mut mv = Vec::with_capacity(dim);
        for _ in 0..dim {
            mv.push((c % 3) as f64 - 1.0);
            c /= 3;
        }
        if mv.iter().any(|&x| x != 0.0) {
            out.push(mv);
        }
    }
    out
}

/// Maximizes `f` over the unit sphere of R^m.
pub fn sphere_maximize<F: FnMut(&Vector) -> f64>(m: usize, opts: SphereSearch, mut f: F) -> SphereOptimum {
    let starts = sphere_starts(m, opts.starts.max(2), opts.seed);
    let mut evals = 0usize;
    let mut scored: Vec<(f64, Vector)> = starts
        .into_iter()
        .map(|p| {
            evals += 1;
            (f(&p), p)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    if m == 1 {
        let (value, point) = scored.swap_remove(0);
        return SphereOptimum {
            point,
            value,
            evaluations: evals,
        };
    }
    let spacing = match m {
        2 => std::f64::consts::TAU / opts.starts.max(2) as f64,
        _ => (4.0 * std::f64::consts::PI / opts.starts.max(2) as f64).sqrt(),
    };
    let moves = local_moves(m - 1);
    let mut poll_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(f64, Vector)> = None;
    for (v0, p0) in scored.into_iter().take(opts.refine.max(1)) {
        let (mut val, mut p) = (v0, p0);
        let mut step = spacing;
        while step > opts.tolerance {
            let tangent = orthonormal_complement(std::slice::from_ref(&p), m);
            let mut improved = false;
            let mut cand_best = val;
            let mut cand_point = None;
            for mv in &moves {
                let mut q = p.clone();
                for (c, t) in mv.iter().zip(tangent.iter()) {
                    if *c != 0.0 {
                        q.axpy(c * step, t, 1.0);
                    }
                }
                let q = q.normalize();
                evals += 1;
                let v = f(&q);
                if v > cand_best {
                    cand_best = v;
                    cand_point = Some(q);
                }
            }
            if cand_point.is_none() && m > 2 {
                for _ in 0..RIDGE_POLLS * (m - 1) {
                    let mut q = p.clone();
                    for t in &tangent {
                        q.axpy(step * poll_rng.gen_range(-1.0..1.0), t, 1.0);
                    }
                    let q = q.normalize();
                    evals += 1;
                    let v = f(&q);
                    if v > cand_best {
                        cand_best = v;
                        cand_point = Some(q);
                    }
                }
            }
            if let Some(q) = cand_point {
                val = cand_best;
                p = q;
                improved = true;
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, p));
        }
    }
    let (value, point) = best.expect("at least one start");
    SphereOptimum {
        point,
        value,
        evaluations: evals,
    }
}

/// Pattern search minimization of `f` over R^n from `x0`.
pub fn pattern_minimize<F: FnMut(&Vector) -> f64>(x0: Vector, step0: f64, tol: f64, mut f: F) -> (Vector, f64) {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    if n == 0 {
        return (x, fx);
    }
    let moves = if n <= 4 {
        local_moves(n)
    } else {
        (0..2 * n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                v
            })
            .collect()
    };
    let mut step = step0;
    let mut guard = 0usize;
    while step > tol && guard < 100_000 {
        guard += 1;
        let mut best = fx;
        let mut arg = None;
        for mv in &moves {
            let mut y = x.clone();
            for (i, c) in mv.iter().enumerate() {
                y[i] += c * step;
            }
            let fy = f(&y);
            if fy < best {
                best = fy;
                arg = Some(y);
            }
        }
        match arg {
            Some(y) => {
                x = y;
                fx = best;
            }
            None => step *= 0.5,
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_maximum_of_linear_function() {
        let g = vector(&[3.0, 4.0]);
        let opt = sphere_maximize(2, SphereSearch::default(), |p| p.dot(&g));
        assert!((opt.value - 5.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_maximum_at_a_kink() {
        // max of the l1 norm on the Euclidean 3-sphere is sqrt(3), at a ridge point
        let opt = sphere_maximize(3, SphereSearch::default(), |p| p.iter().map(|x| x.abs()).sum());
        assert!((opt.value - 3f64.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn pattern_search_quadratic() {
        let (x, fx) = pattern_minimize(vector(&[0.0, 0.0]), 1.0, 1e-10, |v| {
            (v[0] - 1.0).powi(2) + 2.0 * (v[1] + 0.5).powi(2)
        });
        assert!(fx < 1e-15);
        assert!((x[0] - 1.0).abs() < 1e-7);
    }
}
