use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::lp::{LinearProgram, Relation};
use crate::mass::density::MassDensityCache;
use crate::optimize::{pattern_minimize, sphere_maximize, SphereSearch};

pub const MAX_DIM: usize = 6;

/// How the ambient norm is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    /// `||x||_p`, `p` in `[1, inf]`
    P(f64),
    /// `||W x||_p` with `W = diag(weights)`
    WeightedP { p: f64, weights: Vec<f64> },
    /// unit ball `{x : h_j(x) <= 1}` for a centrally symmetric facet set
    Polytope { facets: Vec<Vector> },
}

/// A finite-dimensional normed space. Cloning shares the density cache.
#[derive(Clone)]
pub struct NormedSpace {
    dim: usize,
    spec: NormSpec,
    facets: Option<Arc<Vec<Vector>>>,
    cache: Arc<MassDensityCache>,
}

impl PartialEq for NormedSpace {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.spec == other.spec
    }
}

impl fmt::Debug for NormedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormedSpace")
            .field("dim", &self.dim)
            .field("spec", &self.spec)
            .finish()
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidNorm(format!("p = {p} outside [1, inf]")));
    }
    Ok(())
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn p_norm<I: Iterator<Item = f64>>(xs: I, p: f64) -> f64 {
    if p.is_infinite() {
        xs.fold(0.0, |m, x| m.max(x.abs()))
    } else if p == 1.0 {
        xs.map(f64::abs).sum()
    } else if p == 2.0 {
        xs.map(|x| x * x).sum::<f64>().sqrt()
    } else {
        let v: Vec<f64> = xs.map(f64::abs).collect();
        let m = v.iter().cloned().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|x| (x / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

impl NormedSpace {
    pub fn new(dim: usize, spec: NormSpec) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidNorm(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        let facets = match &spec {
            NormSpec::P(p) => {
                check_p(*p)?;
                polyhedral_facets(dim, *p, None)
            }
            NormSpec::WeightedP { p, weights } => {
                check_p(*p)?;
                if weights.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: weights.len(),
                    });
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::InvalidNorm("weights must be positive".into()));
                }
                polyhedral_facets(dim, *p, Some(weights))
            }
            NormSpec::Polytope { facets } => {
                validate_facets(dim, facets)?;
                Some(facets.clone())
            }
        };
        Ok(NormedSpace {
            dim,
            spec,
            facets: facets.map(Arc::new),
            cache: Arc::new(MassDensityCache::default()),
        })
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        Self::new(dim, NormSpec::P(p))
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(dim, NormSpec::P(2.0)).expect("valid dimension")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn density_cache(&self) -> &MassDensityCache {
        &self.cache
    }

    /// True for the plain Euclidean norm, where every density is 1.
    pub fn is_euclidean(&self) -> bool {
        matches!(self.spec, NormSpec::P(p) if p == 2.0)
    }

    /// Facet covectors when the unit ball is a polytope.
    pub fn polyhedral_facets(&self) -> Option<&[Vector]> {
        self.facets.as_deref().map(|v| v.as_slice())
    }

    fn check(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn try_norm(&self, v: &Vector) -> Result<f64> {
        self.check(v)?;
        Ok(self.norm(v))
    }

    /// The space norm. Panics on a dimension mismatch; see [`Self::try_norm`].
    pub fn norm(&self, v: &Vector) -> f64 {
        assert_eq!(v.len(), self.dim, "vector dimension");
        match &self.spec {
            NormSpec::P(p) => p_norm(v.iter().copied(), *p),
            NormSpec::WeightedP { p, weights } => p_norm(v.iter().zip(weights).map(|(x, w)| x * w), *p),
            NormSpec::Polytope { facets } => facets.iter().map(|h| h.dot(v)).fold(f64::NEG_INFINITY, f64::max).max(0.0),
        }
    }

    pub fn distance(&self, x: &Vector, y: &Vector) -> f64 {
        self.norm(&(x - y))
    }

    pub fn try_dual_norm(&self, f: &Vector) -> Result<f64> {
        self.check(f)?;
        Ok(self.dual_norm(f))
    }

    /// `sup_{||x|| <= 1} f(x)`.
    pub fn dual_norm(&self, f: &Vector) -> f64 {
        assert_eq!(f.len(), self.dim, "covector dimension");
        match &self.spec {
            NormSpec::P(p) => p_norm(f.iter().copied(), conjugate(*p)),
            NormSpec::WeightedP { p, weights } => p_norm(f.iter().zip(weights).map(|(x, w)| x / w), conjugate(*p)),
            NormSpec::Polytope { facets } => polytope_dual(facets, f),
        }
    }

    /// Dual norm of a covector `phi` on `span(basis)` for the restricted norm,
    /// i.e. `sup phi(w) / ||w||` over nonzero `w` in the span. `phi[i]` is the
    /// value of the functional on `basis[i]`.
    pub fn subspace_dual_norm(&self, basis: &[Vector], phi: &Vector) -> Result<f64> {
        for b in basis {
            self.check(b)?;
        }
        if phi.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: phi.len(),
            });
        }
        let m = basis.len();
        if m == 0 || phi.iter().all(|x| *x == 0.0) {
            return Ok(0.0);
        }
        if linalg::rank(basis, 1e-10) < m {
            return Err(Error::DependentBasis(format!("{m} vectors do not span a {m}-dimensional subspace")));
        }
        let b = linalg::columns(basis, self.dim);
        if let Some(facets) = self.polyhedral_facets() {
            // restricted ball {c : (B^T h_j) c <= 1}; dual norm by LP duality
            let restricted: Vec<Vector> = facets.iter().map(|h| b.transpose() * h).collect();
            return Ok(polytope_dual(&restricted, phi));
        }
        match &self.spec {
            NormSpec::P(p) if *p == 2.0 => {
                let gram = b.transpose() * &b;
                let y = linalg::solve(&gram, phi).ok_or_else(|| Error::DependentBasis("singular Gram matrix".into()))?;
                Ok(phi.dot(&y).max(0.0).sqrt())
            }
            NormSpec::WeightedP { p, weights } if *p == 2.0 => {
                let w = nalgebra::DMatrix::from_diagonal(&Vector::from_column_slice(weights));
                let wb = w * &b;
                let gram = wb.transpose() * &wb;
                let y = linalg::solve(&gram, phi).ok_or_else(|| Error::DependentBasis("singular Gram matrix".into()))?;
                Ok(phi.dot(&y).max(0.0).sqrt())
            }
            _ => Ok(self.numeric_subspace_dual(basis, phi)),
        }
    }

    /// `1 / min { ||B c|| : phi . c = 1 }`, a convex problem solved by pattern search.
    fn numeric_subspace_dual(&self, basis: &[Vector], phi: &Vector) -> f64 {
        let m = basis.len();
        let pn2 = phi.norm_squared();
        let c0 = phi / pn2;
        let dir = phi / pn2.sqrt();
        let z = linalg::orthonormal_complement(std::slice::from_ref(&dir), m);
        let eval = |c: &Vector| -> f64 {
            let mut w = linalg::zeros(self.dim);
            for (ci, bi) in c.iter().zip(basis) {
                w.axpy(*ci, bi, 1.0);
            }
            self.norm(&w)
        };
        let scale = c0.norm();
        let (_, best) = pattern_minimize(linalg::zeros(m - 1), scale, 1e-13 * scale, |t| {
            let mut c = c0.clone();
            for (ti, zi) in t.iter().zip(&z) {
                c.axpy(*ti, zi, 1.0);
            }
            eval(&c)
        });
        1.0 / best
    }

    /// `min ||sum lambda_i p_i||` over the probability simplex, i.e. the norm
    /// distance from the origin to the convex hull of `points`.
    pub fn min_norm_in_hull(&self, points: &[Vector]) -> f64 {
        assert!(!points.is_empty());
        if points.len() == 1 {
            return self.norm(&points[0]);
        }
        if let Some(facets) = self.polyhedral_facets() {
            return polyhedral_min_norm(facets, points);
        }
        match &self.spec {
            NormSpec::P(p) if *p == 2.0 => wolfe_min_norm(points),
            NormSpec::WeightedP { p, weights } if *p == 2.0 => {
                let scaled: Vec<Vector> = points
                    .iter()
                    .map(|x| Vector::from_iterator(x.len(), x.iter().zip(weights).map(|(a, w)| a * w)))
                    .collect();
                wolfe_min_norm(&scaled)
            }
            _ => dual_min_norm(self, points),
        }
    }

    /// Norm distance from `x` to the convex hull of `vertices`.
    pub fn distance_to_hull(&self, x: &Vector, vertices: &[Vector]) -> f64 {
        let diffs: Vec<Vector> = vertices.iter().map(|v| x - v).collect();
        self.min_norm_in_hull(&diffs)
    }

    /// Norm distance between the convex hulls of two point sets.
    pub fn hull_distance(&self, a: &[Vector], b: &[Vector]) -> f64 {
        let mut diffs = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                diffs.push(x - y);
            }
        }
        self.min_norm_in_hull(&diffs)
    }
}

fn polyhedral_facets(dim: usize, p: f64, weights: Option<&Vec<f64>>) -> Option<Vec<Vector>> {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    if p.is_infinite() {
        let mut out = Vec::new();
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut h = linalg::zeros(dim);
                h[i] = s * w(i);
                out.push(h);
            }
        }
        Some(out)
    } else if p == 1.0 {
        let mut out = Vec::new();
        for code in 0..(1usize << dim) {
            let h = Vector::from_fn(dim, |i, _| {
                let s = if code >> i & 1 == 1 { -1.0 } else { 1.0 };
                s * w(i)
            });
            out.push(h);
        }
        Some(out)
    } else {
        None
    }
}

fn validate_facets(dim: usize, facets: &[Vector]) -> Result<()> {
    if facets.is_empty() {
        return Err(Error::InvalidNorm("empty facet list".into()));
    }
    for h in facets {
        if h.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: h.len(),
            });
        }
        if !h.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidNorm("non-finite facet".into()));
        }
        let scale = h.norm().max(1.0);
        if !facets.iter().any(|g| (g + h).norm() <= 1e-9 * scale) {
            return Err(Error::InvalidNorm("facet set is not centrally symmetric".into()));
        }
    }
    if linalg::rank(facets, 1e-10) < dim {
        return Err(Error::InvalidNorm("facets do not bound the unit ball".into()));
    }
    Ok(())
}

/// `sup {f.x : h_j.x <= 1}` = `min {sum lambda : sum lambda_j h_j = f, lambda >= 0}`.
fn polytope_dual(facets: &[Vector], f: &Vector) -> f64 {
    if f.iter().all(|x| *x == 0.0) {
        return 0.0;
    }
    let n = facets.len();
    let mut lp = LinearProgram::new(n, vec![1.0; n]);
    for i in 0..f.len() {
        let row: Vec<(usize, f64)> = facets
            .iter()
            .enumerate()
            .filter(|(_, h)| h[i] != 0.0)
            .map(|(j, h)| (j, h[i]))
            .collect();
        lp.add(row, Relation::Eq, f[i]);
    }
    match lp.solve() {
        Ok(s) => s.objective,
        // the restricted ball is unbounded in a direction f does not annihilate
        Err(_) => f64::INFINITY,
    }
}

/// LP: minimize t subject to h_j . (sum lambda_i p_i) <= t, sum lambda = 1.
fn polyhedral_min_norm(facets: &[Vector], points: &[Vector]) -> f64 {
    let n = points.len();
    // variables: lambda_0..n-1, t
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LinearProgram::new(n + 1, obj);
    for h in facets {
        let mut row: Vec<(usize, f64)> = points.iter().enumerate().map(|(i, p)| (i, h.dot(p))).collect();
        row.push((n, -1.0));
        lp.add(row, Relation::Le, 0.0);
    }
    lp.add((0..n).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0);
    match lp.solve() {
        Ok(s) => s.objective.max(0.0),
        Err(_) => f64::NAN,
    }
}

/// Wolfe's minimum-norm-point algorithm (Euclidean).
pub(crate) fn wolfe_min_norm(points: &[Vector]) -> f64 {
    let scale = points.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-12 * scale;
    let mut start = 0;
    for (i, p) in points.iter().enumerate() {
        if p.norm_squared() < points[start].norm_squared() {
            start = i;
        }
    }
    let mut set = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();
    for _ in 0..1000 {
        // major cycle
        let (j, val) = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.dot(&x)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if x.norm_squared() - val <= tol || set.contains(&j) {
            return x.norm();
        }
        set.push(j);
        lambda.push(0.0);
        loop {
            // affine minimizer over the current set
            let s = set.len();
            let mut a = nalgebra::DMatrix::zeros(s + 1, s + 1);
            let mut rhs = linalg::zeros(s + 1);
            for r in 0..s {
                for c in 0..s {
                    a[(r, c)] = points[set[r]].dot(&points[set[c]]);
                }
                a[(r, s)] = 1.0;
                a[(s, r)] = 1.0;
            }
            rhs[s] = 1.0;
            let alpha = match linalg::solve(&a, &rhs) {
                Some(sol) => sol.rows(0, s).into_owned(),
                None => {
                    // degenerate set; drop the newest point
                    set.pop();
                    lambda.pop();
                    return x.norm();
                }
            };
            if alpha.iter().all(|&v| v > 1e-12) {
                lambda = alpha.iter().copied().collect();
                x = combine(points, &set, &lambda);
                break;
            }
            let mut theta = 1.0f64;
            for i in 0..s {
                if alpha[i] <= 1e-12 {
                    let denom = lambda[i] - alpha[i];
                    if denom > 0.0 {
                        theta = theta.min(lambda[i] / denom);
                    }
                }
            }
            for i in 0..s {
                lambda[i] = theta * alpha[i] + (1.0 - theta) * lambda[i];
            }
            let mut k = 0;
            while k < set.len() {
                if lambda[k] <= 1e-12 {
                    set.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            for l in lambda.iter_mut() {
                *l /= total;
            }
            x = combine(points, &set, &lambda);
            if set.len() <= 1 {
                break;
            }
        }
    }
    x.norm()
}

fn combine(points: &[Vector], set: &[usize], lambda: &[f64]) -> Vector {
    let mut x = linalg::zeros(points[0].len());
    for (i, l) in set.iter().zip(lambda) {
        x.axpy(*l, &points[*i], 1.0);
    }
    x
}

/// Minimax duality: `min_{x in C} ||x|| = max_{||phi||_* = 1} min_j phi . p_j`
/// when `0` is outside `C`. The outer problem is maximized on the sphere.
fn dual_min_norm(space: &NormedSpace, points: &[Vector]) -> f64 {
    let opts = SphereSearch {
        starts: 64,
        refine: 4,
        tolerance: 1e-10,
        seed: 0,
    };
    let opt = sphere_maximize(space.dim(), opts, |u| {
        let phi = u / space.dual_norm(u);
        points.iter().map(|p| phi.dot(p)).fold(f64::INFINITY, f64::min)
    });
    opt.value.max(0.0)
}

/// A linear functional together with its dual norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub covector: Vector,
    pub dual_norm: f64,
}

impl Functional {
    pub fn new(space: &NormedSpace, covector: Vector) -> Result<Self> {
        let dual_norm = space.try_dual_norm(&covector)?;
        Ok(Functional { covector, dual_norm })
    }

    /// Rescaled to unit dual norm.
    pub fn unit(space: &NormedSpace, covector: Vector) -> Result<Self> {
        let f = Self::new(space, covector)?;
        if f.dual_norm == 0.0 {
            return Err(Error::Degenerate("zero functional".into()));
        }
        let c = &f.covector / f.dual_norm;
        Ok(Functional {
            covector: c,
            dual_norm: 1.0,
        })
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        self.covector.dot(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn poly_linf() -> NormedSpace {
        let facets = vec![vector(&[1.0, 0.0]), vector(&[-1.0, 0.0]), vector(&[0.0, 1.0]), vector(&[0.0, -1.0])];
        NormedSpace::new(2, NormSpec::Polytope { facets }).unwrap()
    }

    #[test]
    fn norm_examples() {
        let linf = NormedSpace::lp(2, f64::INFINITY).unwrap();
        assert_eq!(linf.norm(&vector(&[1.0, 1.0])), 1.0);
        let l1 = NormedSpace::lp(2, 1.0).unwrap();
        assert_eq!(l1.norm(&vector(&[1.0, -1.0])), 2.0);
        assert_eq!(poly_linf().norm(&vector(&[2.0, -3.0])), 3.0);
    }

    #[test]
    fn dual_norm_examples() {
        let l1 = NormedSpace::lp(2, 1.0).unwrap();
        assert!((l1.dual_norm(&vector(&[1.0, 1.0])) - 1.0).abs() < 1e-12);
        let l2 = NormedSpace::euclidean(2);
        assert!((l2.dual_norm(&vector(&[3.0, 4.0])) - 5.0).abs() < 1e-12);
        let linf = NormedSpace::lp(2, f64::INFINITY).unwrap();
        assert!((linf.dual_norm(&vector(&[1.0, 1.0])) - 2.0).abs() < 1e-12);
        assert!((poly_linf().dual_norm(&vector(&[1.0, 1.0])) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn subspace_dual_examples() {
        let linf = NormedSpace::lp(2, f64::INFINITY).unwrap();
        let b = vec![vector(&[1.0, 1.0])];
        assert!((linf.subspace_dual_norm(&b, &vector(&[1.0])).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(linf.subspace_dual_norm(&b, &vector(&[0.0])).unwrap(), 0.0);
        let l1 = NormedSpace::lp(2, 1.0).unwrap();
        assert!((l1.subspace_dual_norm(&b, &vector(&[2.0])).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(NormedSpace::lp(2, 0.5).is_err());
        assert!(NormedSpace::lp(7, 2.0).is_err());
        let l2 = NormedSpace::euclidean(2);
        assert!(l2.try_norm(&vector(&[1.0])).is_err());
        let dep = vec![vector(&[1.0, 1.0]), vector(&[2.0, 2.0])];
        assert!(matches!(
            l2.subspace_dual_norm(&dep, &vector(&[1.0, 0.0])),
            Err(Error::DependentBasis(_))
        ));
        let asym = vec![vector(&[1.0, 0.0]), vector(&[0.0, 1.0]), vector(&[-1.0, 0.0])];
        assert!(NormedSpace::new(2, NormSpec::Polytope { facets: asym }).is_err());
    }

    #[test]
    fn general_p_subspace_dual_matches_closed_form() {
        let sp = NormedSpace::lp(3, 3.0).unwrap();
        let basis: Vec<Vector> = (0..3).map(|i| linalg::unit(3, i)).collect();
        let f = vector(&[0.3, -1.2, 0.7]);
        let a = sp.subspace_dual_norm(&basis, &f).unwrap();
        let b = sp.dual_norm(&f);
        assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
    }

    #[test]
    fn min_norm_point_routes_agree() {
        let pts = vec![vector(&[1.0, 2.0]), vector(&[3.0, -1.0]), vector(&[2.0, 2.5])];
        // Euclidean distance from origin to segment [(1,2),(3,-1)]
        let d = wolfe_min_norm(&pts);
        let a = &pts[0];
        let u = &pts[1] - a;
        let t = (-a.dot(&u) / u.norm_squared()).clamp(0.0, 1.0);
        let exact = (a + u * t).norm();
        assert!((d - exact).abs() < 1e-12);
        let dual = dual_min_norm(&NormedSpace::euclidean(2), &pts);
        assert!((dual - exact).abs() < 1e-9, "{dual} vs {exact}");
        let l3 = NormedSpace::lp(2, 3.0).unwrap();
        let seg = [pts[0].clone(), pts[1].clone()];
        let brute = (0..=100_000)
            .map(|i| l3.norm(&(&seg[0] + (&seg[1] - &seg[0]) * (i as f64 / 100_000.0))))
            .fold(f64::INFINITY, f64::min);
        assert!((l3.min_norm_in_hull(&seg) - brute).abs() < 1e-6);
        let l1 = NormedSpace::lp(2, 1.0).unwrap();
        assert!(l1.min_norm_in_hull(&pts) <= l1.norm(&pts[0]));
    }
}
