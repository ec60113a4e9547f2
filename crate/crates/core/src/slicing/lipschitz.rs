//! Restriction of a polyhedral chain to a sublevel set `{f < r}` of a
//! Lipschitz function, approximated by piecewise-linear interpolants of `f`
//! on successive subdivisions of a full simplex enclosing each summand.

use std::collections::HashMap;

use serde::Serialize;

use crate::chains::{OrientedPolytope, PolyChain, SimpleChain};
use crate::error::{Error, Result};
use crate::foundation::NormedSpace;
use crate::geometry::{Frame, Halfspace, LocalPolytope};
use crate::linalg::{self, Vector};
use crate::lp::{LinearProgram, Relation};
use crate::mass::{density, full_simplex, PlaneKey};
use crate::slicing::subdivision::{children, fullness_floor};

/// Lipschitz functions with exactly computable ranges on simplices.
#[derive(Debug, Clone, PartialEq)]
pub enum LipschitzFn {
    /// `x -> covector . x + offset`
    Linear {
        covector: Vector,
        offset: f64,
    },
    DistanceToPoint(Vector),
    /// norm distance to the convex hull of the given points
    DistanceToPolytope(Vec<Vector>),
}

impl LipschitzFn {
    pub fn eval(&self, space: &NormedSpace, x: &Vector) -> f64 {
        match self {
            LipschitzFn::Linear { covector, offset } => covector.dot(x) + offset,
            LipschitzFn::DistanceToPoint(z) => space.distance(x, z),
            LipschitzFn::DistanceToPolytope(q) => space.distance_to_hull(x, q),
        }
    }

    pub fn lipschitz(&self, space: &NormedSpace) -> f64 {
        match self {
            LipschitzFn::Linear { covector, .. } => space.dual_norm(covector),
            _ => 1.0,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, LipschitzFn::Linear { .. })
    }

    /// `(min, max)` of `f` over the convex hull of `pts`. All variants are
    /// convex, so the max is attained at a vertex.
    pub fn range_on(&self, space: &NormedSpace, pts: &[Vector]) -> (f64, f64) {
        let values: Vec<f64> = pts.iter().map(|p| self.eval(space, p)).collect();
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = match self {
            LipschitzFn::Linear { .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
            LipschitzFn::DistanceToPoint(z) => space.distance_to_hull(z, pts),
            LipschitzFn::DistanceToPolytope(q) => space.hull_distance(pts, q),
        };
        (lo, hi)
    }

    fn check(&self, space: &NormedSpace) -> Result<()> {
        let n = match self {
            LipschitzFn::Linear { covector, .. } => covector.len(),
            LipschitzFn::DistanceToPoint(z) => z.len(),
            LipschitzFn::DistanceToPolytope(q) => {
                if q.is_empty() {
                    return Err(Error::Degenerate("empty polytope".into()));
                }
                q.iter().map(|v| v.len()).find(|&n| n != space.dim()).unwrap_or(space.dim())
            }
        };
        if n != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: n,
            });
        }
        Ok(())
    }
}

/// Affine function `a . c + b` in some coordinate system.
#[derive(Debug, Clone)]
struct Affine {
    a: Vector,
    b: f64,
}

impl Affine {
    fn interpolate(cell: &[Vector], values: &[f64]) -> Affine {
        let k = cell.len() - 1;
        let d = cell[0].len();
        let rows: Vec<Vector> = cell[1..].iter().map(|v| v - &cell[0]).collect();
        let m = nalgebra::DMatrix::from_fn(k, d, |i, j| rows[i][j]);
        let rhs = Vector::from_iterator(k, values[1..].iter().map(|x| x - values[0]));
        let a = if k == d {
            linalg::solve(&m, &rhs).unwrap_or_else(|| linalg::zeros(d))
        } else {
            // minimum-norm gradient within the span of the cell
            let mmt = &m * m.transpose();
            let y = linalg::solve(&mmt, &rhs).unwrap_or_else(|| linalg::zeros(k));
            m.transpose() * y
        };
        let b = values[0] - a.dot(&cell[0]);
        Affine { a, b }
    }

    /// `{a . c + b < r}` as a halfspace, or `Ok(bool)` when constant.
    fn below(&self, r: f64) -> std::result::Result<Halfspace, bool> {
        let n = self.a.norm();
        if n <= 1e-14 * (1.0 + self.b.abs()) {
            return Err(self.b < r);
        }
        Ok(Halfspace {
            normal: &self.a / n,
            offset: (r - self.b) / n,
        })
    }
}

fn clip_below(q: &LocalPolytope, f: &Affine, r: f64) -> Option<LocalPolytope> {
    match f.below(r) {
        Ok(h) => q.clip(&h),
        Err(true) => Some(q.clone()),
        Err(false) => None,
    }
}

fn clip_above(q: &LocalPolytope, f: &Affine, r: f64) -> Option<LocalPolytope> {
    match f.below(r) {
        Ok(h) => q.clip(&h.flipped()),
        Err(true) => None,
        Err(false) => Some(q.clone()),
    }
}

fn vol(q: &Option<LocalPolytope>) -> f64 {
    q.as_ref().map_or(0.0, |q| q.volume())
}

/// A piecewise-linear interpolant on one stage of a subdivision.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    pub stage: usize,
    pub cells: Vec<Vec<Vector>>,
    pub values: Vec<Vec<f64>>,
    /// largest dual norm of the cellwise gradients, measured in the restricted norm
    pub lipschitz: f64,
}

impl PiecewiseLinear {
    pub fn eval(&self, x: &Vector) -> Option<f64> {
        for (cell, vals) in self.cells.iter().zip(&self.values) {
            if let Some(beta) = barycentric(cell, x) {
                if beta.iter().all(|b| *b >= -1e-9) && reconstructs(cell, &beta, x) {
                    return Some(beta.iter().zip(vals).map(|(b, v)| b * v).sum());
                }
            }
        }
        None
    }
}

fn barycentric(cell: &[Vector], x: &Vector) -> Option<Vec<f64>> {
    let k = cell.len() - 1;
    let cols: Vec<Vector> = cell[1..].iter().map(|v| v - &cell[0]).collect();
    let m = linalg::columns(&cols, x.len());
    let rhs = x - &cell[0];
    let t = if k == x.len() {
        linalg::solve(&m, &rhs)?
    } else {
        linalg::solve(&(m.transpose() * &m), &(m.transpose() * rhs))?
    };
    let mut beta = vec![1.0 - t.sum()];
    beta.extend(t.iter());
    Some(beta)
}

fn reconstructs(cell: &[Vector], beta: &[f64], x: &Vector) -> bool {
    let mut y = linalg::zeros(x.len());
    for (b, v) in beta.iter().zip(cell) {
        y.axpy(*b, v, 1.0);
    }
    (y - x).norm() <= 1e-9 * (1.0 + linalg::euclidean_diameter(cell))
}

/// Interpolates `f` at the vertices of stage `stage` of the standard
/// subdivision of `simplex` (points of R^d).
pub fn pl_approx(space: &NormedSpace, f: &LipschitzFn, simplex: &[Vector], stage: usize) -> Result<PiecewiseLinear> {
    f.check(space)?;
    let cells = crate::slicing::standard_subdivision(simplex, stage)?;
    let dirs: Vec<Vector> = simplex[1..].iter().map(|v| v - &simplex[0]).collect();
    let basis = linalg::gram_schmidt(&dirs, 1e-12).ok_or_else(|| Error::Degenerate("degenerate simplex".into()))?;
    let mut values = Vec::with_capacity(cells.len());
    let mut lip: f64 = 0.0;
    for cell in &cells {
        let v: Vec<f64> = cell.iter().map(|x| f.eval(space, x)).collect();
        let aff = Affine::interpolate(cell, &v);
        let phi = Vector::from_iterator(basis.len(), basis.iter().map(|e| e.dot(&aff.a)));
        lip = lip.max(space.subspace_dual_norm(&basis, &phi)?);
        values.push(v);
    }
    Ok(PiecewiseLinear {
        stage,
        cells,
        values,
        lipschitz: lip,
    })
}

/// Per-stage numbers of a Lipschitz restriction, summed over summands.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StageReport {
    pub stage: usize,
    pub mass: f64,
    /// mass of the symmetric difference with the previous stage
    pub difference_mass: Option<f64>,
    pub size_n: f64,
    pub size_p: f64,
    pub size_u: f64,
}

#[derive(Debug, Clone)]
pub struct RestrictionReport {
    pub level: f64,
    pub stages: Vec<StageReport>,
    /// the restricted chain at every stage; summands have disjoint interiors
    pub chains: Vec<PolyChain>,
    pub tolerance: f64,
    pub converged: bool,
    /// Euclidean fullness floor of the subdivision cells
    pub fullness_floor: f64,
}

impl RestrictionReport {
    pub fn result(&self) -> &PolyChain {
        self.chains.last().expect("at least one stage")
    }

    pub fn size_u_nonincreasing(&self) -> bool {
        self.stages.windows(2).all(|w| w[1].size_u <= w[0].size_u * (1.0 + 1e-9) + 1e-12)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RestrictOptions {
    pub stages: usize,
    pub tolerance: f64,
}

impl Default for RestrictOptions {
    fn default() -> Self {
        RestrictOptions {
            stages: 6,
            tolerance: 1e-3,
        }
    }
}

/// A full simplex of the summand's plane, in the summand's frame coordinates,
/// translated and scaled to contain the summand.
fn enclosing_simplex(space: &NormedSpace, poly: &OrientedPolytope, cache: &mut HashMap<PlaneKey, Vec<Vector>>) -> Result<Vec<Vector>> {
    let plane = poly.plane()?;
    let global = match cache.get(&plane) {
        Some(v) => v.clone(),
        None => {
            let fs = full_simplex(space, &plane)?;
            cache.insert(plane, fs.vertices.clone());
            fs.vertices
        }
    };
    let frame = poly.frame();
    let w: Vec<Vector> = global
        .iter()
        .map(|v| Vector::from_iterator(frame.k(), frame.basis.iter().map(|e| e.dot(v))))
        .collect();
    smallest_homothet(&w, &poly.local().vertices)
}

/// Smallest `t + λ Δ` containing `pts`, enlarged by 1% about its centroid.
/// Solved as an LP in `(λ, t)` over the facet inequalities of `Δ`.
fn smallest_homothet(delta: &[Vector], pts: &[Vector]) -> Result<Vec<Vector>> {
    let k = delta.len() - 1;
    let hull = LocalPolytope::hull(delta).ok_or_else(|| Error::Degenerate("full simplex collapsed".into()))?;
    let w0 = &delta[0];
    // variables: λ, t⁺ (k), t⁻ (k); Δ - w0 contains 0 so h.(x - t - λ w0) <= λ (b - h.w0)
    let mut lp = LinearProgram::new(1 + 2 * k, std::iter::once(1.0).chain(std::iter::repeat_n(0.0, 2 * k)).collect());
    for h in &hull.facets {
        let b = h.offset - h.normal.dot(w0);
        for p in pts {
            let mut row = vec![(0, b)];
            for i in 0..k {
                row.push((1 + i, h.normal[i]));
                row.push((1 + k + i, -h.normal[i]));
            }
            lp.add(row, Relation::Ge, h.normal.dot(p));
        }
    }
    let sol = lp.solve()?;
    let lambda = sol.x[0].max(1e-300);
    let t = Vector::from_iterator(k, (0..k).map(|i| sol.x[1 + i] - sol.x[1 + k + i]));
    let placed: Vec<Vector> = delta.iter().map(|v| &t + (v - w0) * lambda).collect();
    let c = linalg::centroid(&placed);
    Ok(placed.iter().map(|v| &c + (v - &c) * 1.01).collect())
}

struct Live {
    cell: Vec<Vector>,
    piece: Option<LocalPolytope>,
    affine: Affine,
}

#[derive(Default, Clone)]
struct StageAcc {
    mass: f64,
    diff: f64,
    size_n: f64,
    size_p: f64,
    size_u: f64,
}

/// Runs the staged restriction of one summand. `emit` receives the pieces of
/// the restricted summand at each stage (as local polytopes).
fn restrict_summand(
    space: &NormedSpace,
    s: &SimpleChain,
    f: &LipschitzFn,
    r: f64,
    stages: usize,
    cache: &mut HashMap<PlaneKey, Vec<Vector>>,
    mut emit: Option<&mut dyn FnMut(usize, Vec<LocalPolytope>)>,
) -> Result<Vec<StageAcc>> {
    let poly = &s.poly;
    let frame: &Frame = poly.frame();
    let g = s.coeff.norm();
    let sigma = density(space, &poly.plane()?)?;
    let delta = enclosing_simplex(space, poly, cache)?;
    let values_at = |cell: &[Vector]| -> Vec<f64> { cell.iter().map(|c| f.eval(space, &frame.to_global(c))).collect() };
    let cell_volume = |cell: &[Vector]| -> f64 {
        let cols: Vec<Vector> = cell[1..].iter().map(|v| v - &cell[0]).collect();
        linalg::det_columns(&cols).abs() / linalg::factorial(cell.len() - 1)
    };

    let mut out = Vec::with_capacity(stages + 1);
    let mut n_pieces: Vec<LocalPolytope> = Vec::new();
    let mut n_volume = 0.0;
    let (mut size_n, mut size_p) = (0.0, 0.0);
    let mut live: Vec<Live> = Vec::new();
    for stage in 0..=stages {
        let candidates: Vec<(Vec<Vector>, Option<LocalPolytope>, Option<&Affine>)> = if stage == 0 {
            vec![(delta.clone(), Some(poly.local().clone()), None)]
        } else {
            live.iter()
                .flat_map(|l| {
                    children(&l.cell).into_iter().map(move |c| {
                        let piece = l.piece.as_ref().and_then(|q| {
                            let hull = LocalPolytope::hull(&c)?;
                            q.clip_all(&hull.facets)
                        });
                        (c, piece, Some(&l.affine))
                    })
                })
                .collect()
        };
        let mut acc = StageAcc::default();
        let mut next = Vec::new();
        let mut u_restricted: Vec<LocalPolytope> = Vec::new();
        for (cell, piece, parent) in candidates {
            let globals: Vec<Vector> = cell.iter().map(|c| frame.to_global(c)).collect();
            let (lo, hi) = f.range_on(space, &globals);
            let values = values_at(&cell);
            let affine = Affine::interpolate(&cell, &values);
            let sz = sigma * cell_volume(&cell);
            if let (Some(q), Some(par)) = (&piece, parent) {
                let a = clip_below(q, &affine, r).and_then(|x| clip_above(&x, par, r));
                let b = clip_above(q, &affine, r).and_then(|x| clip_below(&x, par, r));
                acc.diff += g * sigma * (vol(&a) + vol(&b));
            }
            if hi < r {
                size_n += sz;
                if let Some(q) = piece {
                    n_volume += q.volume();
                    n_pieces.push(q);
                }
            } else if lo >= r {
                size_p += sz;
            } else {
                acc.size_u += sz;
                if let Some(q) = &piece {
                    if let Some(x) = clip_below(q, &affine, r) {
                        u_restricted.push(x);
                    }
                }
                next.push(Live { cell, piece, affine });
            }
        }
        acc.size_n = size_n;
        acc.size_p = size_p;
        let u_volume: f64 = u_restricted.iter().map(|q| q.volume()).sum();
        acc.mass = g * sigma * (n_volume + u_volume);
        if let Some(emit) = emit.as_mut() {
            let mut pieces = n_pieces.clone();
            pieces.extend(u_restricted);
            emit(stage, pieces);
        }
        out.push(acc);
        live = next;
    }
    Ok(out)
}

/// Pieces of a summand in the stage-`stage` cells of its enclosing full
/// simplex, each with the gradient of the interpolant of `f` on that cell.
/// Both are in the summand's frame coordinates.
pub(crate) fn pl_pieces(space: &NormedSpace, s: &SimpleChain, f: &LipschitzFn, stage: usize) -> Result<Vec<(LocalPolytope, Vector)>> {
    let mut cache = HashMap::new();
    let frame = s.poly.frame();
    let delta = enclosing_simplex(space, &s.poly, &mut cache)?;
    let mut live = vec![(delta, s.poly.local().clone())];
    for _ in 0..stage {
        live = live
            .iter()
            .flat_map(|(cell, q)| {
                children(cell).into_iter().filter_map(move |c| {
                    let hull = LocalPolytope::hull(&c)?;
                    let piece = q.clip_all(&hull.facets)?;
                    Some((c, piece))
                })
            })
            .collect();
    }
    Ok(live
        .into_iter()
        .map(|(cell, piece)| {
            let values: Vec<f64> = cell.iter().map(|c| f.eval(space, &frame.to_global(c))).collect();
            (piece, Affine::interpolate(&cell, &values).a)
        })
        .collect())
}

fn check_inputs(chain: &PolyChain, f: &LipschitzFn) -> Result<()> {
    f.check(chain.space())
}

/// Restricts `chain` to `{f < r}` through `opts.stages` refinements and
/// reports per-stage masses, symmetric differences and the sizes of the
/// cells classified as below (N), above (P) or straddling (U) the level.
/// `converged` is false when the last difference exceeds the tolerance; the
/// level is then exceptional at this budget.
pub fn restrict_lipschitz(chain: &PolyChain, f: &LipschitzFn, r: f64, opts: RestrictOptions) -> Result<RestrictionReport> {
    check_inputs(chain, f)?;
    let space = chain.space();
    let k = chain.k();
    if k == 0 {
        let kept: Vec<SimpleChain> = chain
            .summands()
            .iter()
            .filter(|s| f.eval(space, &s.poly.vertices()[0]) < r)
            .cloned()
            .collect();
        let result = chain.with_summands(kept);
        let m = crate::mass::summand_mass(&result)?;
        let stages = (0..=opts.stages)
            .map(|stage| StageReport {
                stage,
                mass: m,
                difference_mass: (stage > 0).then_some(0.0),
                size_n: 0.0,
                size_p: 0.0,
                size_u: 0.0,
            })
            .collect();
        return Ok(RestrictionReport {
            level: r,
            stages,
            chains: vec![result; opts.stages + 1],
            tolerance: opts.tolerance,
            converged: true,
            fullness_floor: 1.0,
        });
    }
    let mut cache = HashMap::new();
    let mut totals = vec![StageAcc::default(); opts.stages + 1];
    let mut stage_summands: Vec<Vec<SimpleChain>> = vec![Vec::new(); opts.stages + 1];
    for s in chain.summands() {
        let frame = s.poly.frame().clone();
        let coeff = s.coeff;
        let mut emit = |stage: usize, pieces: Vec<LocalPolytope>| {
            for q in pieces {
                if let Ok(poly) = OrientedPolytope::from_local_polytope(frame.clone(), q) {
                    stage_summands[stage].push(SimpleChain { coeff, poly });
                }
            }
        };
        let per = restrict_summand(space, s, f, r, opts.stages, &mut cache, Some(&mut emit))?;
        for (t, a) in totals.iter_mut().zip(per) {
            t.mass += a.mass;
            t.diff += a.diff;
            t.size_n += a.size_n;
            t.size_p += a.size_p;
            t.size_u += a.size_u;
        }
    }
    let stages: Vec<StageReport> = totals
        .iter()
        .enumerate()
        .map(|(stage, t)| StageReport {
            stage,
            mass: t.mass,
            difference_mass: (stage > 0).then_some(t.diff),
            size_n: t.size_n,
            size_p: t.size_p,
            size_u: t.size_u,
        })
        .collect();
    let converged = stages.last().and_then(|s| s.difference_mass).is_none_or(|d| d < opts.tolerance);
    Ok(RestrictionReport {
        level: r,
        stages,
        chains: stage_summands.into_iter().map(|s| chain.with_summands(s)).collect(),
        tolerance: opts.tolerance,
        converged,
        fullness_floor: fullness_floor(k),
    })
}

/// One row of an exceptional-level scan.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ScanRow {
    pub level: f64,
    /// `Sz(U_i^r)` for `i = 0..=stages`
    pub size_u: Vec<f64>,
    pub nonincreasing: bool,
    pub difference_mass: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    /// `int Sz(U_i^r) dr`, computed exactly as `sum_cells Sz(cell) * range(f on cell)`;
    /// `None` when a stage has too many cells to enumerate
    pub integrals: Vec<Option<f64>>,
    /// `Lip(f) diam(Δ) Sz(Δ) / i` summed over summands (`None` at stage 0)
    pub bounds: Vec<Option<f64>>,
    pub integral_bound_holds: bool,
}

const MAX_SCAN_CELLS: usize = 1 << 16;

/// Tabulates `Sz(U_i^r)` for each level and checks that it does not grow
/// with the stage, and that its integral over `r` obeys the `C / i` bound.
pub fn exceptional_scan(chain: &PolyChain, f: &LipschitzFn, levels: &[f64], stages: usize) -> Result<ScanReport> {
    check_inputs(chain, f)?;
    let space = chain.space();
    let mut rows = Vec::with_capacity(levels.len());
    for &r in levels {
        let rep = restrict_lipschitz(
            chain,
            f,
            r,
            RestrictOptions {
                stages,
                tolerance: f64::INFINITY,
            },
        )?;
        rows.push(ScanRow {
            level: r,
            size_u: rep.stages.iter().map(|s| s.size_u).collect(),
            nonincreasing: rep.size_u_nonincreasing(),
            difference_mass: rep.stages.iter().map(|s| s.difference_mass.unwrap_or(0.0)).collect(),
        });
    }
    let mut integrals = vec![Some(0.0); stages + 1];
    let mut bounds: Vec<Option<f64>> = (0..=stages).map(|i| (i > 0).then_some(0.0)).collect();
    let lip = f.lipschitz(space);
    let mut cache = HashMap::new();
    if chain.k() > 0 {
        for s in chain.summands() {
            let frame = s.poly.frame();
            let sigma = density(space, &s.poly.plane()?)?;
            let delta = enclosing_simplex(space, &s.poly, &mut cache)?;
            let globals: Vec<Vector> = delta.iter().map(|c| frame.to_global(c)).collect();
            let diam = linalg_diameter(space, &globals);
            let sz_delta = sigma * simplex_volume(&delta);
            let mut cells = vec![delta];
            for i in 0..=stages {
                if i > 0 {
                    cells = cells.iter().flat_map(|c| children(c)).collect();
                    if let Some(b) = bounds[i].as_mut() {
                        *b += lip * diam * sz_delta / i as f64;
                    }
                }
                if cells.len() > MAX_SCAN_CELLS || integrals[i].is_none() {
                    integrals[i] = None;
                    continue;
                }
                let total: f64 = cells
                    .iter()
                    .map(|c| {
                        let g: Vec<Vector> = c.iter().map(|x| frame.to_global(x)).collect();
                        let (lo, hi) = f.range_on(space, &g);
                        sigma * simplex_volume(c) * (hi - lo).max(0.0)
                    })
                    .sum();
                if let Some(x) = integrals[i].as_mut() {
                    *x += total;
                }
                if cells.len() * (1 << chain.k()) > MAX_SCAN_CELLS {
                    // later stages would be skipped anyway
                    for j in i + 1..=stages {
                        integrals[j] = None;
                        if let Some(b) = bounds[j].as_mut() {
                            *b += lip * diam * sz_delta / j as f64;
                        }
                    }
                    break;
                }
            }
        }
    }
    let integral_bound_holds = integrals.iter().zip(&bounds).all(|(x, b)| match (x, b) {
        (Some(x), Some(b)) => *x <= b * (1.0 + 1e-9) + 1e-12,
        _ => true,
    });
    Ok(ScanReport {
        rows,
        integrals,
        bounds,
        integral_bound_holds,
    })
}

fn simplex_volume(cell: &[Vector]) -> f64 {
    let cols: Vec<Vector> = cell[1..].iter().map(|v| v - &cell[0]).collect();
    linalg::det_columns(&cols).abs() / linalg::factorial(cell.len() - 1)
}

fn linalg_diameter(space: &NormedSpace, pts: &[Vector]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(space.distance(&pts[i], &pts[j]));
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::{CoefficientGroup, Functional, GroupElement};
    use crate::linalg::vector;
    use crate::mass::summand_mass;
    use crate::slicing::restrict_halfspace;

    fn square(space: &NormedSpace) -> PolyChain {
        PolyChain::from_raw(
            space.clone(),
            CoefficientGroup::Integers,
            2,
            vec![(
                GroupElement::Int(1),
                vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[1.0, 1.0]), vector(&[0.0, 1.0])],
                vec![vector(&[1.0, 0.0]), vector(&[0.0, 1.0])],
            )],
        )
        .unwrap()
    }

    #[test]
    fn linear_matches_halfspace() {
        let sp = NormedSpace::euclidean(2);
        let sq = square(&sp);
        let f = LipschitzFn::Linear {
            covector: vector(&[1.0, 0.5]),
            offset: 0.0,
        };
        let rep = restrict_lipschitz(
            &sq,
            &f,
            0.6,
            RestrictOptions {
                stages: 3,
                tolerance: 1e-9,
            },
        )
        .unwrap();
        let exact = restrict_halfspace(&sq, &Functional::new(&sp, vector(&[1.0, 0.5])).unwrap(), 0.6);
        let m = summand_mass(&exact).unwrap();
        for st in &rep.stages {
            assert!((st.mass - m).abs() < 1e-9, "{st:?} {m}");
            assert!(st.difference_mass.unwrap_or(0.0) < 1e-9);
        }
        assert!(rep.converged);
        assert!(rep.size_u_nonincreasing());
    }

    #[test]
    fn large_ball_returns_chain() {
        let sp = NormedSpace::euclidean(2);
        let sq = square(&sp);
        let f = LipschitzFn::DistanceToPoint(vector(&[0.5, 0.5]));
        let rep = restrict_lipschitz(&sq, &f, 10.0, RestrictOptions::default()).unwrap();
        assert!((summand_mass(rep.result()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_in_square_between_polygons() {
        let sp = NormedSpace::euclidean(2);
        let sq = square(&sp);
        let f = LipschitzFn::DistanceToPoint(vector(&[0.5, 0.5]));
        let rep = restrict_lipschitz(&sq, &f, 0.4, RestrictOptions::default()).unwrap();
        let m = summand_mass(rep.result()).unwrap();
        let r: f64 = 0.4;
        let n = 64.0;
        let inscribed = 0.5 * n * r * r * (2.0 * std::f64::consts::PI / n).sin();
        let circumscribed = n * r * r * (std::f64::consts::PI / n).tan();
        assert!(m > inscribed * 0.99 && m < circumscribed * 1.01, "{m}");
        assert!(rep.size_u_nonincreasing());
        assert_eq!(rep.chains.len(), 7);
        // smooth f: differences shrink roughly fourfold per stage
        let d: Vec<f64> = rep.stages.iter().filter_map(|s| s.difference_mass).collect();
        assert!(d[5] < d[3] / 8.0, "{d:?}");
        let finer = restrict_lipschitz(
            &sq,
            &f,
            0.4,
            RestrictOptions {
                stages: 7,
                tolerance: 1e-3,
            },
        )
        .unwrap();
        assert!(finer.converged, "{:?}", finer.stages.last());
    }

    #[test]
    fn pl_approx_properties() {
        let sp = NormedSpace::euclidean(2);
        let tri = vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])];
        let lin = LipschitzFn::Linear {
            covector: vector(&[2.0, -1.0]),
            offset: 0.3,
        };
        let pl = pl_approx(&sp, &lin, &tri, 2).unwrap();
        let x = vector(&[0.21, 0.37]);
        assert!((pl.eval(&x).unwrap() - lin.eval(&sp, &x)).abs() < 1e-12);
        assert!((pl.lipschitz - 5f64.sqrt()).abs() < 1e-9);
        let c = linalg::centroid(&tri);
        let dist = LipschitzFn::DistanceToPoint(c.clone());
        let pl = pl_approx(&sp, &dist, &tri, 3).unwrap();
        let cell_diam = pl.cells.iter().map(|c| linalg::euclidean_diameter(c)).fold(0.0, f64::max);
        for i in 0..20 {
            for j in 0..(20 - i) {
                let x = vector(&[i as f64 / 20.0, j as f64 / 20.0]);
                let err = (pl.eval(&x).unwrap() - dist.eval(&sp, &x)).abs();
                assert!(err <= cell_diam + 1e-12);
            }
        }
        let constant = LipschitzFn::Linear {
            covector: vector(&[0.0, 0.0]),
            offset: 2.0,
        };
        let pl = pl_approx(&sp, &constant, &tri, 2).unwrap();
        assert_eq!(pl.eval(&x), Some(2.0));
    }

    #[test]
    fn scan_is_monotone_and_bounded() {
        let sp = NormedSpace::euclidean(2);
        let sq = square(&sp);
        let f = LipschitzFn::DistanceToPoint(vector(&[0.5, 0.5]));
        let scan = exceptional_scan(&sq, &f, &[0.2, 0.3, 0.45], 4).unwrap();
        assert!(scan.rows.iter().all(|r| r.nonincreasing));
        assert!(scan.integral_bound_holds, "{:?} {:?}", scan.integrals, scan.bounds);
    }
}
