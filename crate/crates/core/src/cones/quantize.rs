//! Quantization of chains onto a finite set of centers.
//!
//! Zero-chains are snapped to centers and their coefficients projected into a
//! finite net. Higher chains are cut along enlarged balls around the centers,
//! and each cell is replaced by the cone from its center over the quantized
//! boundary of the cell. Every call returns a flat-norm certificate
//! `(filling, residual)` with `P - Q = ∂filling + residual`, and the error
//! budget lists the masses of its parts.

use serde::Serialize;

use crate::chains::{OrientedPolytope, PolyChain, SimpleChain};
use crate::cones::cone::cone;
use crate::error::{Error, Result};
use crate::foundation::{CoefficientGroup, GroupElement, NormedSpace};
use crate::geometry::REL_TOL;
use crate::linalg::{self, Vector};
use crate::lp::{LinearProgram, Relation};
use crate::mass::{mass, summand_mass};
use crate::slicing::check_level;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BudgetItem {
    pub description: String,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct ErrorBudget {
    pub items: Vec<BudgetItem>,
    pub total: f64,
}

impl ErrorBudget {
    pub fn push(&mut self, description: impl Into<String>, bound: f64) {
        if bound > 0.0 {
            self.items.push(BudgetItem {
                description: description.into(),
                bound,
            });
            self.total += bound;
        }
    }

    pub fn extend(&mut self, other: ErrorBudget) {
        for item in other.items {
            self.push(item.description, item.bound);
        }
    }
}

/// Coefficient net `H_q` used by the projection `π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CoeffNet {
    /// identity projection (required for the discrete groups)
    Exact,
    /// real coefficients truncated toward zero to multiples of `step`
    Grid(f64),
}

impl CoeffNet {
    /// Grid fine enough that `n_centers` truncations cost at most `eps / 4`.
    pub fn for_epsilon(eps: f64, n_centers: usize) -> CoeffNet {
        CoeffNet::Grid(eps / (4.0 * n_centers.max(1) as f64))
    }

    /// `π(g)`: `|π(g)| ≤ |g|` and `|g - π(g)| < step`.
    pub fn project(&self, g: &GroupElement) -> GroupElement {
        match (self, g) {
            (CoeffNet::Grid(step), GroupElement::Real(x)) => {
                let n = (x.abs() / step + 1e-9).floor();
                GroupElement::Real(x.signum() * n * step)
            }
            _ => *g,
        }
    }

    fn check(&self, group: CoefficientGroup) -> Result<()> {
        match (self, group) {
            (CoeffNet::Grid(s), CoefficientGroup::Reals) if !(*s > 0.0 && s.is_finite()) => {
                Err(Error::Unsupported(format!("coefficient grid step must be positive, got {s}")))
            }
            (CoeffNet::Grid(_), CoefficientGroup::Reals) | (CoeffNet::Exact, _) => Ok(()),
            (CoeffNet::Grid(_), g) => Err(Error::Unsupported(format!(
                "a coefficient grid applies to real coefficients; use the exact net for {g:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Quantization {
    pub chain: PolyChain,
    pub budget: ErrorBudget,
    /// `(k+1)`-chain `R` and `k`-chain `T` with `P - Q = ∂R + T`
    pub filling: PolyChain,
    pub residual: PolyChain,
    /// largest mass of a quantized cell boundary (0 for 0-chains)
    pub max_cell_boundary_mass: f64,
}

fn segment(a: &Vector, b: &Vector) -> Option<OrientedPolytope> {
    OrientedPolytope::simplex(&[a.clone(), b.clone()]).ok()
}

/// Snaps each point to its nearest center (ties to the lower index), which
/// must lie within `delta`, and projects the summed coefficient per center
/// through `net`.
pub fn quantize_zero_chain(chain: &PolyChain, centers: &[Vector], delta: f64, net: CoeffNet) -> Result<Quantization> {
    if chain.k() != 0 {
        return Err(Error::Unsupported(format!("expected a 0-chain, got k = {}", chain.k())));
    }
    net.check(chain.group())?;
    let space = chain.space();
    let group = chain.group();
    let mut totals: Vec<GroupElement> = vec![group.zero(); centers.len()];
    let mut segments = Vec::new();
    for (index, s) in chain.summands().iter().enumerate() {
        let y = &s.poly.vertices()[0];
        let tol = REL_TOL * (1.0 + delta);
        let (j, dist) = centers
            .iter()
            .map(|c| space.distance(c, y))
            .enumerate()
            .fold((usize::MAX, f64::INFINITY), |best, (i, d)| if d < best.1 { (i, d) } else { best });
        if dist > delta + tol {
            return Err(Error::Uncovered { index });
        }
        totals[j] = totals[j].add(&s.coeff)?;
        if let Some(poly) = segment(&centers[j], y) {
            segments.push(SimpleChain { coeff: s.coeff, poly });
        }
    }
    let mut snapped = Vec::new();
    let mut dropped = Vec::new();
    for (c, g) in centers.iter().zip(&totals) {
        let h = net.project(g);
        let rest = g.sub(&h)?;
        if !h.is_zero() {
            snapped.push(SimpleChain {
                coeff: h,
                poly: OrientedPolytope::point(c.clone()),
            });
        }
        if !rest.is_zero() {
            dropped.push(SimpleChain {
                coeff: rest,
                poly: OrientedPolytope::point(c.clone()),
            });
        }
    }
    let filling = PolyChain::new(space.clone(), group, 1, segments)?;
    let residual = PolyChain::new(space.clone(), group, 0, dropped)?;
    let mut budget = ErrorBudget::default();
    budget.push("M(R): segments from points to their centers", mass(&filling)?);
    budget.push("M(T): coefficient truncation at centers", mass(&residual)?);
    Ok(Quantization {
        chain: PolyChain::new(space.clone(), group, 0, snapped)?.canonicalize(),
        budget,
        filling,
        residual,
        max_cell_boundary_mass: 0.0,
    })
}

/// Outer facets of the polytope balls used as cells: the unit-ball facets for
/// polyhedral norms, otherwise supporting halfspaces of the norm ball in a
/// fixed set of directions (so the polytope contains the norm ball).
pub fn ball_facets(space: &NormedSpace) -> Vec<Vector> {
    if let Some(f) = space.polyhedral_facets() {
        return f.to_vec();
    }
    let d = space.dim();
    let dirs: Vec<Vector> = if d == 2 {
        (0..32)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 16.0;
                linalg::vector(&[t.cos(), t.sin()])
            })
            .collect()
    } else {
        let mut out = Vec::new();
        let total = 3usize.pow(d as u32);
        for code in 0..total {
            let mut c = code;
            let v = Vector::from_iterator(
                d,
                (0..d).map(|_| {
                    let x = (c % 3) as f64 - 1.0;
                    c /= 3;
                    x
                }),
            );
            if v.norm() > 0.0 {
                out.push(v);
            }
        }
        out
    };
    dirs.into_iter().map(|u| &u / space.dual_norm(&u)).collect()
}

/// Half-widths of the unit cell polytope along the coordinate axes.
fn cell_extent(facets: &[Vector], d: usize) -> Vec<f64> {
    (0..d)
        .map(|i| {
            let mut obj = vec![0.0; 2 * d];
            obj[i] = -1.0;
            obj[d + i] = 1.0;
            let mut lp = LinearProgram::new(2 * d, obj);
            for h in facets {
                let row = (0..d).flat_map(|j| [(j, h[j]), (d + j, -h[j])]).collect();
                lp.add(row, Relation::Le, 1.0);
            }
            lp.solve().map_or(f64::INFINITY, |s| -s.objective)
        })
        .collect()
}

fn bounding_box(chain: &PolyChain) -> Option<(Vector, Vector)> {
    let mut it = chain.summands().iter().flat_map(|s| s.poly.vertices().iter());
    let first = it.next()?;
    let (mut lo, mut hi) = (first.clone(), first.clone());
    for v in it {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    Some((lo, hi))
}

/// `chain ∩ {h . (x - z) ≤ r for all h}` and the complement, cut along
/// the facets in order.
fn split_by_ball(chain: &PolyChain, facets: &[Vector], z: &Vector, r: f64) -> (PolyChain, PolyChain) {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for s in chain.summands() {
        // pieces that are still inside all facets seen so far
        let mut cur = Some(s.poly.clone());
        for h in facets {
            let Some(p) = cur.take() else { break };
            let level = r + h.dot(z);
            if let Some(out) = p.clip(&(-h), -level) {
                outside.push(SimpleChain { coeff: s.coeff, poly: out });
            }
            cur = p.clip(h, level);
        }
        if let Some(p) = cur {
            inside.push(SimpleChain { coeff: s.coeff, poly: p });
        }
    }
    (chain.with_summands(inside), chain.with_summands(outside))
}

/// Mass of the slice of `chain` by the boundary of the ball, or `None` when
/// the ball boundary contains a facet of the chain.
fn ball_slice_mass(chain: &PolyChain, facets: &[Vector], z: &Vector, r: f64) -> Result<Option<f64>> {
    let space = chain.space();
    for h in facets {
        let f = crate::foundation::Functional::new(space, h.clone())?;
        if check_level(chain, &f, r + h.dot(z)).is_err() {
            return Ok(None);
        }
    }
    let (inside, _) = split_by_ball(chain, facets, z, r);
    if inside.is_zero() {
        return Ok(Some(0.0));
    }
    let (boundary_inside, _) = split_by_ball(&chain.boundary()?, facets, z, r);
    let slice = inside.boundary()?.sub(&boundary_inside)?;
    Ok(Some(mass(&slice)?))
}

pub const RADIUS_CANDIDATES: usize = 32;

/// Replaces `chain` (k ≥ 1) by a sum of cones from the centers over quantized
/// cell boundaries.
pub fn cone_quantize(chain: &PolyChain, centers: &[Vector], delta: f64, net: CoeffNet) -> Result<Quantization> {
    if chain.k() == 0 {
        return quantize_zero_chain(chain, centers, delta, net);
    }
    net.check(chain.group())?;
    let space = chain.space();
    let group = chain.group();
    let k = chain.k();
    let facets = ball_facets(space);
    let extent = cell_extent(&facets, space.dim());
    let mut remaining = chain.clone();
    let mut output = PolyChain::zero(space.clone(), group, k);
    let mut filling = PolyChain::zero(space.clone(), group, k + 1);
    let mut residual = PolyChain::zero(space.clone(), group, k);
    let mut budget = ErrorBudget::default();
    let mut max_cell_boundary_mass: f64 = 0.0;
    for (l, z) in centers.iter().enumerate() {
        let Some((lo, hi)) = bounding_box(&remaining) else {
            break;
        };
        let reach = 2.0 * delta * (1.0 + 1e-9);
        if (0..z.len()).any(|i| z[i] + reach * extent[i] < lo[i] || z[i] - reach * extent[i] > hi[i]) {
            continue;
        }
        let mut best: Option<(f64, f64)> = None;
        for j in 0..RADIUS_CANDIDATES {
            let gamma = delta * (1.0 + (j as f64 + 0.5) / RADIUS_CANDIDATES as f64);
            if let Some(m) = ball_slice_mass(&remaining, &facets, z, gamma)? {
                if best.is_none_or(|(bm, _)| m < bm) {
                    best = Some((m, gamma));
                }
            }
        }
        let (_, gamma) = best.ok_or(Error::NoRadius {
            lo: delta,
            hi: 2.0 * delta,
        })?;
        let (cell, rest) = split_by_ball(&remaining, &facets, z, gamma);
        remaining = rest;
        if cell.is_zero() {
            continue;
        }
        let boundary = cell.boundary()?;
        let sub = cone_quantize(&boundary, centers, delta, net)?;
        max_cell_boundary_mass = max_cell_boundary_mass.max(mass(&sub.chain)?);
        // P^l - C_z Q_b = ∂(C_z P^l - C_z R_b) + (R_b + C_z T_b)
        let cone_cell = cone(z, &cell)?;
        let cone_r = cone(z, &sub.filling)?;
        let cone_t = cone(z, &sub.residual)?;
        budget.push(format!("cell {l}: M(C_z P^l)"), mass(&cone_cell)?);
        budget.push(format!("cell {l}: M(C_z R)"), mass(&cone_r)?);
        budget.push(format!("cell {l}: M(R)"), mass(&sub.filling)?);
        budget.push(format!("cell {l}: M(C_z T)"), mass(&cone_t)?);
        output = output.add(&cone(z, &sub.chain)?)?;
        filling = filling.add(&cone_cell.sub(&cone_r)?)?;
        residual = residual.add(&sub.filling.add(&cone_t)?)?;
    }
    if !remaining.is_zero() && summand_mass(&remaining)? > REL_TOL * chain.scale().powi(k as i32) {
        let x = &remaining.summands()[0].poly.vertices()[0];
        let index = chain
            .summands()
            .iter()
            .position(|s| s.poly.contains(x, REL_TOL * chain.scale()))
            .unwrap_or(0);
        return Err(Error::Uncovered { index });
    }
    Ok(Quantization {
        chain: output.canonicalize(),
        budget,
        filling,
        residual,
        max_cell_boundary_mass,
    })
}
