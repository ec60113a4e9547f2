use nalgebra::DMatrix;

use super::polytope::OrientedPolytope;
use crate::error::{Error, Result};
use crate::foundation::{CoefficientGroup, GroupElement, NormedSpace};
use crate::geometry::{Frame, Halfspace, LocalPolytope, REL_TOL};
use crate::linalg::{self, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleChain {
    pub coeff: GroupElement,
    pub poly: OrientedPolytope,
}

/// A finite formal sum of coefficient-weighted oriented convex k-polytopes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyChain {
    space: NormedSpace,
    group: CoefficientGroup,
    k: usize,
    summands: Vec<SimpleChain>,
}

/// Raw summand data: coefficient, vertices, orientation basis.
pub type RawSummand = (GroupElement, Vec<Vector>, Vec<Vector>);

impl PolyChain {
    pub fn zero(space: NormedSpace, group: CoefficientGroup, k: usize) -> Self {
        PolyChain {
            space,
            group,
            k,
            summands: Vec::new(),
        }
    }

    /// Builds a chain from validated summands (not canonicalized).
    pub fn new(space: NormedSpace, group: CoefficientGroup, k: usize, summands: Vec<SimpleChain>) -> Result<Self> {
        if k > space.dim() {
            return Err(Error::ChainMismatch(format!("k = {k} exceeds dimension {}", space.dim())));
        }
        for (index, s) in summands.iter().enumerate() {
            if s.poly.k() != k || s.poly.ambient_dim() != space.dim() {
                return Err(Error::InvalidSummand {
                    index,
                    message: format!(
                        "polytope of dimension {} in R^{} in a {k}-chain in R^{}",
                        s.poly.k(),
                        s.poly.ambient_dim(),
                        space.dim()
                    ),
                });
            }
            if !group.contains(&s.coeff) {
                return Err(Error::InvalidSummand {
                    index,
                    message: format!("coefficient {:?} not in {:?}", s.coeff, group),
                });
            }
        }
        Ok(PolyChain {
            space,
            group,
            k,
            summands: summands.into_iter().filter(|s| !s.coeff.is_zero()).collect(),
        })
    }

    /// Builds a chain from raw vertex data. Degenerate summands are dropped;
    /// any other invalid summand is an error naming its index.
    pub fn from_raw(space: NormedSpace, group: CoefficientGroup, k: usize, raw: Vec<RawSummand>) -> Result<Self> {
        let mut summands = Vec::with_capacity(raw.len());
        for (index, (coeff, vertices, basis)) in raw.into_iter().enumerate() {
            if basis.len() != k {
                return Err(Error::InvalidSummand {
                    index,
                    message: format!("orientation basis has {} vectors, expected {k}", basis.len()),
                });
            }
            if vertices.iter().chain(&basis).any(|v| v.len() != space.dim()) {
                return Err(Error::InvalidSummand {
                    index,
                    message: format!("coordinates must have length {}", space.dim()),
                });
            }
            if !group.contains(&coeff) {
                return Err(Error::InvalidSummand {
                    index,
                    message: format!("coefficient {coeff} not in {group:?}"),
                });
            }
            match OrientedPolytope::new(vertices, basis) {
                Ok(poly) => summands.push(SimpleChain { coeff, poly }),
                Err(Error::Degenerate(_)) => {}
                Err(e) => {
                    return Err(Error::InvalidSummand {
                        index,
                        message: e.to_string(),
                    })
                }
            }
        }
        Self::new(space, group, k, summands)
    }

    /// Unit-coefficient simple chain on a simplex oriented by its vertex order.
    pub fn simplex(space: &NormedSpace, group: CoefficientGroup, coeff: GroupElement, vertices: &[Vector]) -> Result<Self> {
        let k = vertices.len() - 1;
        let poly = OrientedPolytope::simplex(vertices)?;
        Self::new(space.clone(), group, k, vec![SimpleChain { coeff, poly }])
    }

    pub fn space(&self) -> &NormedSpace {
        &self.space
    }

    pub fn group(&self) -> CoefficientGroup {
        self.group
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn summands(&self) -> &[SimpleChain] {
        &self.summands
    }

    pub fn is_zero(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn with_summands(&self, summands: Vec<SimpleChain>) -> PolyChain {
        PolyChain {
            space: self.space.clone(),
            group: self.group,
            k: self.k,
            summands: summands.into_iter().filter(|s| !s.coeff.is_zero()).collect(),
        }
    }

    fn check_compatible(&self, other: &PolyChain) -> Result<()> {
        if self.k != other.k {
            return Err(Error::ChainMismatch(format!("k = {} vs {}", self.k, other.k)));
        }
        if self.space != other.space {
            return Err(Error::ChainMismatch("different ambient spaces".into()));
        }
        if self.group != other.group {
            return Err(Error::GroupMismatch(format!("{:?} vs {:?}", self.group, other.group)));
        }
        Ok(())
    }

    /// Formal sum (concatenation; not canonicalized).
    pub fn add(&self, other: &PolyChain) -> Result<PolyChain> {
        self.check_compatible(other)?;
        let mut s = self.summands.clone();
        s.extend(other.summands.iter().cloned());
        Ok(self.with_summands(s))
    }

    pub fn neg(&self) -> PolyChain {
        self.with_summands(
            self.summands
                .iter()
                .map(|s| SimpleChain {
                    coeff: s.coeff.neg(),
                    poly: s.poly.clone(),
                })
                .collect(),
        )
    }

    pub fn sub(&self, other: &PolyChain) -> Result<PolyChain> {
        self.add(&other.neg())
    }

    /// Multiplies every coefficient by the integer `n`.
    pub fn times(&self, n: i64) -> PolyChain {
        let one = self.group.from_int(n);
        self.with_summands(
            self.summands
                .iter()
                .map(|s| SimpleChain {
                    coeff: mul_int(&s.coeff, &one, n),
                    poly: s.poly.clone(),
                })
                .collect(),
        )
    }

    /// Euclidean scale of the support, used for relative tolerances.
    pub fn scale(&self) -> f64 {
        let pts: Vec<Vector> = self.summands.iter().flat_map(|s| s.poly.vertices().iter().cloned()).collect();
        if pts.is_empty() {
            return 1.0;
        }
        let lo = (0..self.space.dim()).map(|i| pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min));
        let hi: Vec<f64> = (0..self.space.dim())
            .map(|i| pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let diag: f64 = lo.zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        diag.max(pts.iter().map(linalg::max_abs).fold(0.0, f64::max)).max(1e-12)
    }

    /// Boundary chain, canonicalized.
    pub fn boundary(&self) -> Result<PolyChain> {
        if self.k == 0 {
            return Err(Error::DimensionTooLow { required: 1, k: 0 });
        }
        let mut out = Vec::new();
        for s in &self.summands {
            for (sign, facet) in s.poly.facets() {
                out.push(SimpleChain {
                    coeff: s.coeff.signed(sign > 0.0),
                    poly: facet,
                });
            }
        }
        Ok(PolyChain {
            space: self.space.clone(),
            group: self.group,
            k: self.k - 1,
            summands: out,
        }
        .canonicalize())
    }

    /// Closed summand polytopes of the canonical form.
    pub fn support(&self) -> Vec<OrientedPolytope> {
        self.canonicalize().summands.into_iter().map(|s| s.poly).collect()
    }

    /// Image under `x -> a x + t`.
    pub fn affine_pushforward(&self, a: &DMatrix<f64>, t: &Vector) -> Result<PolyChain> {
        let d = self.space.dim();
        if a.shape() != (d, d) || t.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: t.len() });
        }
        let cols: Vec<Vector> = (0..d).map(|j| a.column(j).into_owned()).collect();
        if linalg::rank(&cols, 1e-12) < d {
            return Err(Error::NonInjective);
        }
        let summands = self
            .summands
            .iter()
            .map(|s| {
                Ok(SimpleChain {
                    coeff: s.coeff,
                    poly: s.poly.affine_image(a, t)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_summands(summands))
    }

    /// Common refinement with coefficients added on shared cells and zero
    /// cells removed. Summands with pairwise disjoint relative interiors
    /// pass through unchanged, so the operation is idempotent.
    pub fn canonicalize(&self) -> PolyChain {
        let tol = REL_TOL * self.scale();
        let live: Vec<SimpleChain> = self.summands.iter().filter(|s| !s.coeff.is_zero()).cloned().collect();
        let summands = if self.k == 0 {
            canonical_points(live, tol)
        } else {
            canonical_cells(live, tol)
        };
        self.with_summands(summands)
    }
}

fn mul_int(g: &GroupElement, image: &GroupElement, n: i64) -> GroupElement {
    match (*g, *image) {
        (GroupElement::Int(a), _) => GroupElement::Int(a * n),
        (GroupElement::Real(a), _) => GroupElement::Real(a * n as f64),
        (GroupElement::Mod { residue, modulus }, _) => GroupElement::Mod {
            residue: ((residue as i64 * n).rem_euclid(modulus as i64)) as u32,
            modulus,
        },
    }
}

fn canonical_points(live: Vec<SimpleChain>, tol: f64) -> Vec<SimpleChain> {
    let mut out: Vec<SimpleChain> = Vec::new();
    for s in live {
        let x = &s.poly.vertices()[0];
        match out.iter_mut().find(|o| (&o.poly.vertices()[0] - x).norm() <= tol) {
            Some(o) => o.coeff = o.coeff.add(&s.coeff).expect("same group"),
            None => out.push(s),
        }
    }
    out.retain(|s| !s.coeff.is_zero());
    out
}

struct FlatGroup {
    frame: Frame,
    members: Vec<(usize, GroupElement, LocalPolytope)>,
}

fn canonical_cells(live: Vec<SimpleChain>, tol: f64) -> Vec<SimpleChain> {
    let mut groups: Vec<FlatGroup> = Vec::new();
    for (idx, s) in live.iter().enumerate() {
        let frame = s.poly.frame();
        match groups.iter_mut().find(|g| g.frame.same_flat(frame, tol)) {
            Some(g) => {
                let sign = g.frame.orientation_sign(frame);
                let pts: Vec<Vector> = s.poly.vertices().iter().map(|v| g.frame.to_local(v)).collect();
                if let Some(local) = LocalPolytope::hull(&pts) {
                    g.members.push((idx, s.coeff.signed(sign > 0.0), local));
                }
            }
            None => groups.push(FlatGroup {
                frame: frame.clone(),
                members: vec![(idx, s.coeff, s.poly.local().clone())],
            }),
        }
    }
    let mut out: Vec<(usize, SimpleChain)> = Vec::new();
    for g in groups {
        for comp in overlap_components(&g.members, tol) {
            if comp.len() == 1 {
                let idx = g.members[comp[0]].0;
                out.push((idx, live[idx].clone()));
                continue;
            }
            let first = comp.iter().map(|&i| g.members[i].0).min().unwrap_or(0);
            let members: Vec<(GroupElement, LocalPolytope)> = comp.iter().map(|&i| (g.members[i].1, g.members[i].2.clone())).collect();
            for (coeff, cell) in refine(&members, tol) {
                if let Ok(poly) = OrientedPolytope::from_local_polytope(g.frame.clone(), cell) {
                    out.push((first, SimpleChain { coeff, poly }));
                }
            }
        }
    }
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, s)| s).collect()
}

fn bbox(p: &LocalPolytope) -> (Vec<f64>, Vec<f64>) {
    let k = p.k();
    let lo = (0..k)
        .map(|i| p.vertices.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi = (0..k)
        .map(|i| p.vertices.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    (lo, hi)
}

fn boxes_overlap(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>), tol: f64) -> bool {
    (0..a.0.len()).all(|i| a.0[i] < b.1[i] - tol && b.0[i] < a.1[i] - tol)
}

fn boxes_touch(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>), tol: f64) -> bool {
    (0..a.0.len()).all(|i| a.0[i] <= b.1[i] + tol && b.0[i] <= a.1[i] + tol)
}

/// Interiors of two full-dimensional polytopes meet.
pub(crate) fn interiors_meet(a: &LocalPolytope, b: &LocalPolytope) -> bool {
    let scale = a.scale().max(b.scale());
    a.clip_all(&b.facets).is_some_and(|c| c.width() > REL_TOL * scale)
}

fn overlap_components(members: &[(usize, GroupElement, LocalPolytope)], tol: f64) -> Vec<Vec<usize>> {
    let n = members.len();
    let boxes: Vec<_> = members.iter().map(|m| bbox(&m.2)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let nx = p[j];
            p[j] = r;
            j = nx;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if boxes_overlap(&boxes[i], &boxes[j], tol) && interiors_meet(&members[i].2, &members[j].2) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(c) => comps[c].push(i),
            None => {
                root_of[r] = Some(comps.len());
                comps.push(vec![i]);
            }
        }
    }
    comps
}

fn canonical_hyperplane(h: &Halfspace) -> Halfspace {
    let lead = h.normal.iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(1.0);
    if lead < 0.0 {
        h.flipped()
    } else {
        h.clone()
    }
}

/// Splits overlapping cells along every facet hyperplane, adds coefficients on
/// common cells, drops zeros and merges equal-coefficient neighbours whose
/// union is convex.
fn refine(members: &[(GroupElement, LocalPolytope)], tol: f64) -> Vec<(GroupElement, LocalPolytope)> {
    let mut planes: Vec<Halfspace> = Vec::new();
    for (_, p) in members {
        for f in &p.facets {
            let h = canonical_hyperplane(f);
            if !planes
                .iter()
                .any(|q| (&q.normal - &h.normal).norm() <= 1e-9 && (q.offset - h.offset).abs() <= tol)
            {
                planes.push(h);
            }
        }
    }
    let mut cells: Vec<(Vec<bool>, GroupElement, LocalPolytope)> = Vec::new();
    for (coeff, p) in members {
        let mut pieces = vec![p.clone()];
        for h in &planes {
            let mut next = Vec::with_capacity(pieces.len());
            for c in pieces {
                let s: Vec<f64> = c.vertices.iter().map(|v| h.eval(v)).collect();
                let t = c.tolerance();
                if s.iter().all(|&x| x <= t) || s.iter().all(|&x| x >= -t) {
                    next.push(c);
                    continue;
                }
                next.extend(c.clip(h));
                next.extend(c.clip(&h.flipped()));
            }
            pieces = next;
        }
        for c in pieces {
            let x = c.centroid();
            let key: Vec<bool> = planes.iter().map(|h| h.eval(&x) < 0.0).collect();
            match cells.iter_mut().find(|(k, _, _)| *k == key) {
                Some(cell) => cell.1 = cell.1.add(coeff).expect("same group"),
                None => cells.push((key, *coeff, c)),
            }
        }
    }
    let mut cells: Vec<(GroupElement, LocalPolytope)> = cells.into_iter().filter(|c| !c.1.is_zero()).map(|(_, g, p)| (g, p)).collect();
    merge_convex(&mut cells, tol);
    cells
}

/// Union of `a` and `b` when it is convex: they must share a whole facet and
/// each must satisfy the other's remaining facet inequalities, in which case
/// the union equals the intersection of those remaining halfspaces.
fn convex_union(a: &LocalPolytope, b: &LocalPolytope, tol: f64) -> Option<LocalPolytope> {
    let on = |p: &LocalPolytope, f: &Halfspace| -> Vec<Vector> { p.vertices.iter().filter(|v| f.eval(v).abs() <= tol).cloned().collect() };
    let same_points = |x: &[Vector], y: &[Vector]| x.len() == y.len() && x.iter().all(|p| y.iter().any(|q| (p - q).norm() <= tol));
    let (ia, ib) = a.facets.iter().enumerate().find_map(|(i, fa)| {
        let flipped = fa.flipped();
        b.facets
            .iter()
            .position(|fb| fb.same_as(&flipped, tol))
            .filter(|&j| same_points(&on(a, fa), &on(b, &b.facets[j])))
            .map(|j| (i, j))
    })?;
    let rest = |p: &LocalPolytope, skip: usize| -> Vec<Halfspace> {
        p.facets
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, f)| f.clone())
            .collect()
    };
    let (ra, rb) = (rest(a, ia), rest(b, ib));
    if !b.vertices.iter().all(|v| ra.iter().all(|f| f.eval(v) <= tol)) || !a.vertices.iter().all(|v| rb.iter().all(|f| f.eval(v) <= tol)) {
        return None;
    }
    let mut pts = a.vertices.clone();
    pts.extend(b.vertices.iter().cloned());
    LocalPolytope::hull(&pts)
}

fn merge_convex(cells: &mut Vec<(GroupElement, LocalPolytope)>, tol: f64) {
    loop {
        let mut merged = false;
        let n = cells.len();
        'outer: for i in 0..n {
            let bi = bbox(&cells[i].1);
            for j in i + 1..n {
                if !cells[i].0.sub(&cells[j].0).map(|d| d.is_zero()).unwrap_or(false) {
                    continue;
                }
                if !boxes_touch(&bi, &bbox(&cells[j].1), tol) {
                    continue;
                }
                if let Some(h) = convex_union(&cells[i].1, &cells[j].1, tol) {
                    cells[i].1 = h;
                    cells.remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return;
        }
    }
}
