use serde::Serialize;

use crate::chains::PolyChain;
use crate::error::{Error, Result};
use crate::flatnorm::complex::{build_complex, SimplicialComplex};
use crate::flatnorm::embed::{common_group, embed_chain, ComplexChain};
use crate::foundation::{CoefficientGroup, GroupElement};
use crate::linalg::Vector;
use crate::lp::{solve_integer, LinearProgram, Relation};
use crate::mass::mass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// fillings with real coefficients
    Real,
    /// fillings with coefficients in the chain's group
    Integer,
}

impl std::str::FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(SolveMode::Real),
            "int" | "integer" => Ok(SolveMode::Integer),
            other => Err(Error::Parse(format!("unknown mode {other:?} (expected real or int)"))),
        }
    }
}

pub const INTEGER_NODE_LIMIT: usize = 20_000;
pub const MODULAR_MAX_SIMPLICES: usize = 20;
pub const MODULAR_MAX_M: u32 = 5;
const MODULAR_NODE_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone)]
pub struct FlatNormCertificate {
    pub value: f64,
    /// `(k+1)`-chain `Q`
    pub filling: ComplexChain,
    /// `S = P - ∂Q`
    pub residual: ComplexChain,
    pub filling_mass: f64,
    pub residual_mass: f64,
    pub mode: SolveMode,
    pub optimal: bool,
    /// integer mode: the LP relaxation was already integral
    pub relaxation_integral: bool,
    pub nodes: usize,
}

impl FlatNormCertificate {
    /// Recomputes `M(Q) + M(P - ∂Q)` from polyhedral chains.
    pub fn recompute(&self, complex: &SimplicialComplex, p: &ComplexChain) -> Result<f64> {
        let q = self.filling.to_poly_chain(complex)?;
        let pc = to_group(p, self.filling.group).to_poly_chain(complex)?;
        let s = if q.k() > complex.dim() || self.filling.coeffs.is_empty() {
            pc
        } else {
            pc.sub(&q.boundary()?)?
        };
        Ok(mass(&q)? + mass(&s)?)
    }
}

fn to_group(c: &ComplexChain, group: CoefficientGroup) -> ComplexChain {
    if c.group == group {
        return c.clone();
    }
    ComplexChain {
        k: c.k,
        group,
        coeffs: c
            .coeffs
            .iter()
            .map(|g| match group {
                CoefficientGroup::Reals => GroupElement::Real(g.as_f64()),
                _ => *g,
            })
            .collect(),
    }
}

fn from_values(group: CoefficientGroup, k: usize, values: &[f64]) -> ComplexChain {
    let coeffs = values
        .iter()
        .map(|&x| match group {
            CoefficientGroup::Reals => GroupElement::Real(if x.abs() < 1e-10 { 0.0 } else { x }),
            g => g.from_int(x.round() as i64),
        })
        .collect();
    ComplexChain { k, group, coeffs }
}

fn finish(
    complex: &SimplicialComplex,
    p: &ComplexChain,
    filling: ComplexChain,
    mode: SolveMode,
    optimal: bool,
    relaxation_integral: bool,
    nodes: usize,
) -> Result<FlatNormCertificate> {
    let pg = to_group(p, filling.group);
    let residual = if filling.coeffs.is_empty() {
        pg
    } else {
        pg.sub(&filling.boundary(complex)?)?
    };
    let filling_mass = if filling.coeffs.is_empty() { 0.0 } else { filling.mass(complex) };
    let residual_mass = residual.mass(complex);
    Ok(FlatNormCertificate {
        value: filling_mass + residual_mass,
        filling,
        residual,
        filling_mass,
        residual_mass,
        mode,
        optimal,
        relaxation_integral,
        nodes,
    })
}

/// Minimizes `M(Q) + M(P - ∂Q)` over fillings `Q` on the complex.
pub fn flat_norm_upper(complex: &SimplicialComplex, p: &ComplexChain, mode: SolveMode) -> Result<FlatNormCertificate> {
    let k = p.k;
    if p.coeffs.len() != complex.count(k) {
        return Err(Error::ChainMismatch("chain does not belong to this complex".into()));
    }
    let n_q = complex.count(k + 1);
    let out_group = match (mode, p.group) {
        (SolveMode::Real, _) => CoefficientGroup::Reals,
        (SolveMode::Integer, CoefficientGroup::Reals) => {
            return Err(Error::Unsupported("integer mode needs integer or modular coefficients".into()))
        }
        (SolveMode::Integer, g) => g,
    };
    if p.is_zero() || n_q == 0 {
        let filling = ComplexChain {
            k: k + 1,
            group: out_group,
            coeffs: vec![out_group.zero(); n_q],
        };
        return finish(complex, p, filling, mode, true, true, 0);
    }
    if let CoefficientGroup::IntegersMod(m) = out_group {
        return modular(complex, p, m);
    }
    let n_s = complex.count(k);
    let mut objective = Vec::with_capacity(2 * (n_q + n_s));
    objective.extend(complex.masses[k + 1].iter());
    objective.extend(complex.masses[k + 1].iter());
    objective.extend(complex.masses[k].iter());
    objective.extend(complex.masses[k].iter());
    let mut lp = LinearProgram::new(2 * (n_q + n_s), objective);
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n_s).map(|i| vec![(2 * n_q + i, 1.0), (2 * n_q + n_s + i, -1.0)]).collect();
    for (j, col) in complex.boundary[k + 1].columns.iter().enumerate() {
        for &(r, s) in col {
            rows[r].push((j, s as f64));
            rows[r].push((n_q + j, -(s as f64)));
        }
    }
    for (row, g) in rows.into_iter().zip(&p.coeffs) {
        lp.add(row, Relation::Eq, g.as_f64());
    }
    let (x, relaxation_integral, nodes) = match mode {
        SolveMode::Real => (lp.solve()?.x, false, 1),
        SolveMode::Integer => {
            let vars: Vec<usize> = (0..lp.n_vars).collect();
            let sol = solve_integer(&lp, &vars, INTEGER_NODE_LIMIT)?;
            (sol.solution.x, sol.relaxation_integral, sol.nodes)
        }
    };
    let q: Vec<f64> = (0..n_q).map(|j| x[j] - x[n_q + j]).collect();
    let filling = from_values(out_group, k + 1, &q);
    finish(complex, p, filling, mode, true, relaxation_integral, nodes)
}

/// Depth-first branch and bound over `(Z/m)^{n_q}` fillings.
fn modular(complex: &SimplicialComplex, p: &ComplexChain, m: u32) -> Result<FlatNormCertificate> {
    let k = p.k;
    let n_q = complex.count(k + 1);
    if n_q > MODULAR_MAX_SIMPLICES || m > MODULAR_MAX_M {
        return Err(Error::Unsupported(format!(
            "Z/{m} flat norms are limited to {MODULAR_MAX_SIMPLICES} ({})-simplices and m <= {MODULAR_MAX_M}; this complex has {n_q}",
            k + 1
        )));
    }
    let n_s = complex.count(k);
    let group = CoefficientGroup::IntegersMod(m);
    let res = |x: i64| x.rem_euclid(m as i64);
    let gnorm = |x: i64| {
        let r = res(x);
        r.min(m as i64 - r) as f64
    };
    // rows settle once their last incident column is assigned
    let mut settle: Vec<Vec<usize>> = vec![Vec::new(); n_q + 1];
    let mut last = vec![None::<usize>; n_s];
    for (j, col) in complex.boundary[k + 1].columns.iter().enumerate() {
        for &(r, _) in col {
            last[r] = Some(j);
        }
    }
    for (r, l) in last.iter().enumerate() {
        settle[l.map_or(0, |j| j + 1)].push(r);
    }
    let start: Vec<i64> = p.coeffs.iter().map(|g| g.as_f64() as i64).collect();
    let masses_q = &complex.masses[k + 1];
    let masses_s = &complex.masses[k];
    let base: f64 = settle[0].iter().map(|&r| masses_s[r] * gnorm(start[r])).sum();

    struct Search<'a> {
        cols: &'a [Vec<(usize, i8)>],
        settle: &'a [Vec<usize>],
        masses_q: &'a [f64],
        masses_s: &'a [f64],
        m: i64,
        residual: Vec<i64>,
        assign: Vec<i64>,
        best: f64,
        best_assign: Vec<i64>,
        nodes: usize,
    }
    impl Search<'_> {
        fn norm(&self, x: i64) -> f64 {
            let r = x.rem_euclid(self.m);
            r.min(self.m - r) as f64
        }
        fn go(&mut self, j: usize, cost: f64) -> bool {
            self.nodes += 1;
            if self.nodes > MODULAR_NODE_LIMIT {
                return false;
            }
            if cost >= self.best - 1e-12 {
                return true;
            }
            if j == self.cols.len() {
                self.best = cost;
                self.best_assign = self.assign.clone();
                return true;
            }
            for v in 0..self.m {
                for &(r, s) in &self.cols[j] {
                    self.residual[r] -= s as i64 * v;
                }
                self.assign[j] = v;
                let mut c = cost + self.masses_q[j] * self.norm(v);
                for &r in &self.settle[j + 1] {
                    c += self.masses_s[r] * self.norm(self.residual[r]);
                }
                let ok = self.go(j + 1, c);
                for &(r, s) in &self.cols[j] {
                    self.residual[r] += s as i64 * v;
                }
                if !ok {
                    return false;
                }
            }
            self.assign[j] = 0;
            true
        }
    }
    let zero_cost = p.coeffs.iter().zip(masses_s).map(|(g, w)| g.norm() * w).sum::<f64>();
    let mut search = Search {
        cols: &complex.boundary[k + 1].columns,
        settle: &settle,
        masses_q,
        masses_s,
        m: m as i64,
        residual: start,
        assign: vec![0; n_q],
        best: zero_cost + 1e-9,
        best_assign: vec![0; n_q],
        nodes: 0,
    };
    let complete = search.go(0, base);
    if !complete {
        return Err(Error::Solver(format!("Z/{m} search exceeded {MODULAR_NODE_LIMIT} nodes")));
    }
    let filling = ComplexChain {
        k: k + 1,
        group,
        coeffs: search.best_assign.iter().map(|&v| group.from_int(v)).collect(),
    };
    finish(complex, p, filling, SolveMode::Integer, true, false, search.nodes)
}

/// Flat distance on a complex; `discrepancy` bounds how far the embedded
/// chains moved, so `F(a - b) <= value + discrepancy`.
#[derive(Debug, Clone)]
pub struct FlatDistance {
    pub certificate: FlatNormCertificate,
    pub discrepancy: f64,
    pub difference: ComplexChain,
}

pub fn flat_distance(a: &PolyChain, b: &PolyChain, complex: &SimplicialComplex, mode: SolveMode) -> Result<FlatDistance> {
    if a.k() != b.k() {
        return Err(Error::ChainMismatch(format!("k = {} vs k = {}", a.k(), b.k())));
    }
    common_group(a.group(), b.group())?;
    let (ea, ra) = embed_chain(a, complex)?;
    let (eb, rb) = embed_chain(b, complex)?;
    let difference = ea.sub(&eb)?;
    let certificate = flat_norm_upper(complex, &difference, mode)?;
    Ok(FlatDistance {
        certificate,
        discrepancy: ra.discrepancy + rb.discrepancy,
        difference,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepPoint {
    pub resolution: usize,
    pub value: f64,
    pub discrepancy: f64,
}

pub fn refine_sweep(
    a: &PolyChain,
    b: &PolyChain,
    lo: &Vector,
    hi: &Vector,
    resolutions: &[usize],
    mode: SolveMode,
) -> Result<Vec<SweepPoint>> {
    resolutions
        .iter()
        .map(|&n| {
            let complex = build_complex(a.space(), lo, hi, n)?;
            let d = flat_distance(a, b, &complex, mode)?;
            Ok(SweepPoint {
                resolution: n,
                value: d.certificate.value,
                discrepancy: d.discrepancy,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{OrientedPolytope, SimpleChain};
    use crate::foundation::NormedSpace;
    use crate::linalg::vector;

    fn square_boundary(sp: &NormedSpace, group: CoefficientGroup, g: GroupElement) -> PolyChain {
        let sq = PolyChain::new(
            sp.clone(),
            group,
            2,
            vec![SimpleChain {
                coeff: g,
                poly: OrientedPolytope::new(
                    vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[1.0, 1.0]), vector(&[0.0, 1.0])],
                    vec![vector(&[1.0, 0.0]), vector(&[0.0, 1.0])],
                )
                .unwrap(),
            }],
        )
        .unwrap();
        sq.boundary().unwrap()
    }

    #[test]
    fn square_boundary_filled() {
        let sp = NormedSpace::euclidean(2);
        let c = build_complex(&sp, &vector(&[0.0, 0.0]), &vector(&[1.0, 1.0]), 1).unwrap();
        let b = square_boundary(&sp, CoefficientGroup::Integers, GroupElement::Int(1));
        let (p, r) = embed_chain(&b, &c).unwrap();
        assert!(r.exact);
        for mode in [SolveMode::Real, SolveMode::Integer] {
            let cert = flat_norm_upper(&c, &p, mode).unwrap();
            assert!((cert.value - 1.0).abs() < 1e-9, "{mode:?} {}", cert.value);
            assert!((cert.filling_mass - 1.0).abs() < 1e-9);
            assert!((cert.recompute(&c, &p).unwrap() - cert.value).abs() < 1e-9);
        }
        let zero = ComplexChain::zero(&c, CoefficientGroup::Integers, 1);
        assert_eq!(flat_norm_upper(&c, &zero, SolveMode::Real).unwrap().value, 0.0);
    }

    #[test]
    fn point_pair_on_interval() {
        let sp = NormedSpace::euclidean(1);
        let c = build_complex(&sp, &vector(&[0.0]), &vector(&[1.0]), 1).unwrap();
        let pts = PolyChain::simplex(
            &sp,
            CoefficientGroup::Integers,
            GroupElement::Int(1),
            &[vector(&[0.0]), vector(&[1.0])],
        )
        .unwrap()
        .boundary()
        .unwrap();
        let (p, _) = embed_chain(&pts, &c).unwrap();
        let cert = flat_norm_upper(&c, &p, SolveMode::Integer).unwrap();
        assert!((cert.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modular_groups() {
        let sp = NormedSpace::euclidean(2);
        let c = build_complex(&sp, &vector(&[0.0, 0.0]), &vector(&[1.0, 1.0]), 1).unwrap();
        let g = CoefficientGroup::IntegersMod(3);
        let b = square_boundary(&sp, g, g.from_int(1));
        let (p, _) = embed_chain(&b, &c).unwrap();
        let cert = flat_norm_upper(&c, &p, SolveMode::Integer).unwrap();
        assert!((cert.value - 1.0).abs() < 1e-9);
        let big = build_complex(&sp, &vector(&[0.0, 0.0]), &vector(&[1.0, 1.0]), 4).unwrap();
        let (p, _) = embed_chain(&b, &big).unwrap();
        assert!(matches!(flat_norm_upper(&big, &p, SolveMode::Integer), Err(Error::Unsupported(_))));
    }

    #[test]
    fn distance_is_symmetric_and_zero_on_equal() {
        let sp = NormedSpace::euclidean(2);
        let c = build_complex(&sp, &vector(&[0.0, 0.0]), &vector(&[1.0, 1.0]), 4).unwrap();
        let a = PolyChain::simplex(
            &sp,
            CoefficientGroup::Integers,
            GroupElement::Int(1),
            &[vector(&[0.0, 0.0]), vector(&[1.0, 0.5])],
        )
        .unwrap();
        let b = PolyChain::simplex(
            &sp,
            CoefficientGroup::Integers,
            GroupElement::Int(1),
            &[vector(&[0.0, 0.25]), vector(&[1.0, 0.5])],
        )
        .unwrap();
        assert_eq!(flat_distance(&a, &a, &c, SolveMode::Real).unwrap().certificate.value, 0.0);
        let ab = flat_distance(&a, &b, &c, SolveMode::Real).unwrap().certificate.value;
        let ba = flat_distance(&b, &a, &c, SolveMode::Real).unwrap().certificate.value;
        assert!((ab - ba).abs() < 1e-9);
        assert!(ab > 0.0);
    }

    fn staircase(sp: &NormedSpace, n: usize) -> PolyChain {
        let h = 1.0 / n as f64;
        let mut out = PolyChain::zero(sp.clone(), CoefficientGroup::Integers, 1);
        for i in 0..n {
            let x = i as f64 * h;
            for (a, b) in [([x, x], [x + h, x]), ([x + h, x], [x + h, x + h])] {
                let s = PolyChain::simplex(sp, CoefficientGroup::Integers, GroupElement::Int(1), &[vector(&a), vector(&b)]).unwrap();
                out = out.add(&s).unwrap();
            }
        }
        out
    }

    #[test]
    fn staircase_versus_diagonal() {
        let sp = NormedSpace::euclidean(2);
        let diag = PolyChain::simplex(
            &sp,
            CoefficientGroup::Integers,
            GroupElement::Int(1),
            &[vector(&[0.0, 0.0]), vector(&[1.0, 1.0])],
        )
        .unwrap();
        let (lo, hi) = (vector(&[0.0, 0.0]), vector(&[1.0, 1.0]));
        for n in [1, 2, 4] {
            let c = build_complex(&sp, &lo, &hi, n).unwrap();
            let d = flat_distance(&staircase(&sp, n), &diag, &c, SolveMode::Integer).unwrap();
            assert_eq!(d.discrepancy, 0.0);
            assert!(
                d.certificate.value <= 1.0 / (2.0 * n as f64) + 1e-9,
                "n={n} {}",
                d.certificate.value
            );
        }
        let sweep = refine_sweep(&staircase(&sp, 2), &diag, &lo, &hi, &[2, 4, 8], SolveMode::Real).unwrap();
        for w in sweep.windows(2) {
            assert!(w[1].value <= w[0].value + 1e-6 + w[0].discrepancy + w[1].discrepancy);
        }
    }
}
