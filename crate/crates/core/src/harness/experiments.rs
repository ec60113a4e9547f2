use std::collections::{BTreeMap, HashSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chains::PolyChain;
use crate::cones::{cone, cone_mass_ratio, cone_quantize, CoeffNet, Quantization};
use crate::error::{Error, Result};
use crate::flatnorm::{
    adapted_complex, build_complex, embed_chain, flat_distance, flat_norm_upper, ComplexChain, SimplicialComplex, SolveMode,
};
use crate::foundation::{CoefficientGroup, NormedSpace};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::generate::{generate_random_chain, ChainBudget};
use crate::harness::report::{chain_digest, text_digest, Environment, ExperimentReport, ReportRow, SuiteCheck};
use crate::linalg::{self, Vector};
use crate::mass::{eilenberg_ratio, mass};
use crate::slicing::LipschitzFn;

/// Everything an experiment needs, resolved once from the config.
struct Setup {
    cfg: ExperimentConfig,
    space: NormedSpace,
    group: CoefficientGroup,
    lo: Vector,
    hi: Vector,
    mode: SolveMode,
}

impl Setup {
    fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(index as u64);
        rng
    }

    fn grid_step(&self) -> f64 {
        (self.hi[0] - self.lo[0]) / self.cfg.params.resolution as f64
    }

    fn budget(&self, lo: &Vector, hi: &Vector) -> ChainBudget {
        ChainBudget {
            max_summands: self.cfg.params.max_summands,
            lo: lo.iter().copied().collect(),
            hi: hi.iter().copied().collect(),
            max_n: self.cfg.params.max_n,
            lattice: self.cfg.params.lattice.then(|| self.grid_step()),
        }
    }

    fn chain(&self, rng: &mut ChaCha8Rng, lo: &Vector, hi: &Vector) -> Result<PolyChain> {
        generate_random_chain(&self.space, self.group, self.cfg.k, rng.gen(), &self.budget(lo, hi))
    }

    fn point(&self, rng: &mut ChaCha8Rng) -> Vector {
        Vector::from_iterator(self.lo.len(), (0..self.lo.len()).map(|i| rng.gen_range(self.lo[i]..=self.hi[i])))
    }

    fn complex(&self) -> Result<SimplicialComplex> {
        build_complex(&self.space, &self.lo, &self.hi, self.cfg.params.resolution)
    }

    fn replicate_rows<F>(&self, f: F) -> Vec<ReportRow>
    where
        F: Fn(usize, &mut ChaCha8Rng, &mut ReportRow) -> Result<()> + Sync,
    {
        let n = self.cfg.instances;
        let reps = self.cfg.params.replicates.max(1);
        (0..n * reps)
            .into_par_iter()
            .map(|index| {
                let replicate = index / n.max(1);
                let mut rng = self.rng(index);
                let mut row = ReportRow::new(index, replicate, String::new());
                if let Err(e) = f(index, &mut rng, &mut row) {
                    let digest = row.digest.clone();
                    row = ReportRow::aborted(index, replicate, digest, &e);
                }
                row
            })
            .collect()
    }
}

fn require_dim(s: &Setup, allowed: &[usize]) -> Result<()> {
    if allowed.contains(&s.space.dim()) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{} needs ambient dimension in {allowed:?}",
            s.cfg.experiment.name()
        )))
    }
}

fn require_k(s: &Setup, allowed: &[usize]) -> Result<()> {
    if allowed.contains(&s.cfg.k) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{} needs k in {allowed:?}", s.cfg.experiment.name())))
    }
}

/// Max per replicate of `key`, skipping rows without it.
fn per_replicate_max(rows: &[ReportRow], key: &str, replicates: usize) -> Vec<f64> {
    (0..replicates)
        .map(|r| {
            rows.iter()
                .filter(|row| row.replicate == r)
                .filter_map(|row| row.get(key))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Constants must be finite and within `tol` relative spread of each other.
pub fn stability_check(name: &str, values: &[f64], tol: f64) -> SuiteCheck {
    let finite = values.iter().all(|v| v.is_finite());
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if max > 0.0 { (max - min) / max } else { 0.0 };
    SuiteCheck {
        name: format!("{name} stable across replicates"),
        pass: finite && spread <= tol,
        detail: format!("values {values:?}, relative spread {spread:.4} (allowed {tol})"),
    }
}

fn record_constant(aggregates: &mut BTreeMap<String, f64>, checks: &mut Vec<SuiteCheck>, name: &str, values: &[f64], tol: f64) {
    for (r, v) in values.iter().enumerate() {
        aggregates.insert(format!("{name}_r{r}"), *v);
    }
    aggregates.insert(name.to_string(), values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    checks.push(stability_check(name, values, tol));
}

/// `n`-step staircase from `(0,0)` to `(1,1)`.
pub fn staircase(space: &NormedSpace, group: CoefficientGroup, n: usize) -> Result<PolyChain> {
    let h = 1.0 / n as f64;
    let one = group.from_int(1);
    let mut out = PolyChain::zero(space.clone(), group, 1);
    for i in 0..n {
        let x = i as f64 * h;
        for (a, b) in [([x, x], [x + h, x]), ([x + h, x], [x + h, x + h])] {
            out = out.add(&PolyChain::simplex(space, group, one, &[linalg::vector(&a), linalg::vector(&b)])?)?;
        }
    }
    Ok(out)
}

/// Lattice of centers covering the box at radius `delta`: per axis the
/// points `lo + s c` plus `hi`, so neighbours are at most `s` apart. With
/// `align`, `s` is a multiple of the complex step when possible.
pub fn lattice_centers(space: &NormedSpace, lo: &Vector, hi: &Vector, delta: f64, align: Option<f64>) -> Vec<Vector> {
    let d = space.dim();
    // largest norm of a (±1, ..., ±1) half-cell diagonal
    let corner = (0..1usize << d)
        .map(|m| space.norm(&Vector::from_iterator(d, (0..d).map(|i| if m >> i & 1 == 1 { 1.0 } else { -1.0 }))))
        .fold(0.0, f64::max);
    let mut s = 2.0 * delta / corner;
    if let Some(h) = align {
        let units = (s / h + 1e-9).floor();
        if units >= 1.0 {
            s = h * units;
        }
    }
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let steps = ((hi[i] - lo[i]) / s + 1e-9).floor() as usize;
            let mut xs: Vec<f64> = (0..=steps).map(|c| lo[i] + s * c as f64).collect();
            if hi[i] - xs[steps] > 1e-9 * s {
                xs.push(hi[i]);
            }
            xs
        })
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    (0..total)
        .map(|mut id| {
            Vector::from_iterator(
                d,
                (0..d).map(|i| {
                    let c = id % axes[i].len();
                    id /= axes[i].len();
                    axes[i][c]
                }),
            )
        })
        .collect()
}

fn coeff_net(group: CoefficientGroup, eps: f64, centers: usize) -> CoeffNet {
    match group {
        CoefficientGroup::Reals => CoeffNet::for_epsilon(eps, centers),
        _ => CoeffNet::Exact,
    }
}

/// rows, aggregates and suite checks of one experiment
type Suite = (Vec<ReportRow>, BTreeMap<String, f64>, Vec<SuiteCheck>);

fn lsc(s: &Setup) -> Result<Suite> {
    require_dim(s, &[2])?;
    require_k(s, &[1])?;
    let tol = &s.cfg.tolerances;
    let diag = PolyChain::simplex(
        &s.space,
        s.group,
        s.group.from_int(1),
        &[linalg::vector(&[0.0, 0.0]), linalg::vector(&[1.0, 1.0])],
    )?;
    let square = PolyChain::from_raw(
        s.space.clone(),
        s.group,
        2,
        vec![(
            s.group.from_int(1),
            vec![
                linalg::vector(&[0.0, 0.0]),
                linalg::vector(&[1.0, 0.0]),
                linalg::vector(&[1.0, 1.0]),
                linalg::vector(&[0.0, 1.0]),
            ],
            vec![linalg::vector(&[1.0, 0.0]), linalg::vector(&[0.0, 1.0])],
        )],
    )?;
    let area_mass = mass(&square)?;
    let diag_mass = mass(&diag)?;
    let (lo, hi) = (linalg::vector(&[0.0, 0.0]), linalg::vector(&[1.0, 1.0]));
    let rows: Vec<ReportRow> = (0..s.cfg.instances)
        .into_par_iter()
        .map(|i| {
            let n = i + 1;
            let run = || -> Result<ReportRow> {
                let stair = staircase(&s.space, s.group, n)?;
                let mut row = ReportRow::new(i, 0, chain_digest(&stair));
                let complex = build_complex(&s.space, &lo, &hi, n)?;
                let d = flat_distance(&stair, &diag, &complex, s.mode)?;
                let stair_mass = mass(&stair)?;
                let bound = area_mass / (2.0 * n as f64);
                row.set("steps", n as f64);
                row.set("staircase_mass", stair_mass);
                row.set("diagonal_mass", diag_mass);
                row.set("flat_distance", d.certificate.value);
                row.set("flat_bound", bound);
                row.set("discrepancy", d.discrepancy);
                row.require(
                    d.certificate.value,
                    bound + d.discrepancy + tol.flat,
                    "F(S_n - D) <= M(unit square)/(2n)",
                );
                row.require(diag_mass, stair_mass + tol.mass, "M(D) <= M(S_n)");
                Ok(row)
            };
            run().unwrap_or_else(|e| ReportRow::aborted(i, 0, String::new(), &e))
        })
        .collect();
    let mut aggregates = BTreeMap::new();
    let mut checks = Vec::new();
    let min_stair = rows.iter().filter_map(|r| r.get("staircase_mass")).fold(f64::INFINITY, f64::min);
    aggregates.insert("lsc_gap".into(), min_stair - diag_mass);
    aggregates.insert("diagonal_mass".into(), diag_mass);
    let values: Vec<f64> = rows.iter().filter_map(|r| r.get("flat_distance")).collect();
    if let Some(last) = values.last() {
        aggregates.insert("final_flat_distance".into(), *last);
    }
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + tol.flat);
    checks.push(SuiteCheck {
        name: "flat distances nonincreasing in n".into(),
        pass: monotone,
        detail: format!("{values:?}"),
    });
    checks.push(SuiteCheck {
        name: "M(D) <= liminf M(S_n)".into(),
        pass: diag_mass <= min_stair + tol.mass,
        detail: format!("M(D) = {diag_mass}, min M(S_n) = {min_stair}"),
    });
    Ok((rows, aggregates, checks))
}

fn eilenberg(s: &Setup) -> Result<Suite> {
    if s.cfg.k == 0 {
        return Err(Error::Unsupported("eilenberg needs k >= 1".into()));
    }
    let tol = &s.cfg.tolerances;
    let stage = s.cfg.params.stage;
    let rows = s.replicate_rows(|_, rng, row| {
        let chain = s.chain(rng, &s.lo, &s.hi)?;
        row.digest = chain_digest(&chain);
        let d = s.space.dim();
        let raw = Vector::from_iterator(d, (0..d).map(|_| rng.gen_range(-1.0..1.0)));
        let covector = &raw / s.space.dual_norm(&raw);
        let point = s.point(rng);
        let lin = eilenberg_ratio(&chain, &LipschitzFn::Linear { covector, offset: 0.0 }, stage)?;
        let dist = eilenberg_ratio(&chain, &LipschitzFn::DistanceToPoint(point), stage)?;
        row.set("mass", lin.mass);
        if let Some(r) = lin.ratio {
            row.set("linear_ratio", r);
            row.require(r, 1.0 + tol.mass, "linear unit-dual f: integral / (Lip f M(P)) <= 1");
        }
        if let Some(r) = dist.ratio {
            row.set("distance_ratio", r);
            row.require(r, f64::MAX, "distance ratio finite");
        }
        Ok(())
    });
    let reps = s.cfg.params.replicates.max(1);
    let mut aggregates = BTreeMap::new();
    let mut checks = Vec::new();
    let lin = rows.iter().filter_map(|r| r.get("linear_ratio")).fold(0.0, f64::max);
    aggregates.insert("max_linear_ratio".into(), lin);
    let c = per_replicate_max(&rows, "distance_ratio", reps);
    record_constant(&mut aggregates, &mut checks, "c_eilenberg", &c, tol.stability);
    Ok((rows, aggregates, checks))
}

fn cone_bounds(s: &Setup) -> Result<Suite> {
    if s.cfg.k >= s.space.dim() {
        return Err(Error::Unsupported("cone_bounds needs k < dim".into()));
    }
    let tol = &s.cfg.tolerances;
    let d = s.space.dim();
    let complex = if s.cfg.k == 0 { Some(s.complex()?) } else { None };
    let rows = s.replicate_rows(|_, rng, row| {
        let p1 = s.chain(rng, &s.lo, &s.hi)?;
        row.digest = chain_digest(&p1);
        let z = s.point(rng);
        if p1.is_zero() {
            return Ok(());
        }
        let ratio = cone_mass_ratio(&z, &p1)?;
        row.set("cone_mass_ratio", ratio);
        row.require(ratio, f64::MAX, "cone mass ratio finite");
        if let Some(complex) = &complex {
            let p2 = s.chain(rng, &s.lo, &s.hi)?;
            let fp = flat_distance(&p1, &p2, complex, s.mode)?;
            let fc = flat_distance(&cone(&z, &p1)?, &cone(&z, &p2)?, complex, s.mode)?;
            row.set("flat_p", fp.certificate.value);
            row.set("flat_cone", fc.certificate.value);
            row.set("discrepancy", fp.discrepancy + fc.discrepancy);
            if fp.certificate.value > tol.flat {
                let kappa = fc.certificate.value / ((d + 1) as f64 * fp.certificate.value);
                row.set("kappa", kappa);
                row.require(kappa, f64::MAX, "cone flat-continuity factor finite");
            }
        }
        Ok(())
    });
    let reps = s.cfg.params.replicates.max(1);
    let mut aggregates = BTreeMap::new();
    let mut checks = Vec::new();
    let cm = per_replicate_max(&rows, "cone_mass_ratio", reps);
    record_constant(&mut aggregates, &mut checks, "c_m", &cm, tol.stability);
    if complex.is_some() {
        let kappa = per_replicate_max(&rows, "kappa", reps);
        record_constant(&mut aggregates, &mut checks, "kappa", &kappa, tol.stability);
    }
    Ok((rows, aggregates, checks))
}

fn separation(space: &NormedSpace, a: &PolyChain, b: &PolyChain) -> f64 {
    let mut best = f64::INFINITY;
    for x in a.summands() {
        for y in b.summands() {
            best = best.min(space.hull_distance(x.poly.vertices(), y.poly.vertices()));
        }
    }
    best
}

fn diffusion(s: &Setup) -> Result<Suite> {
    require_k(s, &[0, 1])?;
    let tol = &s.cfg.tolerances;
    let d = s.space.dim();
    let complex = s.complex()?;
    let width = (&s.hi - &s.lo) / 3.0;
    let sub_hi = &s.lo + &width;
    let gaps: Vec<f64> = if s.cfg.params.lattice {
        let h = s.grid_step();
        vec![h, 2.0 * h, 4.0 * h]
    } else {
        vec![width[0] / 8.0, width[0] / 4.0, width[0] / 2.0]
    };
    let rows = s.replicate_rows(|index, rng, row| {
        let p1 = s.chain(rng, &s.lo, &sub_hi)?;
        row.digest = chain_digest(&p1);
        if p1.is_zero() {
            return Ok(());
        }
        let xs = p1.summands().iter().flat_map(|x| x.poly.vertices().iter().map(|v| v[0]));
        let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let gap = gaps[index % gaps.len()];
        let shift = linalg::unit(d, 0) * (xmax - xmin + gap);
        let p2 = p1.affine_pushforward(&DMatrix::identity(d, d), &shift)?;
        let r = separation(&s.space, &p1, &p2);
        let zero = PolyChain::zero(s.space.clone(), s.group, s.cfg.k);
        let f1 = flat_distance(&p1, &zero, &complex, s.mode)?;
        let f12 = flat_distance(&p1, &p2, &complex, s.mode)?;
        let (f1v, f12v) = (f1.certificate.value, f12.certificate.value);
        row.set("separation", r);
        row.set("flat_p1", f1v);
        row.set("flat_difference", f12v);
        row.set("discrepancy", f1.discrepancy + 2.0 * f12.discrepancy);
        if f12v > tol.flat {
            // smallest c with F(P1 - P2) >= r / (r + c) F(P1)
            let c = (r * (f1v - f12v) / f12v).max(0.0);
            row.set("c_row", c);
            row.require(c, f64::MAX, "diffusion constant finite");
        }
        Ok(())
    });
    let reps = s.cfg.params.replicates.max(1);
    let mut aggregates = BTreeMap::new();
    let mut checks = Vec::new();
    let c = per_replicate_max(&rows, "c_row", reps);
    record_constant(&mut aggregates, &mut checks, "c_diffusion", &c, tol.stability);
    Ok((rows, aggregates, checks))
}

fn certificate_mass(q: &Quantization) -> Result<f64> {
    Ok(mass(&q.filling)? + mass(&q.residual)?)
}

fn quantize(s: &Setup) -> Result<Suite> {
    let tol = &s.cfg.tolerances;
    let delta = s.cfg.params.delta;
    let eps = *s
        .cfg
        .params
        .epsilons
        .first()
        .ok_or_else(|| Error::Parse("quantize needs an epsilon".into()))?;
    let complex = s.complex()?;
    let align = s.cfg.params.lattice.then(|| s.grid_step());
    let centers = lattice_centers(&s.space, &s.lo, &s.hi, delta, align);
    let net = coeff_net(s.group, eps, centers.len());
    let k = s.cfg.k;
    let rows: Vec<ReportRow> = (0..s.cfg.instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = s.rng(i);
            let mut row = ReportRow::new(i, 0, String::new());
            let mut run = || -> Result<()> {
                let p = s.chain(&mut rng, &s.lo, &s.hi)?;
                row.digest = chain_digest(&p);
                let q = cone_quantize(&p, &centers, delta, net)?;
                let m = mass(&p)?;
                let cert = certificate_mass(&q)?;
                // in the plane, measure on a triangulation containing P and Q
                let adapted = match s.space.dim() {
                    2 => Some(adapted_complex(&s.space, &s.lo, &s.hi, s.cfg.params.resolution, &[&p, &q.chain])?),
                    _ => None,
                };
                let d = flat_distance(&p, &q.chain, adapted.as_ref().unwrap_or(&complex), s.mode)?;
                row.set("mass", m);
                row.set("budget", q.budget.total);
                row.set("certificate_mass", cert);
                row.set("flat_distance", d.certificate.value);
                row.set("discrepancy", d.discrepancy);
                row.require(cert, q.budget.total + tol.mass, "M(filling) + M(residual) <= budget");
                row.require(
                    d.certificate.value,
                    q.budget.total + d.discrepancy + tol.flat,
                    "F(P - Q) <= budget + embedding discrepancy",
                );
                if k == 0 {
                    row.require(q.budget.total, m * delta + eps / 4.0 + tol.mass, "budget <= M(P) delta + eps/4");
                }
                Ok(())
            };
            if let Err(e) = run() {
                let digest = row.digest.clone();
                row = ReportRow::aborted(i, 0, digest, &e);
            }
            row
        })
        .collect();
    let mut aggregates = BTreeMap::new();
    aggregates.insert("centers".into(), centers.len() as f64);
    aggregates.insert("delta".into(), delta);
    let ratio = rows
        .iter()
        .filter_map(|r| Some(r.get("flat_distance")? / r.get("budget")?.max(1e-300)))
        .fold(0.0, f64::max);
    aggregates.insert("max_flat_over_budget".into(), ratio);
    Ok((rows, aggregates, Vec::new()))
}

fn ln_choose(n: f64, j: usize) -> f64 {
    (0..j).map(|i| ((n - i as f64) / (i as f64 + 1.0)).ln()).sum()
}

/// log10 of the number of grid 0-chains over `centers` with coefficient mass
/// at most `q`.
pub fn zero_chain_grid_log10(group: CoefficientGroup, net: CoeffNet, centers: usize, q: f64) -> f64 {
    let c = centers as f64;
    match (group, net) {
        (CoefficientGroup::Integers, _) => {
            let qi = q.floor().max(0.0) as usize;
            // nonzero entries j: positions, signs, and compositions of at most q
            let terms: Vec<f64> = (0..=qi.min(centers))
                .map(|j| ln_choose(c, j) + j as f64 * 2f64.ln() + ln_choose(qi as f64, j))
                .collect();
            let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()) / 10f64.ln()
        }
        (CoefficientGroup::IntegersMod(m), _) => c * (m as f64).log10(),
        (CoefficientGroup::Reals, CoeffNet::Grid(step)) => c * (2.0 * (q / step).floor() + 1.0).log10(),
        (CoefficientGroup::Reals, CoeffNet::Exact) => f64::INFINITY,
    }
}

fn greedy_net(complex: &SimplicialComplex, chains: &[ComplexChain], eps: f64, mode: SolveMode) -> Result<Vec<usize>> {
    let mut net: Vec<usize> = Vec::new();
    for (i, c) in chains.iter().enumerate() {
        let close = net
            .par_iter()
            .map(|&j| -> Result<bool> {
                let diff = c.sub(&chains[j])?;
                // F <= M spares the solve for near-identical chains
                Ok(diff.mass(complex) <= eps || flat_norm_upper(complex, &diff, mode)?.value <= eps)
            })
            .find_any(|r| !matches!(r, Ok(false)))
            .transpose()?;
        if close.is_none() {
            net.push(i);
        }
    }
    Ok(net)
}

fn compactness(s: &Setup) -> Result<Suite> {
    require_k(s, &[0, 1])?;
    let tol = &s.cfg.tolerances;
    let complex = s.complex()?;
    let n = s.cfg.instances;
    let chains: Vec<PolyChain> = (0..n)
        .into_par_iter()
        .map(|i| s.chain(&mut s.rng(i), &s.lo, &s.hi))
        .collect::<Result<_>>()?;
    let embedded: Vec<(ComplexChain, f64)> = chains
        .par_iter()
        .map(|c| {
            let (chain, report) = embed_chain(c, &complex)?;
            Ok((chain, report.discrepancy))
        })
        .collect::<Result<_>>()?;
    let (embedded, discrepancies): (Vec<ComplexChain>, Vec<f64>) = embedded.into_iter().unzip();
    let prefix = s.cfg.params.prefix.filter(|&p| p < n);
    let mut rows = Vec::new();
    let mut aggregates = BTreeMap::new();
    let mut checks = Vec::new();
    let mut sizes: Vec<(f64, usize)> = Vec::new();
    for (e_index, &eps) in s.cfg.params.epsilons.iter().enumerate() {
        let delta = s.cfg.params.delta_factor * eps;
        let align = s.cfg.params.lattice.then(|| s.grid_step());
        let centers = lattice_centers(&s.space, &s.lo, &s.hi, delta, align);
        let net = coeff_net(s.group, eps, centers.len());
        let quantized: Vec<Result<(Quantization, String, f64, f64)>> = chains
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let q = cone_quantize(p, &centers, delta, net)?;
                let digest = chain_digest(&q.chain);
                let (eq, r) = embed_chain(&q.chain, &complex)?;
                let value = flat_norm_upper(&complex, &embedded[i].sub(&eq)?, s.mode)?.value;
                Ok((q, digest, value, discrepancies[i] + r.discrepancy))
            })
            .collect();
        let members = greedy_net(&complex, &embedded, eps, s.mode)?;
        let member_set: HashSet<usize> = members.iter().copied().collect();
        let mut touched = HashSet::new();
        let mut touched_prefix = 0;
        let mut max_budget: f64 = 0.0;
        let mut max_cell_mass: f64 = 0.0;
        for (i, res) in quantized.into_iter().enumerate() {
            let index = e_index * n + i;
            let mut row = ReportRow::new(index, e_index, chain_digest(&chains[i]));
            row.set("epsilon", eps);
            row.set("in_net", if member_set.contains(&i) { 1.0 } else { 0.0 });
            match res {
                Ok((q, digest, value, disc)) => {
                    touched.insert(digest);
                    max_budget = max_budget.max(q.budget.total);
                    max_cell_mass = max_cell_mass.max(q.max_cell_boundary_mass).max(mass(&q.chain)?);
                    row.set("budget", q.budget.total);
                    row.set("flat_to_grid_chain", value);
                    row.set("discrepancy", disc);
                    row.require(
                        value,
                        q.budget.total + disc + tol.flat,
                        "F(P - Q) <= budget + embedding discrepancy",
                    );
                }
                Err(e) => row.fail(format!("error: {e}")),
            }
            if Some(i + 1) == prefix {
                touched_prefix = touched.len();
            }
            rows.push(row);
        }
        let key = format!("{eps}");
        let grid_log10 = match s.cfg.k {
            0 => zero_chain_grid_log10(s.group, net, centers.len(), s.cfg.params.max_n),
            _ => centers.len() as f64 * zero_chain_grid_log10(s.group, net, centers.len(), max_cell_mass.ceil()),
        };
        aggregates.insert(format!("centers_eps{key}"), centers.len() as f64);
        aggregates.insert(format!("net_size_eps{key}"), members.len() as f64);
        aggregates.insert(format!("grid_chains_touched_eps{key}"), touched.len() as f64);
        aggregates.insert(format!("grid_size_log10_eps{key}"), grid_log10);
        aggregates.insert(format!("max_budget_eps{key}"), max_budget);
        checks.push(SuiteCheck {
            name: format!("eps {key}: net size <= enumerated grid size"),
            pass: (members.len() as f64).log10() <= grid_log10,
            detail: format!("net {} vs 10^{grid_log10:.2}", members.len()),
        });
        if 2.0 * max_budget <= eps {
            checks.push(SuiteCheck {
                name: format!("eps {key}: net size <= grid chains touched"),
                pass: members.len() <= touched.len(),
                detail: format!("net {} vs touched {}", members.len(), touched.len()),
            });
        }
        if let Some(p) = prefix {
            let net_prefix = members.iter().filter(|&&i| i < p).count();
            aggregates.insert(format!("net_size_prefix_eps{key}"), net_prefix as f64);
            aggregates.insert(format!("grid_chains_touched_prefix_eps{key}"), touched_prefix as f64);
            let grown = members.len() - net_prefix;
            let new_cells = touched.len() - touched_prefix;
            checks.push(SuiteCheck {
                name: format!("eps {key}: net growth <= new grid chains touched"),
                pass: grown <= new_cells,
                detail: format!(
                    "net {net_prefix} -> {} (+{grown}), touched {touched_prefix} -> {} (+{new_cells})",
                    members.len(),
                    touched.len()
                ),
            });
        }
        sizes.push((eps, members.len()));
    }
    let mut by_eps = sizes.clone();
    by_eps.sort_by(|a, b| a.0.total_cmp(&b.0));
    checks.push(SuiteCheck {
        name: "net size nonincreasing in eps".into(),
        pass: by_eps.windows(2).all(|w| w[1].1 <= w[0].1),
        detail: format!("{by_eps:?}"),
    });
    Ok((rows, aggregates, checks))
}

/// Runs one experiment. Invalid configs are errors; failures inside a row
/// are recorded on that row.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let space = cfg.normed_space()?;
    let group = cfg.coefficient_group()?;
    let (lo, hi) = cfg.bounding_box()?;
    if cfg.params.resolution == 0 {
        return Err(Error::Parse("resolution must be positive".into()));
    }
    let setup = Setup {
        cfg: cfg.clone(),
        space,
        group,
        lo: Vector::from_vec(lo),
        hi: Vector::from_vec(hi),
        mode: cfg.solve_mode()?,
    };
    let (rows, aggregates, checks) = match cfg.experiment {
        ExperimentKind::Lsc => lsc(&setup)?,
        ExperimentKind::Eilenberg => eilenberg(&setup)?,
        ExperimentKind::ConeBounds => cone_bounds(&setup)?,
        ExperimentKind::Diffusion => diffusion(&setup)?,
        ExperimentKind::Quantize => quantize(&setup)?,
        ExperimentKind::Compactness => compactness(&setup)?,
    };
    Ok(ExperimentReport {
        experiment: cfg.experiment.name().into(),
        config_digest: text_digest(&cfg.to_json()),
        config: cfg.clone(),
        rows,
        aggregates,
        checks,
        environment: Environment::current(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: ExperimentKind, space: NormedSpace, k: usize, instances: usize) -> ExperimentConfig {
        ExperimentConfig::new(kind, &space, CoefficientGroup::Integers, k, instances, 11)
    }

    #[test]
    fn centers_cover_the_box() {
        for space in [NormedSpace::euclidean(2), NormedSpace::lp(2, 1.0).unwrap()] {
            let (lo, hi) = (linalg::vector(&[0.0, 0.0]), linalg::vector(&[1.0, 1.0]));
            for align in [None, Some(0.125)] {
                let centers = lattice_centers(&space, &lo, &hi, 0.3, align);
                for i in 0..=40 {
                    for j in 0..=40 {
                        let x = linalg::vector(&[i as f64 / 40.0, j as f64 / 40.0]);
                        let near = centers.iter().map(|c| space.distance(c, &x)).fold(f64::INFINITY, f64::min);
                        assert!(near <= 0.3 + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn grid_counts() {
        // |x1| + |x2| <= 1 over two centers: 0, ±1 in either slot
        let v = zero_chain_grid_log10(CoefficientGroup::Integers, CoeffNet::Exact, 2, 1.0);
        assert!((10f64.powf(v) - 5.0).abs() < 1e-9);
        let v = zero_chain_grid_log10(CoefficientGroup::Integers, CoeffNet::Exact, 3, 2.0);
        // j=0: 1, j=1: 3*2*2 = 12, j=2: 3*4*1 = 12
        assert!((10f64.powf(v) - 25.0).abs() < 1e-9);
    }

    #[test]
    fn lsc_l1_and_l2() {
        let l1 = run_experiment(&config(ExperimentKind::Lsc, NormedSpace::lp(2, 1.0).unwrap(), 1, 4)).unwrap();
        assert!(l1.passed(), "{:?}", l1.checks);
        assert!(l1.aggregates["lsc_gap"].abs() < 1e-9);
        let l2 = run_experiment(&config(ExperimentKind::Lsc, NormedSpace::euclidean(2), 1, 4)).unwrap();
        assert!(l2.passed());
        assert!((l2.aggregates["lsc_gap"] - (2.0 - 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn reports_are_reproducible() {
        let mut cfg = config(ExperimentKind::ConeBounds, NormedSpace::euclidean(2), 1, 4);
        cfg.params.replicates = 2;
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.rows.len(), 8);
    }

    #[test]
    fn empty_suite_gives_header_only_csv() {
        let cfg = config(ExperimentKind::Quantize, NormedSpace::euclidean(2), 0, 0);
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.to_csv().unwrap().lines().count(), 1);
        assert!(r.passed());
    }

    #[test]
    fn small_suites_run() {
        let mut e = config(ExperimentKind::Eilenberg, NormedSpace::euclidean(2), 1, 3);
        e.params.replicates = 1;
        let r = run_experiment(&e).unwrap();
        assert!(r.rows.iter().all(|row| row.pass), "{:?}", r.rows);

        let mut q = config(ExperimentKind::Quantize, NormedSpace::lp(2, 1.0).unwrap(), 0, 4);
        q.params.lattice = true;
        let r = run_experiment(&q).unwrap();
        assert!(r.passed(), "{:?}", r.rows);

        let mut d = config(ExperimentKind::Diffusion, NormedSpace::euclidean(2), 0, 3);
        d.params.lattice = true;
        d.params.replicates = 1;
        let r = run_experiment(&d).unwrap();
        assert!(r.rows.iter().all(|row| row.pass), "{:?}", r.rows);
        assert!(r.aggregates["c_diffusion"].is_finite());

        let mut c = config(ExperimentKind::Compactness, NormedSpace::euclidean(2), 0, 12);
        c.params.max_n = 5.0;
        c.params.prefix = Some(6);
        let r = run_experiment(&c).unwrap();
        assert!(r.rows.iter().all(|row| row.pass), "{:?}", r.rows);
    }
}
