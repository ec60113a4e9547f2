//! Dense two-phase simplex method with a small best-first branch and bound
//! on top. Sized for desk-scale problems (a few thousand columns).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// minimize `objective · x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpFailure {
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl From<LpFailure> for Error {
    fn from(f: LpFailure) -> Self {
        Error::Solver(
            match f {
                LpFailure::Infeasible => "linear program is infeasible",
                LpFailure::Unbounded => "linear program is unbounded",
                LpFailure::IterationLimit => "simplex iteration limit reached",
            }
            .to_string(),
        )
    }
}

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 50;

impl LinearProgram {
    pub fn new(n_vars: usize, objective: Vec<f64>) -> Self {
        assert_eq!(objective.len(), n_vars);
        LinearProgram {
            n_vars,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn solve(&self) -> std::result::Result<LpSolution, LpFailure> {
        Tableau::build(self).run()
    }
}

struct Tableau {
    m: usize,
    cols: usize, // excluding rhs
    n_orig: usize,
    first_artificial: usize,
    data: Vec<f64>, // m rows of (cols + 1)
    basis: Vec<usize>,
    cost: Vec<f64>,
    iterations: usize,
    limit: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * (self.cols + 1) + self.cols]
    }

    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.constraints.len();
        let n = lp.n_vars;
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                let mut row = vec![0.0; n];
                for &(j, a) in &c.coeffs {
                    row[j] += a;
                }
                let (mut rel, mut rhs) = (c.relation, c.rhs);
                if rhs < 0.0 {
                    for a in row.iter_mut() {
                        *a = -*a;
                    }
                    rhs = -rhs;
                    rel = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                }
                (row, rel, rhs)
            })
            .collect();

        let n_slack = rows.iter().filter(|(_, r, _)| *r != Relation::Eq).count();

        // crash basis: reuse unit columns of the original matrix for equality rows
        let mut basis = vec![usize::MAX; m];
        let mut used = vec![false; n];
        for j in 0..n {
            let mut hit = None;
            let mut ok = true;
            for (i, (row, _, _)) in rows.iter().enumerate() {
                let a = row[j];
                if a == 0.0 {
                    continue;
                }
                if a == 1.0 && hit.is_none() {
                    hit = Some(i);
                } else {
                    ok = false;
                    break;
                }
            }
            if let (true, Some(i)) = (ok, hit) {
                if rows[i].1 == Relation::Eq && basis[i] == usize::MAX && !used[j] {
                    basis[i] = j;
                    used[j] = true;
                }
            }
        }

        let mut slack_col = n;
        let mut needs_art = Vec::new();
        let mut slack_of = vec![usize::MAX; m];
        for (i, (_, rel, _)) in rows.iter().enumerate() {
            match rel {
                Relation::Le => {
                    slack_of[i] = slack_col;
                    basis[i] = slack_col;
                    slack_col += 1;
                }
                Relation::Ge => {
                    slack_of[i] = slack_col;
                    slack_col += 1;
                    needs_art.push(i);
                }
                Relation::Eq => {
                    if basis[i] == usize::MAX {
                        needs_art.push(i);
                    }
                }
            }
        }
        let first_artificial = n + n_slack;
        let cols = first_artificial + needs_art.len();
        let mut data = vec![0.0; m * (cols + 1)];
        for (i, (row, rel, rhs)) in rows.iter_mut().enumerate() {
            let base = i * (cols + 1);
            data[base..base + n].copy_from_slice(row);
            match rel {
                Relation::Le => data[base + slack_of[i]] = 1.0,
                Relation::Ge => data[base + slack_of[i]] = -1.0,
                Relation::Eq => {}
            }
            data[base + cols] = *rhs;
        }
        for (a, &i) in needs_art.iter().enumerate() {
            let col = first_artificial + a;
            data[i * (cols + 1) + col] = 1.0;
            basis[i] = col;
        }
        let mut cost = vec![0.0; cols];
        cost[..n].copy_from_slice(&lp.objective);
        Tableau {
            m,
            cols,
            n_orig: n,
            first_artificial,
            data,
            basis,
            cost,
            iterations: 0,
            limit: 50 * (m + cols) + 1000,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        let prow: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f != 0.0 {
                let row = &mut self.data[i * w..(i + 1) * w];
                for (x, y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Runs the simplex loop for the objective `obj` over columns `< active`.
    fn optimize(&mut self, obj: &[f64], active: usize) -> std::result::Result<(), LpFailure> {
        let w = self.cols + 1;
        // reduced costs
        let mut rc = vec![0.0; active];
        let mut degenerate = 0usize;
        loop {
            for (j, r) in rc.iter_mut().enumerate() {
                *r = obj[j];
            }
            for i in 0..self.m {
                let cb = obj.get(self.basis[i]).copied().unwrap_or(0.0);
                if cb != 0.0 {
                    let row = &self.data[i * w..i * w + active];
                    for (r, a) in rc.iter_mut().zip(row.iter()) {
                        *r -= cb * a;
                    }
                }
            }
            let bland = degenerate > DEGENERATE_SWITCH;
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for (j, &r) in rc.iter().enumerate() {
                if r < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(c) = enter else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpFailure::Unbounded);
            };
            if ratio.abs() < 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            self.iterations += 1;
            if self.iterations > self.limit {
                return Err(LpFailure::IterationLimit);
            }
        }
    }

    fn run(mut self) -> std::result::Result<LpSolution, LpFailure> {
        if self.first_artificial < self.cols {
            let mut phase1 = vec![0.0; self.cols];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = 1.0;
            }
            self.optimize(&phase1, self.cols)?;
            let infeas: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.rhs(i))
                .sum();
            let scale = (0..self.m).map(|i| self.rhs(i).abs()).fold(1.0, f64::max);
            if infeas > 1e-7 * scale {
                return Err(LpFailure::Infeasible);
            }
            // drive remaining artificials out of the basis
            for i in 0..self.m {
                if self.basis[i] >= self.first_artificial {
                    let col = (0..self.first_artificial).find(|&j| self.at(i, j).abs() > PIVOT_TOL);
                    if let Some(j) = col {
                        self.pivot(i, j);
                    }
                }
            }
        }
        let cost = self.cost.clone();
        let active = self.first_artificial;
        self.optimize(&cost, active)?;
        let mut x = vec![0.0; self.n_orig];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.n_orig {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        let objective = x.iter().zip(cost.iter()).map(|(a, b)| a * b).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations: self.iterations,
        })
    }
}

/// Result of an integer-constrained solve.
#[derive(Debug, Clone)]
pub struct IntegerSolution {
    pub solution: LpSolution,
    /// the root relaxation was already integral
    pub relaxation_integral: bool,
    pub nodes: usize,
    pub relaxation_bound: f64,
}

struct Node {
    bound: f64,
    extra: Vec<Constraint>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on bound
        other.bound.partial_cmp(&self.bound).unwrap_or(Ordering::Equal)
    }
}

fn most_fractional(x: &[f64], vars: &[usize]) -> Option<usize> {
    let mut best = None;
    let mut dist = 1e-6;
    for &j in vars {
        let f = x[j] - x[j].floor();
        let d = f.min(1.0 - f);
        if d > dist {
            dist = d;
            best = Some(j);
        }
    }
    best
}

/// Best-first branch and bound requiring `integer_vars` to be integral.
pub fn solve_integer(lp: &LinearProgram, integer_vars: &[usize], node_limit: usize) -> Result<IntegerSolution> {
    let root = lp.solve().map_err(Error::from)?;
    let relaxation_bound = root.objective;
    if most_fractional(&root.x, integer_vars).is_none() {
        return Ok(IntegerSolution {
            solution: round_solution(root, lp, integer_vars),
            relaxation_integral: true,
            nodes: 1,
            relaxation_bound,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: root.objective,
        extra: Vec::new(),
    });
    let mut incumbent: Option<LpSolution> = None;
    let mut nodes = 0usize;
    while let Some(node) = heap.pop() {
        if let Some(inc) = &incumbent {
            if node.bound >= inc.objective - 1e-9 {
                break;
            }
        }
        nodes += 1;
        if nodes > node_limit {
            return Err(Error::Solver(format!("branch and bound node limit {node_limit} reached")));
        }
        let mut sub = lp.clone();
        sub.constraints.extend(node.extra.iter().cloned());
        let sol = match sub.solve() {
            Ok(s) => s,
            Err(LpFailure::Infeasible) => continue,
            Err(e) => return Err(e.into()),
        };
        if let Some(inc) = &incumbent {
            if sol.objective >= inc.objective - 1e-9 {
                continue;
            }
        }
        match most_fractional(&sol.x, integer_vars) {
            None => incumbent = Some(round_solution(sol, lp, integer_vars)),
            Some(j) => {
                let v = sol.x[j];
                let mut down = node.extra.clone();
                down.push(Constraint {
                    coeffs: vec![(j, 1.0)],
                    relation: Relation::Le,
                    rhs: v.floor(),
                });
                let mut up = node.extra;
                up.push(Constraint {
                    coeffs: vec![(j, 1.0)],
                    relation: Relation::Ge,
                    rhs: v.ceil(),
                });
                heap.push(Node {
                    bound: sol.objective,
                    extra: down,
                });
                heap.push(Node {
                    bound: sol.objective,
                    extra: up,
                });
            }
        }
    }
    let solution = incumbent.ok_or_else(|| Error::Solver("no integer solution found".into()))?;
    Ok(IntegerSolution {
        solution,
        relaxation_integral: false,
        nodes,
        relaxation_bound,
    })
}

fn round_solution(mut sol: LpSolution, lp: &LinearProgram, vars: &[usize]) -> LpSolution {
    for &j in vars {
        sol.x[j] = sol.x[j].round();
    }
    sol.objective = sol.x.iter().zip(lp.objective.iter()).map(|(a, b)| a * b).sum();
    sol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> 36 at (2, 6)
        let mut lp = LinearProgram::new(2, vec![-3.0, -5.0]);
        lp.add(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y s.t. x + y = 2, x >= 0.5 -> 2
        let mut lp = LinearProgram::new(2, vec![1.0, 1.0]);
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0);
        lp.add(vec![(0, 1.0)], Relation::Ge, 0.5);
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!(s.x[0] >= 0.5 - 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1, vec![1.0]);
        lp.add(vec![(0, 1.0)], Relation::Le, -1.0);
        assert_eq!(lp.solve().unwrap_err(), LpFailure::Infeasible);
        let mut lp = LinearProgram::new(1, vec![-1.0]);
        lp.add(vec![(0, 1.0)], Relation::Ge, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpFailure::Unbounded);
    }

    #[test]
    fn branch_and_bound_finds_integer_optimum() {
        // max x + y s.t. 2x + 2y <= 3 -> relaxation 1.5, integer 1
        let mut lp = LinearProgram::new(2, vec![-1.0, -1.0]);
        lp.add(vec![(0, 2.0), (1, 2.0)], Relation::Le, 3.0);
        let s = solve_integer(&lp, &[0, 1], 100).unwrap();
        assert!(!s.relaxation_integral);
        assert!((s.solution.objective + 1.0).abs() < 1e-9);
        assert!((s.relaxation_bound + 1.5).abs() < 1e-9);
    }
}
