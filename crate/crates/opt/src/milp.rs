//! Branch and bound over binary variables.
//!
//! Nodes are explored best-bound first with depth-first dives: after
//! branching, the child on the rounding side of the fractional value is
//! processed immediately with the current simplex state, and its sibling is
//! queued together with a snapshot of the parent basis. Every node LP is
//! re-solved with the dual simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use log::debug;

use crate::error::{OptError, OptResult};
use crate::lp::finish;
use crate::problem::{MilpProblem, Sense};
use crate::settings::Tolerances;
use crate::simplex::{Basis, EngineStatus, Simplex};
use crate::solution::LpSolution;

/// Proposes a binary assignment (in the order of `MilpProblem::binaries`)
/// from the solution of a node relaxation. The solver completes it by
/// solving the LP with those binaries fixed.
pub trait MilpHeuristic {
    fn propose(&mut self, relaxation: &[f64]) -> Option<Vec<f64>>;
}

impl<F: FnMut(&[f64]) -> Option<Vec<f64>>> MilpHeuristic for F {
    fn propose(&mut self, relaxation: &[f64]) -> Option<Vec<f64>> {
        self(relaxation)
    }
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub tol: Tolerances,
    /// Distance from 0/1 below which a binary counts as integral.
    pub int_tol: f64,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    /// Run the heuristic at the root and then every this many nodes (0 = root only).
    pub heuristic_every: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            int_tol: 1e-6,
            node_limit: 200_000,
            time_limit: None,
            heuristic_every: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Incumbent proven optimal within the gap tolerance.
    Optimal,
    /// Node or time limit hit with an incumbent in hand.
    LimitReached,
}

#[derive(Debug, Clone)]
pub struct MilpReport {
    pub status: MilpStatus,
    /// Incumbent, re-solved as an LP with all binaries fixed.
    pub solution: LpSolution,
    pub objective: f64,
    /// Best proven bound, in the problem's own sense.
    pub best_bound: f64,
    /// `|objective - best_bound| / max(1, |objective|)`.
    pub gap: f64,
    /// Nodes whose LP was solved, including the root.
    pub nodes: usize,
    /// Nodes that were split into two children.
    pub branched: usize,
    pub lp_iterations: usize,
}

struct Node {
    bound: f64,
    depth: usize,
    fix: Vec<i8>,
    basis: Basis,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // max-heap on the negated bound, deeper nodes first among ties
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(self.depth.cmp(&o.depth))
    }
}

struct Incumbent {
    sol: LpSolution,
    /// min-sense objective
    value: f64,
}

struct Search<'a> {
    p: &'a MilpProblem,
    opts: &'a MilpOptions,
    sign: f64,
    tree: Simplex,
    fixer: Simplex,
    applied: Vec<i8>,
    fixer_applied: Vec<i8>,
    inc: Option<Incumbent>,
    iterations: usize,
}

impl<'a> Search<'a> {
    fn apply(engine: &mut Simplex, applied: &mut [i8], p: &MilpProblem, fix: &[i8]) {
        for (k, v) in p.binaries.iter().enumerate() {
            if applied[k] != fix[k] {
                let j = v.0;
                let (lo, hi) = match fix[k] {
                    0 => (0.0, 0.0),
                    1 => (1.0, 1.0),
                    _ => (p.lp.lower[j], p.lp.upper[j]),
                };
                engine.set_col_bounds(j, lo, hi);
                applied[k] = fix[k];
            }
        }
    }

    fn cutoff(&self) -> f64 {
        match &self.inc {
            None => f64::INFINITY,
            Some(i) => {
                let slack = self.opts.tol.abs_gap_tol.max(self.opts.tol.gap_tol * i.value.abs().max(1.0));
                i.value - slack
            }
        }
    }

    fn min_obj(&self, x: &[f64]) -> f64 {
        self.sign * self.p.lp.objective_value(x)
    }

    /// Solves the LP with every binary fixed to `assign` and offers the
    /// result as incumbent.
    fn try_assignment(&mut self, assign: &[f64]) -> OptResult<bool> {
        let fix: Vec<i8> = assign.iter().map(|&v| if v >= 0.5 { 1 } else { 0 }).collect();
        Self::apply(&mut self.fixer, &mut self.fixer_applied, self.p, &fix);
        let st = match self.fixer.run() {
            Ok(s) => s,
            Err(_) => {
                self.fixer.cold_basis();
                self.fixer.run()?
            }
        };
        self.iterations += self.fixer.iterations;
        self.fixer.iterations = 0;
        if st != EngineStatus::Optimal {
            return Ok(false);
        }
        let mut fixed = self.p.lp.clone();
        for (v, &f) in self.p.binaries.iter().zip(&fix) {
            fixed.set_bounds(*v, f as f64, f as f64);
        }
        let sol = self.fixer.extract(&fixed, st);
        let sol = match finish(&fixed, &self.opts.tol, sol) {
            Ok(s) => s,
            Err(e) => {
                debug!("discarding incumbent candidate: {e}");
                return Ok(false);
            }
        };
        let value = self.min_obj(&sol.x);
        let better = self.inc.as_ref().map_or(true, |i| value < i.value - 1e-12 * value.abs().max(1.0));
        if better {
            debug!("new incumbent {}", self.sign * value);
            self.inc = Some(Incumbent { sol, value });
        }
        Ok(better)
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best = None;
        let mut score = self.opts.int_tol;
        for (k, v) in self.p.binaries.iter().enumerate() {
            let f = x[v.0];
            let s = f.min(1.0 - f);
            if s > score {
                score = s;
                best = Some(k);
            }
        }
        best
    }
}

/// Solves a MILP without a heuristic.
pub fn solve_milp(p: &MilpProblem, opts: &MilpOptions) -> OptResult<MilpReport> {
    solve_milp_with(p, opts, None)
}

/// Solves a MILP by branch and bound.
///
/// Returns `OptError::Infeasible` / `OptError::Unbounded` when the root
/// relaxation is, `OptError::Infeasible` as well when the tree is exhausted
/// without an integral point, and `OptError::NoIncumbent` when a limit is hit
/// before any integral point is found.
pub fn solve_milp_with(
    p: &MilpProblem,
    opts: &MilpOptions,
    mut heuristic: Option<&mut dyn MilpHeuristic>,
) -> OptResult<MilpReport> {
    p.validate()?;
    let start = Instant::now();
    let nb = p.num_binaries();
    let mut s = Search {
        p,
        opts,
        sign: if p.lp.sense == Sense::Maximize { -1.0 } else { 1.0 },
        tree: Simplex::new(&p.lp, opts.tol),
        fixer: Simplex::new(&p.lp, opts.tol),
        applied: vec![-1; nb],
        fixer_applied: vec![-1; nb],
        inc: None,
        iterations: 0,
    };

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut nodes = 0usize;
    let mut branched = 0usize;
    let mut limit_hit = false;
    // (fixings, depth, bound inherited from the parent, basis to load)
    let mut current: Option<(Vec<i8>, usize, f64, Option<Basis>)> = Some((vec![-1; nb], 0, f64::NEG_INFINITY, None));

    loop {
        let (fix, depth, parent_bound, basis) = match current.take() {
            Some(c) => c,
            None => {
                let cut = s.cutoff();
                match heap.pop() {
                    None => break,
                    Some(node) if node.bound >= cut => {
                        heap.clear();
                        let _ = node;
                        break;
                    }
                    Some(node) => (node.fix, node.depth, node.bound, Some(node.basis)),
                }
            }
        };
        if parent_bound >= s.cutoff() {
            continue;
        }
        if nodes >= opts.node_limit || opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            heap.push(Node { bound: parent_bound, depth, fix, basis: basis.unwrap_or_else(|| s.tree.basis()) });
            limit_hit = true;
            break;
        }
        nodes += 1;
        if let Some(b) = &basis {
            s.tree.load_basis(b);
        }
        Search::apply(&mut s.tree, &mut s.applied, p, &fix);
        let status = match s.tree.run() {
            Ok(st) => st,
            Err(_) => {
                s.tree.cold_basis();
                s.tree.run()?
            }
        };
        s.iterations += s.tree.iterations;
        s.tree.iterations = 0;
        match status {
            EngineStatus::Infeasible => {
                if depth == 0 {
                    return Err(OptError::Infeasible);
                }
                continue;
            }
            EngineStatus::Unbounded => {
                if depth == 0 {
                    return Err(OptError::Unbounded);
                }
                return Err(OptError::Numerical("node relaxation unbounded below a bounded root".into()));
            }
            EngineStatus::Optimal => {}
        }
        let relax = s.tree.extract(&p.lp, status);
        let z = s.min_obj(&relax.x).max(parent_bound);
        if z >= s.cutoff() {
            continue;
        }
        let frac = s.most_fractional(&relax.x);
        if frac.is_none() {
            let assign: Vec<f64> = p.binaries.iter().map(|v| relax.x[v.0]).collect();
            s.try_assignment(&assign)?;
            continue;
        }
        if let Some(h) = heuristic.as_deref_mut() {
            let due = nodes == 1 || (opts.heuristic_every > 0 && nodes % opts.heuristic_every == 0);
            if due {
                if let Some(assign) = h.propose(&relax.x) {
                    if assign.len() == nb {
                        s.try_assignment(&assign)?;
                    }
                }
                if z >= s.cutoff() {
                    continue;
                }
            }
        }
        let k = frac.unwrap();
        branched += 1;
        let up_first = relax.x[p.binaries[k].0] >= 0.5;
        let mut near = fix.clone();
        let mut far = fix;
        near[k] = if up_first { 1 } else { 0 };
        far[k] = if up_first { 0 } else { 1 };
        heap.push(Node { bound: z, depth: depth + 1, fix: far, basis: s.tree.basis() });
        current = Some((near, depth + 1, z, None));
    }

    let inc = match s.inc {
        Some(i) => i,
        None if limit_hit => return Err(OptError::NoIncumbent(format!("no integral point after {nodes} nodes"))),
        None => return Err(OptError::Infeasible),
    };
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let (status, bound) = if limit_hit && open_bound < s_cutoff(&inc, opts) {
        (MilpStatus::LimitReached, open_bound.min(inc.value))
    } else {
        (MilpStatus::Optimal, open_bound.min(inc.value))
    };
    let objective = inc.sol.objective;
    let best_bound = s.sign * bound;
    let gap = (s.sign * inc.value - best_bound).abs() / objective.abs().max(1.0);
    debug!("branch and bound: {nodes} nodes, {branched} branched, objective {objective}, bound {best_bound}");
    Ok(MilpReport {
        status,
        solution: inc.sol,
        objective,
        best_bound,
        gap,
        nodes,
        branched,
        lp_iterations: s.iterations,
    })
}

fn s_cutoff(inc: &Incumbent, opts: &MilpOptions) -> f64 {
    inc.value - opts.tol.abs_gap_tol.max(opts.tol.gap_tol * inc.value.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LpProblem, Relation};

    fn toy() -> MilpProblem {
        let mut p = MilpProblem::new(LpProblem::new(Sense::Maximize));
        let a = p.add_binary("d1", 1.0);
        let b = p.add_binary("d2", 1.0);
        p.lp.add_row("cap", [(a, 1.0), (b, 1.0)], Relation::Le, 1.5);
        p
    }

    #[test]
    fn two_binary_toy() {
        let r = solve_milp(&toy(), &MilpOptions::default()).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-12);
        assert!(r.best_bound >= r.objective - 1e-9);
        assert!(r.gap <= 1e-6);
    }

    #[test]
    fn integral_relaxation_needs_no_branching() {
        let mut p = MilpProblem::new(LpProblem::new(Sense::Minimize));
        let a = p.add_binary("a", 1.0);
        let x = p.lp.add_var("x", 0.0, 10.0, 1.0);
        p.lp.add_row("r", [(a, 2.0), (x, 1.0)], Relation::Ge, 2.0);
        let r = solve_milp(&p, &MilpOptions::default()).unwrap();
        assert_eq!(r.branched, 0);
        assert_eq!(r.nodes, 1);
        assert!((r.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_after_branching() {
        let mut p = MilpProblem::new(LpProblem::new(Sense::Minimize));
        let a = p.add_binary("a", 1.0);
        let b = p.add_binary("b", 1.0);
        p.lp.add_row("r", [(a, 2.0), (b, 2.0)], Relation::Eq, 1.0);
        assert!(matches!(solve_milp(&p, &MilpOptions::default()), Err(OptError::Infeasible)));
    }

    #[test]
    fn knapsack_matches_enumeration() {
        let w = [12.0, 7.0, 11.0, 8.0, 9.0, 6.0, 5.0, 14.0];
        let v = [24.0, 13.0, 23.0, 15.0, 16.0, 11.0, 8.0, 27.0];
        let cap = 34.0;
        let mut p = MilpProblem::new(LpProblem::new(Sense::Maximize));
        let ids: Vec<_> = v.iter().enumerate().map(|(i, &c)| p.add_binary(format!("b{i}"), c)).collect();
        p.lp.add_row("w", ids.iter().zip(w).map(|(&i, a)| (i, a)), Relation::Le, cap);
        let mut best = 0.0f64;
        for mask in 0u32..256 {
            let (mut tw, mut tv) = (0.0, 0.0);
            for i in 0..8 {
                if mask >> i & 1 == 1 {
                    tw += w[i];
                    tv += v[i];
                }
            }
            if tw <= cap {
                best = best.max(tv);
            }
        }
        let r = solve_milp(&p, &MilpOptions::default()).unwrap();
        assert!((r.objective - best).abs() < 1e-9);
    }

    #[test]
    fn heuristic_incumbent_is_used() {
        let mut calls = 0;
        let mut h = |_x: &[f64]| {
            calls += 1;
            Some(vec![1.0, 0.0])
        };
        let r = solve_milp_with(&toy(), &MilpOptions::default(), Some(&mut h)).unwrap();
        assert!((r.objective - 1.0).abs() < 1e-12);
        assert!(calls >= 1);
    }

    #[test]
    fn node_limit_without_incumbent() {
        let mut p = MilpProblem::new(LpProblem::new(Sense::Maximize));
        let ids: Vec<_> = (0..6).map(|i| p.add_binary(format!("b{i}"), 1.0)).collect();
        p.lp.add_row("odd", ids.iter().map(|&i| (i, 2.0)), Relation::Le, 5.0);
        let opts = MilpOptions { node_limit: 1, ..Default::default() };
        assert!(matches!(solve_milp(&p, &opts), Err(OptError::NoIncumbent(_))));
        let r = solve_milp(&p, &MilpOptions::default()).unwrap();
        assert!((r.objective - 2.0).abs() < 1e-12);
    }
}
