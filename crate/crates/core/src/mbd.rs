//! Modified Benders decomposition for attacker-defender bi-level LPs.
//!
//! Generic form, everything in `>=` rows:
//!
//! ```text
//! min_x  c1'x + d1'y*
//! s.t.   A1 x >= b1
//!        y* in argmin_y { d2'y : A2 x + A3 y >= b2 }
//! ```
//!
//! The subproblem fixes `x`, and replaces optimality of `y` by primal and
//! dual feasibility plus a strong-duality row. Its duals give a cut on `x`.

use fdiva_opt::{solve_lp, verify_farkas, LpProblem, LpSolution, LpStatus, Relation, Sense, Tolerances, VarId};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::attack_milp::{add_attack_polytope, audit_attack, clean_attack, flow_direction, AttackInstance, AttackResult, BoundType, IterationRecord};
use crate::dcopf::{solve_dcopf, DcopfRequest};
use crate::error::{Error, Result};
use crate::grid_model::Grid;

pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdblpProblem {
    pub c1: Vec<f64>,
    pub d1: Vec<f64>,
    /// Constant added to `d1'y` in reported objectives.
    pub d1_offset: f64,
    pub d2: Vec<f64>,
    pub a1: Vec<SparseRow>,
    pub b1: Vec<f64>,
    pub a2: Vec<SparseRow>,
    pub a3: Vec<SparseRow>,
    pub b2: Vec<f64>,
}

fn dot(row: &SparseRow, v: &[f64]) -> f64 {
    row.iter().map(|&(j, a)| a * v[j]).sum()
}

impl AdblpProblem {
    pub fn nx(&self) -> usize {
        self.c1.len()
    }

    pub fn ny(&self) -> usize {
        self.d1.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, ny) = (self.nx(), self.ny());
        let bad = |m: &str| Err(Error::Instance(format!("adblp: {m}")));
        if self.d2.len() != ny {
            return bad("d1 and d2 lengths differ");
        }
        if self.a1.len() != self.b1.len() {
            return bad("A1 and b1 row counts differ");
        }
        if self.a2.len() != self.b2.len() || self.a3.len() != self.b2.len() {
            return bad("A2, A3 and b2 row counts differ");
        }
        let cols_ok = |rows: &[SparseRow], n: usize| rows.iter().all(|r| r.iter().all(|&(j, a)| j < n && a.is_finite()));
        if !cols_ok(&self.a1, nx) || !cols_ok(&self.a2, nx) {
            return bad("A1/A2 column index out of range");
        }
        if !cols_ok(&self.a3, ny) {
            return bad("A3 column index out of range");
        }
        Ok(())
    }

    /// `b2 - A2 x`.
    pub fn coupled_rhs(&self, x: &[f64]) -> Vec<f64> {
        self.a2.iter().zip(&self.b2).map(|(r, b)| b - dot(r, x)).collect()
    }

    /// Residuals `A1 x - b1` and `A2 x + A3 y - b2` (nonnegative when feasible).
    pub fn residuals(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let r1 = self.a1.iter().zip(&self.b1).map(|(r, b)| dot(r, x) - b).collect();
        let r2 = self.a2.iter().zip(&self.a3).zip(&self.b2).map(|((r2, r3), b)| dot(r2, x) + dot(r3, y) - b).collect();
        (r1, r2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    Optimality,
    Feasibility,
}

#[derive(Debug, Clone, Serialize)]
pub struct BendersCut {
    pub kind: CutKind,
    pub gamma: Vec<f64>,
    pub lambda_sp: Vec<f64>,
    /// `gamma'b2 + lambda_sp'd2`.
    pub constant: f64,
    /// `-gamma'A2`.
    pub linear: Vec<f64>,
}

impl BendersCut {
    fn new(p: &AdblpProblem, kind: CutKind, gamma: Vec<f64>, lambda_sp: Vec<f64>) -> Self {
        let constant = gamma.iter().zip(&p.b2).map(|(g, b)| g * b).sum::<f64>()
            + lambda_sp.iter().zip(&p.d2).map(|(l, d)| l * d).sum::<f64>();
        let mut linear = vec![0.0; p.nx()];
        for (g, row) in gamma.iter().zip(&p.a2) {
            for &(j, a) in row {
                linear[j] -= g * a;
            }
        }
        // cancellation noise
        let big = linear.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in linear.iter_mut() {
            if v.abs() <= 1e-11 * big {
                *v = 0.0;
            }
        }
        Self { kind, gamma, lambda_sp, constant, linear }
    }

    /// Right-hand side of the cut at `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.linear.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpSolution {
    pub y: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda_sp: Vec<f64>,
    pub delta: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub enum SpResult {
    Optimal(SpSolution),
    /// Farkas ray restricted to the coupled and dual-feasibility rows.
    Infeasible(BendersCut),
}

struct SpLayout {
    lp: LpProblem,
    m2: usize,
    ny: usize,
}

fn build_sp(p: &AdblpProblem, x: &[f64]) -> SpLayout {
    let (ny, m2) = (p.ny(), p.b2.len());
    let rhs = p.coupled_rhs(x);
    let mut lp = LpProblem::new(Sense::Minimize);
    let y: Vec<VarId> = (0..ny).map(|j| lp.add_var(format!("y{j}"), f64::NEG_INFINITY, f64::INFINITY, p.d1[j])).collect();
    let beta: Vec<VarId> = (0..m2).map(|i| lp.add_var(format!("beta{i}"), 0.0, f64::INFINITY, 0.0)).collect();
    // strong duality: beta'(b2 - A2 x) - d2'y >= 0
    let mut sd: Vec<(VarId, f64)> = beta.iter().zip(&rhs).filter(|(_, r)| **r != 0.0).map(|(&b, &r)| (b, r)).collect();
    sd.extend(y.iter().zip(&p.d2).filter(|(_, d)| **d != 0.0).map(|(&v, &d)| (v, -d)));
    lp.add_row("delta", sd, Relation::Ge, 0.0);
    for (i, row) in p.a3.iter().enumerate() {
        lp.add_row(format!("gamma{i}"), row.iter().map(|&(j, a)| (y[j], a)), Relation::Ge, rhs[i]);
    }
    let mut cols: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); ny];
    for (i, row) in p.a3.iter().enumerate() {
        for &(j, a) in row {
            cols[j].push((beta[i], a));
        }
    }
    for (j, col) in cols.into_iter().enumerate() {
        lp.add_row(format!("lambda{j}"), col, Relation::Eq, p.d2[j]);
    }
    SpLayout { lp, m2, ny }
}

/// Solves the subproblem at `x`.
pub fn solve_sp(p: &AdblpProblem, x: &[f64], tol: &Tolerances) -> Result<SpResult> {
    if x.len() != p.nx() {
        return Err(Error::Instance(format!("x has {} entries, expected {}", x.len(), p.nx())));
    }
    let SpLayout { lp, m2, ny } = build_sp(p, x);
    let sol: LpSolution = solve_lp(&lp, tol)?;
    match sol.status {
        LpStatus::Unbounded => Err(Error::Audit("subproblem unbounded: defender objective not bounded below".into())),
        LpStatus::Infeasible => {
            let u = sol.farkas.ok_or_else(|| Error::Audit("infeasible subproblem without certificate".into()))?;
            if !verify_farkas(&lp, &u) {
                return Err(Error::Audit("subproblem infeasibility certificate does not verify".into()));
            }
            let gamma = u[1..1 + m2].to_vec();
            let lambda_sp = u[1 + m2..1 + m2 + ny].to_vec();
            Ok(SpResult::Infeasible(BendersCut::new(p, CutKind::Feasibility, gamma, lambda_sp)))
        }
        LpStatus::Optimal => {
            let y = sol.x[..ny].to_vec();
            let beta = sol.x[ny..ny + m2].to_vec();
            let gamma = sol.row_duals[1..1 + m2].to_vec();
            let lambda_sp = sol.row_duals[1 + m2..1 + m2 + ny].to_vec();
            let out = SpSolution { y, beta, gamma, lambda_sp, delta: sol.row_duals[0], objective: sol.objective };
            let cut = BendersCut::new(p, CutKind::Optimality, out.gamma.clone(), out.lambda_sp.clone());
            let v = cut.value(x);
            if (v - out.objective).abs() > 1e-6 * out.objective.abs().max(1.0) {
                return Err(Error::Audit(format!("subproblem dual identity off: {v} vs {}", out.objective)));
            }
            Ok(SpResult::Optimal(out))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MbdOptions {
    pub eps: f64,
    pub max_iters: usize,
    /// Finite lower bound on the master's value variable before any cut.
    pub alpha_floor: f64,
    pub tol: Tolerances,
}

impl MbdOptions {
    pub fn new(alpha_floor: f64) -> Self {
        Self { eps: 1e-4, max_iters: 200, alpha_floor, tol: Tolerances::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MbdIteration {
    pub k: usize,
    /// `c1'x + alpha` of the master that produced this iterate.
    pub mp_objective: Option<f64>,
    pub sp_objective: Option<f64>,
    pub gap: Option<f64>,
    pub cut: CutKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct MbdOutcome {
    /// Best iterate: smallest `c1'x + d1'y + d1_offset`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mp_objectives: Vec<f64>,
    pub trace: Vec<MbdIteration>,
    pub cuts: Vec<BendersCut>,
}

struct Master {
    lp: LpProblem,
    x: Vec<VarId>,
    alpha: VarId,
}

impl Master {
    fn new(p: &AdblpProblem, floor: f64) -> Self {
        let mut lp = LpProblem::new(Sense::Minimize);
        let x: Vec<VarId> = (0..p.nx()).map(|j| lp.add_var(format!("x{j}"), f64::NEG_INFINITY, f64::INFINITY, p.c1[j])).collect();
        let alpha = lp.add_var("alpha", floor, f64::INFINITY, 1.0);
        for (i, (row, b)) in p.a1.iter().zip(&p.b1).enumerate() {
            lp.add_row(format!("a1_{i}"), row.iter().map(|&(j, a)| (x[j], a)), Relation::Ge, *b);
        }
        Self { lp, x, alpha }
    }

    fn add(&mut self, cut: &BendersCut) {
        let mut coeffs: Vec<(VarId, f64)> =
            cut.linear.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(j, &a)| (self.x[j], -a)).collect();
        if cut.kind == CutKind::Optimality {
            coeffs.push((self.alpha, 1.0));
        }
        let n = self.lp.num_rows();
        self.lp.add_row(format!("cut{n}"), coeffs, Relation::Ge, cut.constant);
    }
}

pub fn solve_mbd(p: &AdblpProblem, opts: &MbdOptions) -> Result<MbdOutcome> {
    p.validate()?;
    let tol = &opts.tol;
    let mut master = Master::new(p, opts.alpha_floor);
    let mut x = vec![0.0; p.nx()];
    let mut alpha: Option<f64> = None;
    let mut mp_prev: Option<f64> = None;
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut out = MbdOutcome {
        x: vec![],
        y: vec![],
        objective: f64::NAN,
        iterations: 0,
        converged: false,
        mp_objectives: vec![],
        trace: vec![],
        cuts: vec![],
    };
    let mut optimality_cuts = 0;
    for k in 1..=opts.max_iters {
        out.iterations = k;
        let cx: f64 = p.c1.iter().zip(&x).map(|(a, b)| a * b).sum();
        let cut = match solve_sp(p, &x, tol)? {
            SpResult::Optimal(sp) => {
                let value = cx + sp.objective + p.d1_offset;
                if best.as_ref().is_none_or(|b| value < b.2) {
                    best = Some((x.clone(), sp.y.clone(), value));
                }
                let gap = alpha.map(|a| sp.objective - a);
                out.trace.push(MbdIteration { k, mp_objective: mp_prev, sp_objective: Some(sp.objective), gap, cut: CutKind::Optimality });
                if gap.is_some_and(|g| g < opts.eps) {
                    out.converged = true;
                    break;
                }
                optimality_cuts += 1;
                BendersCut::new(p, CutKind::Optimality, sp.gamma, sp.lambda_sp)
            }
            SpResult::Infeasible(cut) => {
                out.trace.push(MbdIteration { k, mp_objective: mp_prev, sp_objective: None, gap: None, cut: CutKind::Feasibility });
                if cut.value(&x) <= 0.0 {
                    return Err(Error::Audit("feasibility cut does not separate the current iterate".into()));
                }
                cut
            }
        };
        master.add(&cut);
        out.cuts.push(cut);
        if k == opts.max_iters {
            break;
        }
        let sol = solve_lp(&master.lp, tol)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(Error::Audit("master problem infeasible".into())),
            LpStatus::Unbounded => return Err(Error::Audit("master problem unbounded".into())),
        }
        x = master.x.iter().map(|v| sol.x[v.0]).collect();
        let a = sol.x[master.alpha.0];
        if optimality_cuts > 0 && a <= opts.alpha_floor + 1e-9 * opts.alpha_floor.abs().max(1.0) {
            return Err(Error::Audit("master value variable stuck at its initial floor".into()));
        }
        if let Some(prev) = mp_prev {
            if sol.objective < prev - 1e-8 * prev.abs().max(1.0) {
                return Err(Error::Audit(format!("master objective decreased: {} after {prev}", sol.objective)));
            }
        }
        alpha = Some(a);
        mp_prev = Some(sol.objective);
        out.mp_objectives.push(sol.objective);
        debug!("mbd iteration {k}: master {:.6}", sol.objective);
    }
    if !out.converged {
        warn!("modified Benders stopped after {} iterations without convergence", out.iterations);
    }
    let (bx, by, bv) = best.ok_or_else(|| Error::Audit("no feasible subproblem in any iteration".into()))?;
    out.x = bx;
    out.y = by;
    out.objective = bv;
    Ok(out)
}

/// Grid attack in generic form, with the position of `(bus, c, s)` in `x`.
#[derive(Debug, Clone)]
pub struct GridAdblp {
    pub problem: AdblpProblem,
    pub attack: Vec<(usize, usize, usize)>,
    pub direction: f64,
}

pub fn to_adblp(grid: &Grid, inst: &AttackInstance, tol: &Tolerances) -> Result<GridAdblp> {
    inst.validate(grid)?;
    let base = solve_dcopf(grid, DcopfRequest::default(), tol)?;
    let dir = flow_direction(base.physical_flows[inst.target]);

    // attacker block from the shared polytope, rows turned into >= form
    let mut poly = LpProblem::new(Sense::Minimize);
    let attack = add_attack_polytope(&mut poly, grid, inst, inst.sigma);
    let nx = poly.num_vars();
    let mut a1 = Vec::new();
    let mut b1 = Vec::new();
    for row in &poly.rows {
        if row.lower.is_finite() {
            a1.push(row.coeffs.clone());
            b1.push(row.lower);
        }
        if row.upper.is_finite() {
            a1.push(row.coeffs.iter().map(|&(j, a)| (j, -a)).collect());
            b1.push(-row.upper);
        }
    }
    for j in 0..nx {
        if poly.lower[j].is_finite() {
            a1.push(vec![(j, 1.0)]);
            b1.push(poly.lower[j]);
        }
        if poly.upper[j].is_finite() {
            a1.push(vec![(j, -1.0)]);
            b1.push(-poly.upper[j]);
        }
    }
    let c1 = poly.objective.clone();

    let ng = grid.n_gen();
    let l = inst.target;
    let d1: Vec<f64> = (0..ng).map(|g| -dir * grid.gen_ptdf[(l, g)]).collect();
    let d1_offset = dir * grid.load_flow[l];
    let d2: Vec<f64> = grid.case.generators.iter().map(|g| g.cost).collect();

    let mut a2: Vec<SparseRow> = Vec::new();
    let mut a3: Vec<SparseRow> = Vec::new();
    let mut b2 = Vec::new();
    // balance; columns of H sum to zero so the attack drops out
    let demand = grid.case.total_load();
    a2.push(vec![]);
    a3.push((0..ng).map(|g| (g, 1.0)).collect());
    b2.push(demand);
    a2.push(vec![]);
    a3.push((0..ng).map(|g| (g, -1.0)).collect());
    b2.push(-demand);
    let cpos = |b: usize| attack.iter().find(|a| a.0 == b).map(|a| a.1 .0);
    for k in 0..grid.n_branch() {
        let r = grid.rating(k);
        if !r.is_finite() {
            continue;
        }
        let g_row: SparseRow = (0..ng).map(|g| (g, grid.gen_ptdf[(k, g)])).filter(|(_, a)| a.abs() > 1e-12).collect();
        let att: SparseRow = grid.attack_row(k).into_iter().filter_map(|(b, w)| cpos(b).map(|j| (j, w))).collect();
        let lf = grid.load_flow[k];
        // -(G P + PTDF H c - lf) >= -r
        a2.push(att.iter().map(|&(j, w)| (j, -w)).collect());
        a3.push(g_row.iter().map(|&(g, a)| (g, -a)).collect());
        b2.push(-r - lf);
        // G P + PTDF H c - lf >= -r
        a2.push(att);
        a3.push(g_row);
        b2.push(-r + lf);
    }
    for (g, gen) in grid.case.generators.iter().enumerate() {
        a2.push(vec![]);
        a3.push(vec![(g, 1.0)]);
        b2.push(gen.pmin);
        a2.push(vec![]);
        a3.push(vec![(g, -1.0)]);
        b2.push(-gen.pmax);
    }
    let problem = AdblpProblem { c1, d1, d1_offset, d2, a1, b1, a2, a3, b2 };
    problem.validate()?;
    Ok(GridAdblp { problem, attack: attack.iter().map(|&(b, c, s)| (b, c.0, s.0)).collect(), direction: dir })
}

/// Runs the decomposition on a grid attack and checks the returned dispatch
/// against a direct re-dispatch.
pub fn solve_mbd_attack(grid: &Grid, inst: &AttackInstance, tol: &Tolerances) -> Result<(AttackResult, MbdOutcome)> {
    let model = to_adblp(grid, inst, tol)?;
    let opts = MbdOptions { tol: *tol, ..MbdOptions::new(-10.0 * grid.total_rating()) };
    let out = solve_mbd(&model.problem, &opts)?;
    let mut c = vec![0.0; grid.n_bus()];
    for &(b, xc, _) in &model.attack {
        c[b] = out.x[xc];
    }
    clean_attack(&mut c, inst.n1);
    audit_attack(grid, inst, &c)?;
    let d = solve_dcopf(grid, DcopfRequest { attack: Some(&c), ..Default::default() }, tol)?;
    let cost: f64 = grid.case.generators.iter().zip(&out.y).map(|(g, p)| g.cost * p).sum();
    if (cost - d.cost).abs() > 1e-6 * d.cost.abs().max(1.0) {
        return Err(Error::Audit(format!("decomposition dispatch cost {cost} differs from re-dispatch {}", d.cost)));
    }
    let flow = grid.flows_unchecked(&out.y)[inst.target];
    let penalty = inst.sigma * c.iter().map(|v| v.abs()).sum::<f64>();
    let trace = out
        .trace
        .iter()
        .map(|t| IterationRecord {
            iteration: t.k,
            lines: vec![],
            gens: vec![],
            binaries: 0,
            incumbent: t.sp_objective.map_or(f64::NAN, |v| -(v + model.problem.d1_offset)),
            nodes: 0,
            added_lines: vec![],
            added_gens: vec![],
        })
        .collect();
    let res = AttackResult {
        objective: model.direction * flow,
        penalty,
        c,
        dispatch: out.y.clone(),
        dispatch_cost: cost,
        post_dispatch: Some(d.pg),
        bound_type: BoundType::LowerBound,
        iterations: out.iterations,
        lines: vec![],
        gens: vec![],
        binaries: vec![],
        limit_hit: !out.converged,
        direction: model.direction,
        trace,
    };
    Ok((res, out))
}
