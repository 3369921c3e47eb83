//! Worst-case attack as a single-level MILP.
//!
//! The defender's dispatch is replaced by its KKT conditions; each
//! complementarity pair gets a binary indicator and two big-M rows. Lines
//! outside the working set `Q` have no limit rows, generators outside `R`
//! are pinned to their baseline output. [`solve_rg`] grows `Q` until no
//! omitted line is overloaded in the cyber layer; [`solve_rcg`] also grows
//! `R` from the true post-attack dispatch.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use fdiva_opt::{
    solve_lp_from, solve_milp_with, LpProblem, LpStatus, MilpHeuristic, MilpOptions, MilpProblem, MilpStatus, Relation, Sense,
    Tolerances, VarId,
};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::dcopf::{solve_dcopf, DcopfRequest, DispatchSolution};
use crate::error::{Error, Result};
use crate::grid_model::{find_critical_lines, find_marginal_generators, Grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackInstance {
    /// Line position (0-based).
    pub target: usize,
    /// l1 budget on the attack vector.
    pub n1: f64,
    /// Per-bus load shift as a fraction of the true load.
    pub load_shift: f64,
    /// Penalty per unit of `||c||_1` in the objective.
    pub sigma: f64,
    /// Replaces the default complementarity constant on the dual side.
    pub big_m: Option<f64>,
    /// Multiplier on the default complementarity constant.
    pub big_m_scale: f64,
    /// Adds the dispatch strong-duality row (McCormick envelopes on the
    /// attack-dependent terms). Valid for every KKT point.
    #[serde(default = "yes")]
    pub strong_duality: bool,
}

fn yes() -> bool {
    true
}

impl AttackInstance {
    pub fn new(target: usize, n1: f64, load_shift: f64) -> Self {
        Self { target, n1, load_shift, sigma: 1e-3, big_m: None, big_m_scale: 1.0, strong_duality: true }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.target >= grid.n_branch() {
            return Err(Error::Instance(format!("target line {} does not exist", self.target + 1)));
        }
        if !grid.rating(self.target).is_finite() {
            return Err(Error::Instance(format!("target line {} is unrated", self.target + 1)));
        }
        if !(self.n1 >= 0.0 && self.n1.is_finite()) {
            return Err(Error::Instance(format!("budget N1 = {} must be nonnegative", self.n1)));
        }
        if !(self.load_shift > 0.0 && self.load_shift < 1.0) {
            return Err(Error::Instance(format!("load shift {} must lie in (0, 1)", self.load_shift)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Instance(format!("sigma {} must be positive", self.sigma)));
        }
        if !(self.big_m_scale > 0.0) || self.big_m.is_some_and(|m| !(m > 0.0)) {
            return Err(Error::Instance("big-M must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundType {
    Exact,
    LowerBound,
    UpperBound,
}

/// One pass of a generation loop.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// 1-based line numbers in the working set.
    pub lines: Vec<usize>,
    /// 1-based generator numbers in the working set.
    pub gens: Vec<usize>,
    pub binaries: usize,
    /// Target flow of the MILP incumbent, MW.
    pub incumbent: f64,
    pub nodes: usize,
    pub added_lines: Vec<usize>,
    pub added_gens: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackResult {
    /// Target flow in MW, oriented along the baseline flow direction.
    pub objective: f64,
    /// `sigma * ||c||_1`, not included in `objective`.
    pub penalty: f64,
    pub c: Vec<f64>,
    /// Dispatch anticipated by the attacker.
    pub dispatch: Vec<f64>,
    pub dispatch_cost: f64,
    /// True post-attack dispatch (row-and-column generation only).
    pub post_dispatch: Option<Vec<f64>>,
    pub bound_type: BoundType,
    pub iterations: usize,
    /// Final working sets (0-based).
    pub lines: Vec<usize>,
    pub gens: Vec<usize>,
    /// Binary count of the MILP solved in each iteration.
    pub binaries: Vec<usize>,
    /// Some MILP stopped on a node or time limit.
    pub limit_hit: bool,
    /// +1 or -1: sign of the baseline target flow.
    pub direction: f64,
    pub trace: Vec<IterationRecord>,
}

impl AttackResult {
    pub fn l1(&self) -> f64 {
        self.c.iter().map(|v| v.abs()).sum()
    }

    pub fn l0(&self, threshold: f64) -> usize {
        self.c.iter().filter(|v| v.abs() > threshold).count()
    }
}

/// Writes one JSON object per iteration.
pub fn write_trace<T: Serialize, W: Write>(records: &[T], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AttackOptions {
    pub milp: MilpOptions,
    pub max_iterations: usize,
    pub critical_threshold: f64,
    pub marginal_tol: f64,
    /// MW beyond the rating that counts as an overflow.
    pub overflow_tol: f64,
    /// Wall-clock budget for a whole solve, shared by its MILPs.
    pub time_limit: Option<Duration>,
}

impl AttackOptions {
    fn remaining(&self, start: Instant) -> Self {
        let mut o = self.clone();
        if let Some(t) = self.time_limit {
            let left = t.saturating_sub(start.elapsed());
            o.milp.time_limit = Some(self.milp.time_limit.map_or(left, |m| m.min(left)));
        }
        o
    }
}

impl Default for AttackOptions {
    fn default() -> Self {
        let tol = Tolerances { gap_tol: 1e-9, abs_gap_tol: 1e-8, ..Tolerances::default() };
        Self {
            milp: MilpOptions { tol, ..MilpOptions::default() },
            max_iterations: 50,
            critical_threshold: 0.9,
            marginal_tol: 1e-4,
            overflow_tol: 1e-6,
            time_limit: None,
        }
    }
}

/// Variable map of a built attack MILP.
#[derive(Debug, Clone)]
pub struct AttackMilp {
    pub problem: MilpProblem,
    pub direction: f64,
    /// `(bus, c, s)`.
    pub attack: Vec<(usize, VarId, VarId)>,
    /// `(generator, P_G)` for generators in `R`.
    pub pg: Vec<(usize, VarId)>,
    /// Pinned generators and their output.
    pub fixed: Vec<(usize, f64)>,
    pub lambda: VarId,
    /// `(line, F+, F-, delta+, delta-)`.
    pub line_duals: Vec<(usize, VarId, VarId, VarId, VarId)>,
    /// `(generator, alpha+, alpha-, delta+, delta-)`.
    pub gen_duals: Vec<(usize, VarId, VarId, VarId, VarId)>,
    pub lines: Vec<usize>,
    pub gens: Vec<usize>,
}

impl AttackMilp {
    pub fn num_binaries(&self) -> usize {
        self.problem.num_binaries()
    }

    /// Attack vector over all buses.
    pub fn attack_vector(&self, x: &[f64], n_bus: usize) -> Vec<f64> {
        let mut c = vec![0.0; n_bus];
        for &(i, v, _) in &self.attack {
            c[i] = x[v.0];
        }
        c
    }

    /// Full dispatch including pinned units.
    pub fn dispatch(&self, x: &[f64], n_gen: usize) -> Vec<f64> {
        let mut p = vec![0.0; n_gen];
        for &(g, v) in &self.pg {
            p[g] = x[v.0];
        }
        for &(g, mw) in &self.fixed {
            p[g] = mw;
        }
        p
    }

    /// Binary assignment (in `problem.binaries` order) whose ones are the
    /// dual support of a dispatch solution.
    pub fn assignment_from(&self, d: &DispatchSolution) -> Vec<f64> {
        let mut val = vec![0.0; self.problem.lp.num_vars()];
        let on = |v: f64| if v > 1e-9 { 1.0 } else { 0.0 };
        for &(k, _, _, dp, dm) in &self.line_duals {
            val[dp.0] = on(d.f_plus[k]);
            val[dm.0] = on(d.f_minus[k]);
        }
        for &(g, _, _, dp, dm) in &self.gen_duals {
            val[dp.0] = on(d.alpha_plus[g]);
            val[dm.0] = on(d.alpha_minus[g]);
        }
        self.problem.binaries.iter().map(|v| val[v.0]).collect()
    }

    /// Largest violation of the indicator logic at `x`: a set indicator
    /// needs a tight primal row, a cleared one a zero multiplier.
    pub fn complementarity_violation(&self, grid: &Grid, x: &[f64]) -> f64 {
        let c = self.attack_vector(x, grid.n_bus());
        let p = self.dispatch(x, grid.n_gen());
        let flows = grid.flows_unchecked(&p);
        let extra = grid.attack_flows(&c);
        let mut worst = 0.0f64;
        for &(k, fp, fm, dp, dm) in &self.line_duals {
            let f = flows[k] + extra[k];
            let r = grid.rating(k);
            worst = worst.max(if x[dp.0] > 0.5 { (r - f).abs() } else { x[fp.0].abs() });
            worst = worst.max(if x[dm.0] > 0.5 { (f + r).abs() } else { x[fm.0].abs() });
        }
        for &(g, ap, am, dp, dm) in &self.gen_duals {
            let gen = &grid.case.generators[g];
            worst = worst.max(if x[dp.0] > 0.5 { (gen.pmax - p[g]).abs() } else { x[ap.0].abs() });
            worst = worst.max(if x[dm.0] > 0.5 { (p[g] - gen.pmin).abs() } else { x[am.0].abs() });
        }
        worst
    }
}

/// Direction of the baseline target flow (+1 when zero).
pub fn flow_direction(flow: f64) -> f64 {
    if flow < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Adds the attack vector `c`, its l1 slack `s` (objective coefficient
/// `s_cost`) and the load-shift and budget rows. Returns `(bus, c, s)`.
pub fn add_attack_polytope(lp: &mut LpProblem, grid: &Grid, inst: &AttackInstance, s_cost: f64) -> Vec<(usize, VarId, VarId)> {
    let n1 = inst.n1;
    let mut attack = Vec::new();
    for i in grid.attackable_buses() {
        let id = grid.case.buses[i].id;
        let c = lp.add_var(format!("c{id}"), -n1, n1, 0.0);
        let s = lp.add_var(format!("s{id}"), 0.0, n1, s_cost);
        attack.push((i, c, s));
    }
    let hmat = &grid.h.entries;
    for i in 0..grid.n_bus() {
        let coeffs: Vec<(VarId, f64)> =
            attack.iter().map(|&(j, c, _)| (c, hmat[(i, j)])).filter(|(_, a)| *a != 0.0).collect();
        if coeffs.is_empty() {
            continue;
        }
        let shift = inst.load_shift * grid.load[i].abs();
        lp.add_range_row(format!("shift{}", grid.case.buses[i].id), coeffs, -shift, shift);
    }
    for &(i, c, s) in &attack {
        let id = grid.case.buses[i].id;
        lp.add_row(format!("abs_hi{id}"), [(c, 1.0), (s, -1.0)], Relation::Le, 0.0);
        lp.add_row(format!("abs_lo{id}"), [(c, 1.0), (s, 1.0)], Relation::Ge, 0.0);
    }
    if !attack.is_empty() {
        lp.add_row("budget", attack.iter().map(|&(_, _, s)| (s, 1.0)), Relation::Le, n1);
    }
    attack
}

/// Range of the attack flow `(PTDF H c)_k` over the attack polytope, per line.
pub fn attack_flow_ranges(grid: &Grid, inst: &AttackInstance, lines: &[usize], tol: &Tolerances) -> Result<Vec<(f64, f64)>> {
    let mut lp = LpProblem::new(Sense::Maximize);
    let attack = add_attack_polytope(&mut lp, grid, inst, 0.0);
    let mut out = Vec::with_capacity(lines.len());
    let mut basis = None;
    for &k in lines {
        let terms: Vec<(VarId, f64)> = grid
            .attack_row(k)
            .into_iter()
            .filter_map(|(b, w)| attack.iter().find(|a| a.0 == b).map(|a| (a.1, w)))
            .collect();
        if terms.is_empty() {
            out.push((0.0, 0.0));
            continue;
        }
        let mut range = [0.0; 2];
        for (slot, sign) in [(0, -1.0), (1, 1.0)] {
            lp.objective.iter_mut().for_each(|v| *v = 0.0);
            for &(v, w) in &terms {
                lp.objective[v.0] = sign * w;
            }
            let sol = solve_lp_from(&lp, tol, basis.as_ref())?;
            if sol.status != LpStatus::Optimal {
                return Err(Error::Audit(format!("attack polytope LP {:?} for line {}", sol.status, k + 1)));
            }
            range[slot] = sign * sol.objective;
            basis = sol.basis().cloned();
        }
        // round-off never widens a degenerate range into a sign change
        let clip = |v: f64| if v.abs() < 1e-9 { 0.0 } else { v };
        out.push((clip(range[0]), clip(range[1])));
    }
    Ok(out)
}

/// Builds the MILP over working sets `lines` (Q) and `gens` (R). Generators
/// outside `gens` are pinned to `baseline`.
pub fn build_attack_milp(
    grid: &Grid,
    inst: &AttackInstance,
    lines: &[usize],
    gens: &[usize],
    baseline: &[f64],
    direction: f64,
) -> Result<AttackMilp> {
    inst.validate(grid)?;
    let ng = grid.n_gen();
    if baseline.len() != ng {
        return Err(Error::Instance("baseline dispatch length mismatch".into()));
    }
    let lines: Vec<usize> = lines.iter().copied().collect::<BTreeSet<_>>().into_iter().filter(|&k| grid.rating(k).is_finite()).collect();
    let gens: Vec<usize> = gens.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if lines.iter().any(|&k| k >= grid.n_branch()) || gens.iter().any(|&g| g >= ng) {
        return Err(Error::Instance("working set index out of range".into()));
    }
    let in_r: Vec<bool> = (0..ng).map(|g| gens.binary_search(&g).is_ok()).collect();
    let fixed: Vec<(usize, f64)> = (0..ng).filter(|&g| !in_r[g]).map(|g| (g, baseline[g])).collect();

    let mut p = MilpProblem::new(LpProblem::new(Sense::Maximize));
    let lp = &mut p.lp;
    let attack = add_attack_polytope(lp, grid, inst, -inst.sigma);
    // defender primal
    let pg: Vec<(usize, VarId)> = gens
        .iter()
        .map(|&g| {
            let gen = &grid.case.generators[g];
            (g, lp.add_var(format!("pg{}", g + 1), gen.pmin, gen.pmax, 0.0))
        })
        .collect();
    // objective: oriented physical flow on the target
    let l = inst.target;
    for &(g, v) in &pg {
        lp.objective[v.0] += direction * grid.gen_ptdf[(l, g)];
    }
    let fixed_flow = |k: usize| -> f64 { fixed.iter().map(|&(g, mw)| grid.gen_ptdf[(k, g)] * mw).sum::<f64>() - grid.load_flow[k] };
    lp.objective_offset = direction * fixed_flow(l);

    // balance
    let pinned: f64 = fixed.iter().map(|&(_, mw)| mw).sum();
    if !pg.is_empty() {
        lp.add_row("balance", pg.iter().map(|&(_, v)| (v, 1.0)), Relation::Eq, grid.case.total_load() - pinned);
    }

    // cyber line flows on Q: linear part in (P_G, c) plus a constant
    let flow_terms = |k: usize| -> Vec<(VarId, f64)> {
        let mut t: Vec<(VarId, f64)> =
            pg.iter().map(|&(g, v)| (v, grid.gen_ptdf[(k, g)])).filter(|(_, a)| a.abs() > 1e-12).collect();
        for (b, w) in grid.attack_row(k) {
            if let Some(&(_, c, _)) = attack.iter().find(|a| a.0 == b) {
                t.push((c, w));
            }
        }
        t
    };

    let sum_q: f64 = lines.iter().map(|&k| grid.rating(k)).sum();
    let dual_m = |own: f64| -> f64 { inst.big_m.unwrap_or(10.0 * own.max(sum_q)) * inst.big_m_scale };

    let lambda = lp.add_var("lambda", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let mut line_duals = Vec::new();
    let mut line_rows = Vec::new();
    for &k in &lines {
        let r = grid.rating(k);
        let m = dual_m(r);
        let fp = lp.add_var(format!("fp{}", k + 1), 0.0, m, 0.0);
        let fm = lp.add_var(format!("fm{}", k + 1), 0.0, m, 0.0);
        line_duals.push((k, fp, fm, m));
        line_rows.push((k, flow_terms(k), fixed_flow(k)));
    }
    let mut gen_duals = Vec::new();
    for &g in &gens {
        let gen = &grid.case.generators[g];
        let m = dual_m(gen.pmax - gen.pmin);
        let ap = lp.add_var(format!("ap{}", g + 1), 0.0, m, 0.0);
        let am = lp.add_var(format!("am{}", g + 1), 0.0, m, 0.0);
        gen_duals.push((g, ap, am, m));
    }

    // primal line limits
    for (k, terms, cst) in &line_rows {
        let r = grid.rating(*k);
        lp.add_range_row(format!("line{}", k + 1), terms.clone(), -r - cst, r - cst);
    }
    // stationarity: C - lambda + sum_k G[k,g] (F+ - F-) + alpha+ - alpha- = 0
    for (&(g, _), &(_, ap, am, _)) in pg.iter().zip(&gen_duals) {
        let mut coeffs = vec![(lambda, -1.0), (ap, 1.0), (am, -1.0)];
        for &(k, fp, fm, _) in &line_duals {
            let a = grid.gen_ptdf[(k, g)];
            if a.abs() > 1e-12 {
                coeffs.push((fp, a));
                coeffs.push((fm, -a));
            }
        }
        lp.add_row(format!("stat{}", g + 1), coeffs, Relation::Eq, -grid.case.generators[g].cost);
    }

    // complementarity
    let mut line_out = Vec::new();
    for ((k, terms, cst), &(_, fp, fm, m)) in line_rows.iter().zip(&line_duals) {
        let k = *k;
        let r = grid.rating(k);
        let mp = 2.0 * r;
        let dp = p.add_binary(format!("dfp{}", k + 1), 0.0);
        let dm = p.add_binary(format!("dfm{}", k + 1), 0.0);
        let lp = &mut p.lp;
        lp.add_row(format!("cfp{}", k + 1), [(fp, 1.0), (dp, -m)], Relation::Le, 0.0);
        lp.add_row(format!("cfm{}", k + 1), [(fm, 1.0), (dm, -m)], Relation::Le, 0.0);
        // r - f <= mp (1 - d+)
        let mut up: Vec<(VarId, f64)> = terms.iter().map(|&(v, a)| (v, -a)).collect();
        up.push((dp, mp));
        lp.add_row(format!("tfp{}", k + 1), up, Relation::Le, mp - r + cst);
        // f + r <= mp (1 - d-)
        let mut lo = terms.clone();
        lo.push((dm, mp));
        lp.add_row(format!("tfm{}", k + 1), lo, Relation::Le, mp - r - cst);
        lp.add_row(format!("one{}", k + 1), [(dp, 1.0), (dm, 1.0)], Relation::Le, 1.0);
        line_out.push((k, fp, fm, dp, dm));
    }
    let mut gen_out = Vec::new();
    for (&(g, v), &(_, ap, am, m)) in pg.iter().zip(&gen_duals) {
        let gen = &grid.case.generators[g];
        let mg = gen.pmax - gen.pmin;
        let dp = p.add_binary(format!("dap{}", g + 1), 0.0);
        let dm = p.add_binary(format!("dam{}", g + 1), 0.0);
        let lp = &mut p.lp;
        lp.add_row(format!("cap{}", g + 1), [(ap, 1.0), (dp, -m)], Relation::Le, 0.0);
        lp.add_row(format!("cam{}", g + 1), [(am, 1.0), (dm, -m)], Relation::Le, 0.0);
        lp.add_row(format!("tap{}", g + 1), [(v, -1.0), (dp, mg)], Relation::Le, mg - gen.pmax);
        lp.add_row(format!("tam{}", g + 1), [(v, 1.0), (dm, mg)], Relation::Le, mg + gen.pmin);
        if mg > 0.0 {
            lp.add_row(format!("onea{}", g + 1), [(dp, 1.0), (dm, 1.0)], Relation::Le, 1.0);
        }
        gen_out.push((g, ap, am, dp, dm));
    }

    if inst.strong_duality && !pg.is_empty() {
        let ranges = attack_flow_ranges(grid, inst, &lines, &Tolerances::default())?;
        let demand = grid.case.total_load() - pinned;
        add_strong_duality(&mut p, grid, &pg, lambda, &line_rows, &line_duals, &gen_duals, &attack, &ranges, demand);
    }

    Ok(AttackMilp {
        problem: p,
        direction,
        attack: attack.clone(),
        pg,
        fixed,
        lambda,
        line_duals: line_out,
        gen_duals: gen_out,
        lines,
        gens,
    })
}

/// `sum C P <= dual objective`; the products of line multipliers with the
/// attack flow get McCormick envelopes.
#[allow(clippy::too_many_arguments)]
fn add_strong_duality(
    p: &mut MilpProblem,
    grid: &Grid,
    pg: &[(usize, VarId)],
    lambda: VarId,
    line_rows: &[(usize, Vec<(VarId, f64)>, f64)],
    line_duals: &[(usize, VarId, VarId, f64)],
    gen_duals: &[(usize, VarId, VarId, f64)],
    attack: &[(usize, VarId, VarId)],
    ranges: &[(f64, f64)],
    demand: f64,
) {
    let lp = &mut p.lp;
    let mut row: Vec<(VarId, f64)> = pg.iter().map(|&(g, v)| (v, grid.case.generators[g].cost)).collect();
    row.push((lambda, -demand));
    for (i, ((k, _, cst), &(_, fp, fm, m))) in line_rows.iter().zip(line_duals).enumerate() {
        let r = grid.rating(*k);
        row.push((fp, r - cst));
        row.push((fm, r + cst));
        let terms: Vec<(VarId, f64)> = grid
            .attack_row(*k)
            .into_iter()
            .filter_map(|(b, w)| attack.iter().find(|a| a.0 == b).map(|a| (a.1, w)))
            .collect();
        if terms.is_empty() {
            continue;
        }
        let (lo, hi) = ranges[i];
        if lo == 0.0 && hi == 0.0 {
            continue;
        }
        // w+ ~ F+ a, w- ~ F- a with a in [lo, hi], F in [0, m]
        let big = m * lo.abs().max(hi.abs());
        let wp = lp.add_var(format!("wp{}", k + 1), -big, big, 0.0);
        let wm = lp.add_var(format!("wm{}", k + 1), -big, big, 0.0);
        lp.add_row(format!("mcp1_{}", k + 1), [(wp, 1.0), (fp, -hi)], Relation::Le, 0.0);
        let mut r2: Vec<(VarId, f64)> = vec![(wp, 1.0), (fp, -lo)];
        r2.extend(terms.iter().map(|&(v, a)| (v, -m * a)));
        lp.add_row(format!("mcp2_{}", k + 1), r2, Relation::Le, -m * lo);
        lp.add_row(format!("mcm1_{}", k + 1), [(wm, 1.0), (fm, -lo)], Relation::Ge, 0.0);
        let mut r4: Vec<(VarId, f64)> = vec![(wm, 1.0), (fm, -hi)];
        r4.extend(terms.iter().map(|&(v, a)| (v, -m * a)));
        lp.add_row(format!("mcm2_{}", k + 1), r4, Relation::Ge, -m * hi);
        row.push((wp, -1.0));
        row.push((wm, 1.0));
    }
    for (&(g, _), &(_, ap, am, _)) in pg.iter().zip(gen_duals) {
        let gen = &grid.case.generators[g];
        row.push((ap, gen.pmax));
        row.push((am, -gen.pmin));
    }
    lp.add_row("duality", row, Relation::Le, 0.0);
}

/// Completes a relaxation by dispatching against its attack vector and
/// reading the indicators off the dispatch multipliers.
struct DispatchHeuristic<'a> {
    grid: &'a Grid,
    model: &'a AttackMilp,
    tol: Tolerances,
    tried_baseline: bool,
}

impl MilpHeuristic for DispatchHeuristic<'_> {
    fn propose(&mut self, x: &[f64]) -> Option<Vec<f64>> {
        let c = self.model.attack_vector(x, self.grid.n_bus());
        let req = DcopfRequest { attack: Some(&c), lines: Some(&self.model.lines), fixed: Some(&self.model.fixed) };
        match solve_dcopf(self.grid, req, &self.tol) {
            Ok(d) => Some(self.model.assignment_from(&d)),
            Err(_) if !self.tried_baseline => {
                self.tried_baseline = true;
                let req = DcopfRequest { attack: None, ..req };
                solve_dcopf(self.grid, req, &self.tol).ok().map(|d| self.model.assignment_from(&d))
            }
            Err(_) => None,
        }
    }
}

struct MilpOutcome {
    c: Vec<f64>,
    dispatch: Vec<f64>,
    objective: f64,
    penalty: f64,
    nodes: usize,
    limit_hit: bool,
}

/// Shrinks `c` so its l1 norm does not exceed `n1` and drops round-off.
pub(crate) fn clean_attack(c: &mut [f64], n1: f64) {
    for v in c.iter_mut() {
        if v.abs() < 1e-12 {
            *v = 0.0;
        }
    }
    let l1: f64 = c.iter().map(|v| v.abs()).sum();
    if l1 > n1 && l1 > 0.0 {
        let f = n1 / l1;
        c.iter_mut().for_each(|v| *v *= f);
    }
}

fn solve_model(grid: &Grid, inst: &AttackInstance, model: &AttackMilp, opts: &AttackOptions) -> Result<MilpOutcome> {
    let mut h = DispatchHeuristic { grid, model, tol: opts.milp.tol, tried_baseline: false };
    let report = solve_milp_with(&model.problem, &opts.milp, Some(&mut h))?;
    let x = &report.solution.x;
    let mut c = model.attack_vector(x, grid.n_bus());
    clean_attack(&mut c, inst.n1);
    let dispatch = model.dispatch(x, grid.n_gen());
    let flow = grid.flows_unchecked(&dispatch)[inst.target];
    let penalty = inst.sigma * c.iter().map(|v| v.abs()).sum::<f64>();
    debug!(
        "attack milp: {} binaries, {} nodes, objective {:.6}, bound {:.6}",
        model.num_binaries(),
        report.nodes,
        report.objective,
        report.best_bound
    );
    Ok(MilpOutcome {
        c,
        dispatch,
        objective: model.direction * flow,
        penalty,
        nodes: report.nodes,
        limit_hit: report.status == MilpStatus::LimitReached,
    })
}

fn overflowing(grid: &Grid, flows: &[f64], exclude: &BTreeSet<usize>, tol: f64) -> Vec<usize> {
    (0..grid.n_branch())
        .filter(|k| !exclude.contains(k))
        .filter(|&k| grid.rating(k).is_finite() && flows[k].abs() > grid.rating(k) + tol)
        .collect()
}

fn one_based(v: impl IntoIterator<Item = usize>) -> Vec<usize> {
    v.into_iter().map(|k| k + 1).collect()
}

/// Solves the full MILP (`Q` = all rated lines, `R` = all generators).
pub fn solve_full_milp(grid: &Grid, inst: &AttackInstance, opts: &AttackOptions) -> Result<AttackResult> {
    let start = Instant::now();
    inst.validate(grid)?;
    let base = solve_dcopf(grid, DcopfRequest::default(), &opts.milp.tol)?;
    let dir = flow_direction(base.physical_flows[inst.target]);
    let lines: Vec<usize> = (0..grid.n_branch()).collect();
    let gens: Vec<usize> = (0..grid.n_gen()).collect();
    let model = build_attack_milp(grid, inst, &lines, &gens, &base.pg, dir)?;
    let out = solve_model(grid, inst, &model, &opts.remaining(start))?;
    let rec = IterationRecord {
        iteration: 1,
        lines: one_based(model.lines.iter().copied()),
        gens: one_based(model.gens.iter().copied()),
        binaries: model.num_binaries(),
        incumbent: out.objective,
        nodes: out.nodes,
        added_lines: vec![],
        added_gens: vec![],
    };
    finish(grid, inst, out, dir, 1, model.lines, model.gens, vec![rec], BoundType::Exact, None)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    grid: &Grid,
    inst: &AttackInstance,
    out: MilpOutcome,
    dir: f64,
    iterations: usize,
    lines: Vec<usize>,
    gens: Vec<usize>,
    trace: Vec<IterationRecord>,
    bound_type: BoundType,
    post: Option<(f64, Vec<f64>)>,
) -> Result<AttackResult> {
    audit_attack(grid, inst, &out.c)?;
    let cost: f64 = grid.case.generators.iter().zip(&out.dispatch).map(|(g, p)| g.cost * p).sum();
    let (objective, post_dispatch) = match post {
        Some((obj, pg)) => (obj, Some(pg)),
        None => (out.objective, None),
    };
    Ok(AttackResult {
        objective,
        penalty: out.penalty,
        binaries: trace.iter().map(|r| r.binaries).collect(),
        c: out.c,
        dispatch: out.dispatch,
        dispatch_cost: cost,
        post_dispatch,
        bound_type,
        iterations,
        lines,
        gens,
        limit_hit: out.limit_hit,
        direction: dir,
        trace,
    })
}

/// Row generation: exact worst case.
pub fn solve_rg(grid: &Grid, inst: &AttackInstance, opts: &AttackOptions) -> Result<AttackResult> {
    let start = Instant::now();
    inst.validate(grid)?;
    let base = solve_dcopf(grid, DcopfRequest::default(), &opts.milp.tol)?;
    let dir = flow_direction(base.physical_flows[inst.target]);
    let mut q: BTreeSet<usize> = find_critical_lines(&base.physical_flows, &grid.case, opts.critical_threshold).into_iter().collect();
    q.insert(inst.target);
    let gens: Vec<usize> = (0..grid.n_gen()).collect();
    let mut trace = Vec::new();
    let mut limit_hit = false;
    for it in 1..=opts.max_iterations {
        let lines: Vec<usize> = q.iter().copied().collect();
        let model = build_attack_milp(grid, inst, &lines, &gens, &base.pg, dir)?;
        let out = solve_model(grid, inst, &model, &opts.remaining(start))?;
        limit_hit |= out.limit_hit;
        let cyber = grid.cyber_flows(&out.dispatch, &out.c)?;
        let added = overflowing(grid, &cyber, &q, opts.overflow_tol);
        trace.push(IterationRecord {
            iteration: it,
            lines: one_based(lines.iter().copied()),
            gens: one_based(gens.iter().copied()),
            binaries: model.num_binaries(),
            incumbent: out.objective,
            nodes: out.nodes,
            added_lines: one_based(added.iter().copied()),
            added_gens: vec![],
        });
        let done = added.is_empty();
        let expired = opts.time_limit.is_some_and(|t| start.elapsed() >= t);
        limit_hit |= expired && !done;
        if done || expired || it == opts.max_iterations {
            if !done {
                warn!("row generation stopped at the iteration cap with overloaded lines {added:?}");
            }
            let bound = if done && !limit_hit { BoundType::Exact } else { BoundType::LowerBound };
            let mut res = finish(grid, inst, out, dir, it, lines, gens, trace, bound, None)?;
            res.limit_hit = limit_hit;
            return Ok(res);
        }
        q.extend(added);
    }
    Err(Error::Instance("iteration cap must be positive".into()))
}

/// Row-and-column generation: feasible attack whose true post-attack
/// target flow is reported.
pub fn solve_rcg(grid: &Grid, inst: &AttackInstance, opts: &AttackOptions) -> Result<AttackResult> {
    let start = Instant::now();
    inst.validate(grid)?;
    let tol = opts.milp.tol;
    let base = solve_dcopf(grid, DcopfRequest::default(), &tol)?;
    let dir = flow_direction(base.physical_flows[inst.target]);
    let mut q: BTreeSet<usize> = find_critical_lines(&base.physical_flows, &grid.case, opts.critical_threshold).into_iter().collect();
    q.insert(inst.target);
    let mut r: BTreeSet<usize> = find_marginal_generators(&base.pg, &grid.case, opts.marginal_tol).into_iter().collect();
    let mut trace = Vec::new();
    let mut limit_hit = false;
    for it in 1..=opts.max_iterations {
        let lines: Vec<usize> = q.iter().copied().collect();
        let gens: Vec<usize> = r.iter().copied().collect();
        let model = build_attack_milp(grid, inst, &lines, &gens, &base.pg, dir)?;
        let out = solve_model(grid, inst, &model, &opts.remaining(start))?;
        limit_hit |= out.limit_hit;
        let post = match solve_dcopf(grid, DcopfRequest { attack: Some(&out.c), ..Default::default() }, &tol) {
            Ok(d) => Some(d),
            Err(Error::DcopfInfeasible) => None,
            Err(e) => return Err(e),
        };
        let added_gens: Vec<usize> = match &post {
            Some(d) => (0..grid.n_gen())
                .filter(|g| !r.contains(g))
                .filter(|&g| (d.pg[g] - out.dispatch[g]).abs() > opts.marginal_tol)
                .collect(),
            None => vec![],
        };
        let cyber = grid.cyber_flows(&out.dispatch, &out.c)?;
        let added_lines = overflowing(grid, &cyber, &q, opts.overflow_tol);
        trace.push(IterationRecord {
            iteration: it,
            lines: one_based(lines.iter().copied()),
            gens: one_based(gens.iter().copied()),
            binaries: model.num_binaries(),
            incumbent: out.objective,
            nodes: out.nodes,
            added_lines: one_based(added_lines.iter().copied()),
            added_gens: one_based(added_gens.iter().copied()),
        });
        let converged = added_gens.is_empty() && added_lines.is_empty();
        let expired = opts.time_limit.is_some_and(|t| start.elapsed() >= t);
        limit_hit |= expired && !converged;
        if converged || expired || it == opts.max_iterations {
            let Some(d) = post else {
                return Err(Error::Audit("post-attack dispatch infeasible without any overloaded line".into()));
            };
            if !converged {
                warn!("row-and-column generation stopped at the iteration cap");
            }
            let true_flow = dir * d.physical_flows[inst.target];
            let mut res =
                finish(grid, inst, out, dir, it, lines, gens, trace, BoundType::LowerBound, Some((true_flow, d.pg)))?;
            res.limit_hit = limit_hit;
            return Ok(res);
        }
        for g in &added_gens {
            assert!(r.insert(*g), "generator {g} re-entered the working set");
        }
        q.extend(added_lines);
    }
    Err(Error::Instance("iteration cap must be positive".into()))
}

/// Unobservability and budget checks on an attack vector.
pub fn audit_attack(grid: &Grid, inst: &AttackInstance, c: &[f64]) -> Result<()> {
    if c.len() != grid.n_bus() {
        return Err(Error::Audit("attack vector length mismatch".into()));
    }
    let allowed = grid.attackable_buses();
    for (i, &v) in c.iter().enumerate() {
        if v != 0.0 && allowed.binary_search(&i).is_err() {
            return Err(Error::Audit(format!("attack touches non-load bus {}", grid.case.buses[i].id)));
        }
    }
    let hc = grid.injection(c);
    let total = grid.case.total_load();
    let sum: f64 = hc.iter().sum();
    if sum.abs() > 1e-6 * total.max(1.0) {
        return Err(Error::Audit(format!("attack changes total injection by {sum:e} MW")));
    }
    for (i, &v) in hc.iter().enumerate() {
        let lim = inst.load_shift * grid.load[i].abs() + 1e-6;
        if v.abs() > lim {
            return Err(Error::Audit(format!("bus {} shifted by {v} MW, limit {lim}", grid.case.buses[i].id)));
        }
    }
    let l1: f64 = c.iter().map(|v| v.abs()).sum();
    if l1 > inst.n1 + 1e-8 {
        return Err(Error::Audit(format!("attack l1 norm {l1} exceeds budget {}", inst.n1)));
    }
    Ok(())
}
