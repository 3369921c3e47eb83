//! Defender's economic dispatch with PTDF line limits.

use fdiva_opt::{solve_lp, LpProblem, LpStatus, Relation, Sense, Tolerances, VarId};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid_model::Grid;

/// Optional modifiers of the dispatch problem.
#[derive(Debug, Clone, Copy, Default)]
pub struct DcopfRequest<'a> {
    /// Attack vector `c` (one entry per bus).
    pub attack: Option<&'a [f64]>,
    /// Only these lines get limit rows; `None` means every rated line.
    pub lines: Option<&'a [usize]>,
    /// Generators pinned to a given output, `(generator, MW)`.
    pub fixed: Option<&'a [(usize, f64)]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchSolution {
    pub pg: Vec<f64>,
    /// Dual of the balance row, $/MWh.
    pub lambda: f64,
    /// Duals of the upper and lower line limits; zero for lines without a row.
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    /// Duals of `P_G <= P_max` and `P_G >= P_min`; zero for pinned units.
    pub alpha_plus: Vec<f64>,
    pub alpha_minus: Vec<f64>,
    pub cost: f64,
    pub physical_flows: Vec<f64>,
    pub cyber_flows: Vec<f64>,
}

impl DispatchSolution {
    /// Worst residual of `C - lambda + G^T (F+ - F-) + alpha+ - alpha- = 0`
    /// over generators that are not pinned.
    pub fn stationarity_residual(&self, grid: &Grid, pinned: &[bool]) -> f64 {
        let mut worst = 0.0f64;
        for g in 0..grid.n_gen() {
            if pinned[g] {
                continue;
            }
            let mut r = grid.case.generators[g].cost - self.lambda + self.alpha_plus[g] - self.alpha_minus[g];
            for k in 0..grid.n_branch() {
                r += grid.gen_ptdf[(k, g)] * (self.f_plus[k] - self.f_minus[k]);
            }
            let scale = grid.case.generators[g].cost.abs().max(1.0);
            worst = worst.max(r.abs() / scale);
        }
        worst
    }
}

struct DcopfLp {
    lp: LpProblem,
    vars: Vec<VarId>,
    line_rows: Vec<(usize, usize)>,
    pinned: Vec<bool>,
    attack: Vec<f64>,
}

fn build_dcopf(grid: &Grid, req: DcopfRequest<'_>) -> Result<DcopfLp> {
    let (nb, nbr, ng) = (grid.n_bus(), grid.n_branch(), grid.n_gen());
    let zero = vec![0.0; nb];
    let c = req.attack.unwrap_or(&zero);
    if c.len() != nb {
        return Err(Error::Instance(format!("attack vector has {} entries for {nb} buses", c.len())));
    }
    let attack = grid.attack_flows(c);
    let inj = grid.injection(c);
    let mut pinned = vec![false; ng];
    let mut p = LpProblem::new(Sense::Minimize);
    let mut vars = Vec::with_capacity(ng);
    for (g, gen) in grid.case.generators.iter().enumerate() {
        vars.push(p.add_var(format!("pg{}", g + 1), gen.pmin, gen.pmax, gen.cost));
    }
    for &(g, mw) in req.fixed.unwrap_or(&[]) {
        if g >= ng {
            return Err(Error::Instance(format!("fixed generator {g} out of range")));
        }
        pinned[g] = true;
        p.set_bounds(vars[g], mw, mw);
    }
    let demand: f64 = (0..nb).map(|i| grid.load[i] - inj[i]).sum();
    p.add_row("balance", vars.iter().map(|&v| (v, 1.0)), Relation::Eq, demand);
    let all: Vec<usize> = (0..nbr).collect();
    let lines = req.lines.unwrap_or(&all);
    let mut line_rows = Vec::new();
    for &k in lines {
        if k >= nbr {
            return Err(Error::Instance(format!("line {k} out of range")));
        }
        let rating = grid.rating(k);
        if !rating.is_finite() {
            continue;
        }
        let off = attack[k] - grid.load_flow[k];
        let coeffs: Vec<(VarId, f64)> =
            (0..ng).map(|g| (vars[g], grid.gen_ptdf[(k, g)])).filter(|(_, a)| a.abs() > 1e-12).collect();
        let row = p.add_range_row(format!("line{}", k + 1), coeffs, -rating - off, rating - off);
        line_rows.push((k, row.0));
    }
    Ok(DcopfLp { lp: p, vars, line_rows, pinned, attack })
}

/// Smallest and largest physical flow on `line` over all optimal dispatches.
pub fn optimal_flow_range(grid: &Grid, req: DcopfRequest<'_>, line: usize, tol: &Tolerances) -> Result<(f64, f64)> {
    let cost = solve_dcopf(grid, req, tol)?.cost;
    let DcopfLp { mut lp, vars, .. } = build_dcopf(grid, req)?;
    let costs: Vec<(VarId, f64)> = vars.iter().zip(&grid.case.generators).map(|(&v, g)| (v, g.cost)).collect();
    lp.add_row("cost", costs, Relation::Le, cost + 1e-9 * cost.abs().max(1.0));
    let mut out = [0.0; 2];
    for (slot, sense) in [(0, Sense::Minimize), (1, Sense::Maximize)] {
        lp.sense = sense;
        for (g, &v) in vars.iter().enumerate() {
            lp.objective[v.0] = grid.gen_ptdf[(line, g)];
        }
        let sol = solve_lp(&lp, tol)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Audit(format!("flow range LP {:?}", sol.status)));
        }
        out[slot] = sol.objective - grid.load_flow[line];
    }
    Ok((out[0], out[1]))
}

/// Solves the dispatch and returns primal values and all multipliers.
pub fn solve_dcopf(grid: &Grid, req: DcopfRequest<'_>, tol: &Tolerances) -> Result<DispatchSolution> {
    let (nbr, ng) = (grid.n_branch(), grid.n_gen());
    let DcopfLp { lp: p, line_rows, pinned, attack, .. } = build_dcopf(grid, req)?;
    let sol = solve_lp(&p, tol)?;
    match sol.status {
        LpStatus::Infeasible => return Err(Error::DcopfInfeasible),
        LpStatus::Unbounded => return Err(Error::DcopfUnbounded),
        LpStatus::Optimal => {}
    }
    let mut f_plus = vec![0.0; nbr];
    let mut f_minus = vec![0.0; nbr];
    for &(k, r) in &line_rows {
        let y = sol.row_duals[r];
        if y < 0.0 {
            f_plus[k] = -y;
        } else {
            f_minus[k] = y;
        }
    }
    let mut alpha_plus = vec![0.0; ng];
    let mut alpha_minus = vec![0.0; ng];
    for g in 0..ng {
        if pinned[g] {
            continue;
        }
        let d = sol.reduced_costs[g];
        if d < 0.0 {
            alpha_plus[g] = -d;
        } else {
            alpha_minus[g] = d;
        }
    }
    let pg = sol.x[..ng].to_vec();
    let physical = grid.flows_unchecked(&pg);
    let cyber: Vec<f64> = physical.iter().zip(&attack).map(|(a, b)| a + b).collect();
    let out = DispatchSolution {
        pg,
        lambda: sol.row_duals[0],
        f_plus,
        f_minus,
        alpha_plus,
        alpha_minus,
        cost: sol.objective,
        physical_flows: physical,
        cyber_flows: cyber,
    };
    let resid = out.stationarity_residual(grid, &pinned);
    if resid > 1e-6 {
        return Err(Error::Audit(format!("dispatch stationarity residual {resid:e}")));
    }
    Ok(out)
}
