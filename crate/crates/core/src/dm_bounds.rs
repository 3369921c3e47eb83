//! Cyber-physical difference maximization.
//!
//! One LP picks the attack that maximizes the gap between the cyber and
//! the physical flow on the target. Since the dispatch keeps the cyber flow
//! within the rating, rating plus that gap bounds every attack from above;
//! re-dispatching against the same attack gives a feasible lower bound.

use fdiva_opt::{solve_lp, LpProblem, LpStatus, Sense, Tolerances, VarId};
use serde::Serialize;

use crate::attack_milp::{add_attack_polytope, audit_attack, clean_attack, flow_direction, AttackInstance};
use crate::dcopf::{optimal_flow_range, solve_dcopf, DcopfRequest};
use crate::error::{Error, Result};
use crate::grid_model::Grid;

#[derive(Debug, Clone, Serialize)]
pub struct DmResult {
    pub c: Vec<f64>,
    /// MW, oriented along the baseline flow like every objective.
    pub upper_bound: f64,
    pub lower_bound: f64,
    /// Cyber target flow sits at the rating after re-dispatch.
    pub tight: bool,
    /// Re-dispatch was infeasible; `lower_bound` is the baseline flow.
    pub post_infeasible: bool,
    /// Other optimal re-dispatches move the target flow by more than 1e-6 MW.
    pub vertex_dependent: bool,
    /// Largest cyber minus physical target flow.
    pub difference: f64,
    pub direction: f64,
    pub post_dispatch: Option<Vec<f64>>,
}

impl DmResult {
    pub fn l1(&self) -> f64 {
        self.c.iter().map(|v| v.abs()).sum()
    }
}

pub fn solve_dm(grid: &Grid, inst: &AttackInstance, tol: &Tolerances) -> Result<DmResult> {
    inst.validate(grid)?;
    let l = inst.target;
    let rating = grid.rating(l);
    let base = solve_dcopf(grid, DcopfRequest::default(), tol)?;
    let dir = flow_direction(base.physical_flows[l]);

    let mut lp = LpProblem::new(Sense::Maximize);
    let attack = add_attack_polytope(&mut lp, grid, inst, 0.0);
    let terms: Vec<(VarId, f64)> = grid
        .attack_row(l)
        .into_iter()
        .filter_map(|(b, w)| attack.iter().find(|a| a.0 == b).map(|a| (a.1, w)))
        .collect();
    for &(v, w) in &terms {
        lp.objective[v.0] = -dir * w;
    }
    let mut c = vec![0.0; grid.n_bus()];
    if !attack.is_empty() {
        let sol = solve_lp(&lp, tol)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => return Err(Error::Audit("difference LP unbounded".into())),
            LpStatus::Infeasible => return Err(Error::Audit("difference LP infeasible".into())),
        }
        for &(i, v, _) in &attack {
            c[i] = sol.x[v.0];
        }
    }
    clean_attack(&mut c, inst.n1);
    audit_attack(grid, inst, &c)?;
    let difference = -dir * grid.attack_flows(&c)[l];
    let upper_bound = rating + difference;

    let req = DcopfRequest { attack: Some(&c), ..Default::default() };
    let (lower_bound, tight, post_infeasible, vertex_dependent, post_dispatch) = match solve_dcopf(grid, req, tol) {
        Ok(d) => {
            let cyber = dir * d.cyber_flows[l];
            let (lo, hi) = optimal_flow_range(grid, req, l, tol)?;
            let tight = (cyber - rating).abs() <= 1e-6 * rating;
            (dir * d.physical_flows[l], tight, false, hi - lo > 1e-6, Some(d.pg))
        }
        Err(Error::DcopfInfeasible) => (dir * base.physical_flows[l], false, true, false, None),
        Err(e) => return Err(e),
    };
    Ok(DmResult {
        c,
        upper_bound,
        lower_bound,
        tight,
        post_infeasible,
        vertex_dependent,
        difference,
        direction: dir,
        post_dispatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::parse_case;

    fn case3() -> Grid {
        Grid::new(parse_case(include_str!("../fixtures/case3_fdi.m")).unwrap()).unwrap()
    }

    #[test]
    fn zero_budget_gives_rating_and_baseline() {
        let g = case3();
        let r = solve_dm(&g, &AttackInstance::new(2, 0.0, 0.1), &Tolerances::default()).unwrap();
        assert!(r.c.iter().all(|&v| v == 0.0));
        assert!((r.upper_bound - 60.0).abs() < 1e-9);
        let base = solve_dcopf(&g, DcopfRequest::default(), &Tolerances::default()).unwrap();
        assert!((r.lower_bound - base.physical_flows[2].abs()).abs() < 1e-9);
    }

    #[test]
    fn bounds_are_ordered() {
        let g = case3();
        for n1 in [0.01, 0.1, 1.0] {
            let r = solve_dm(&g, &AttackInstance::new(2, n1, 0.1), &Tolerances::default()).unwrap();
            assert!(r.lower_bound <= r.upper_bound + 1e-9);
            assert!(r.difference >= 0.0);
        }
    }
}
