use crate::audit::audit_lp;
use crate::error::{OptError, OptResult};
use crate::problem::LpProblem;
use crate::settings::Tolerances;
use crate::simplex::{Basis, Simplex};
use crate::solution::{LpSolution, LpStatus};

/// Solves an LP with the bounded-variable simplex method.
///
/// Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; errors are reserved for malformed input and for
/// numerical breakdown that survives the Bland-rule fallback. Every optimal
/// answer has passed [`audit_lp`](crate::audit_lp) before it is returned.
pub fn solve_lp(p: &LpProblem, tol: &Tolerances) -> OptResult<LpSolution> {
    solve_lp_from(p, tol, None)
}

/// Like [`solve_lp`] but starts from a previously returned basis when one is
/// available (see [`LpSolution::basis`]).
pub fn solve_lp_from(p: &LpProblem, tol: &Tolerances, basis: Option<&Basis>) -> OptResult<LpSolution> {
    p.validate()?;
    let mut engine = Simplex::new(p, *tol);
    if let Some(b) = basis {
        engine.load_basis(b);
    }
    let status = match engine.run() {
        Ok(s) => s,
        Err(_) if basis.is_some() => {
            engine = Simplex::new(p, *tol);
            engine.run()?
        }
        Err(e) => return Err(e),
    };
    let sol = engine.extract(p, status);
    finish(p, tol, sol)
}

pub(crate) fn finish(p: &LpProblem, tol: &Tolerances, sol: LpSolution) -> OptResult<LpSolution> {
    if sol.status == LpStatus::Optimal {
        let report = audit_lp(p, &sol);
        if !report.passes(tol) {
            return Err(OptError::Numerical(format!("solution failed audit: {report:?}")));
        }
    }
    Ok(sol)
}

impl LpSolution {
    /// Basis of an optimal solution, for warm starts.
    pub fn basis(&self) -> Option<&Basis> {
        self.basis.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::verify_farkas;
    use crate::problem::{Relation, Sense};

    const INF: f64 = f64::INFINITY;

    #[test]
    fn min_x_at_least_three() {
        let mut p = LpProblem::new(Sense::Minimize);
        let x = p.add_var("x", -INF, INF, 1.0);
        p.add_row("r", [(x, 1.0)], Relation::Ge, 3.0);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert!(s.is_optimal());
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!((s.row_duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_x_with_slack_second_row() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_var("x", -INF, INF, 1.0);
        p.add_row("a", [(x, 1.0)], Relation::Le, 1.0);
        p.add_row("b", [(x, 1.0)], Relation::Le, 2.0);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.row_duals[0] - 1.0).abs() < 1e-12);
        assert_eq!(s.row_duals[1], 0.0);
    }

    #[test]
    fn dual_signs_follow_convention() {
        // min x + y, x + y >= 2, x <= 5 ; max flips the sign
        let mut p = LpProblem::new(Sense::Minimize);
        let x = p.add_var("x", 0.0, INF, 1.0);
        let y = p.add_var("y", 0.0, INF, 2.0);
        p.add_row("ge", [(x, 1.0), (y, 1.0)], Relation::Ge, 2.0);
        p.add_row("le", [(x, 1.0)], Relation::Le, 1.5);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert!((s.objective - 2.5).abs() < 1e-12);
        assert!((s.row_duals[0] - 2.0).abs() < 1e-12);
        assert!((s.row_duals[1] + 1.0).abs() < 1e-12);

        let mut q = p.clone();
        q.sense = Sense::Maximize;
        q.objective = vec![-1.0, -2.0];
        let t = solve_lp(&q, &Tolerances::default()).unwrap();
        assert!((t.objective + 2.5).abs() < 1e-12);
        assert!((t.row_duals[0] + 2.0).abs() < 1e-12);
        assert!((t.row_duals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_has_certificate() {
        let mut p = LpProblem::new(Sense::Minimize);
        let x = p.add_var("x", 0.0, 10.0, 1.0);
        let y = p.add_var("y", 0.0, 10.0, 1.0);
        p.add_row("a", [(x, 1.0), (y, 1.0)], Relation::Ge, 5.0);
        p.add_row("b", [(x, 1.0), (y, -1.0)], Relation::Eq, 0.0);
        p.add_row("c", [(x, 1.0)], Relation::Le, 2.0);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        let u = s.farkas.expect("certificate");
        assert!(verify_farkas(&p, &u));
    }

    #[test]
    fn infeasible_bounds_only() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_var("x", 0.0, 1.0, 1.0);
        p.add_row("a", [(x, 2.0)], Relation::Ge, 3.0);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(verify_farkas(&p, s.farkas.as_ref().unwrap()));
    }

    #[test]
    fn unbounded_detected() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_var("x", 0.0, INF, 1.0);
        let y = p.add_var("y", 0.0, INF, 0.0);
        p.add_row("a", [(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // classic cycling example (Beale)
        let mut p = LpProblem::new(Sense::Minimize);
        let v: Vec<_> = [-0.75, 150.0, -0.02, 6.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| p.add_var(format!("x{i}"), 0.0, INF, c))
            .collect();
        p.add_row("a", [(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)], Relation::Le, 0.0);
        p.add_row("b", [(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)], Relation::Le, 0.0);
        p.add_row("c", [(v[2], 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert!((s.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn fixed_and_free_columns() {
        let mut p = LpProblem::new(Sense::Minimize);
        let a = p.add_var("a", 2.0, 2.0, 1.0);
        let b = p.add_var("b", -INF, INF, 0.0);
        let c = p.add_var("c", -INF, 0.0, -1.0);
        p.add_row("e", [(a, 1.0), (b, 1.0)], Relation::Eq, 7.0);
        p.add_range_row("r", [(b, 1.0), (c, 1.0)], -1.0, 4.0);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert!((s.x[1] - 5.0).abs() < 1e-12);
        assert!((s.x[2] + 1.0).abs() < 1e-12);
        assert!((s.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_problem() {
        let mut p = LpProblem::new(Sense::Minimize);
        p.add_var("x", 1.0, 4.0, 2.0);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert_eq!(s.x, vec![1.0]);
        assert_eq!(s.reduced_costs, vec![2.0]);
    }

    #[test]
    fn badly_scaled_rows() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_var("x", 0.0, INF, 1.0);
        let d = p.add_var("d", 0.0, 1.0, 0.0);
        p.add_row("m", [(x, 1.0), (d, -1e5)], Relation::Le, 0.0);
        p.add_row("cap", [(x, 1e-3)], Relation::Le, 0.25);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        assert!((s.objective - 250.0).abs() < 1e-7);
    }
}
