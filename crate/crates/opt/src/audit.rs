//! Post-solve checks that do not trust the solver's internal state: they
//! recompute residuals, sign conditions and the duality gap from the
//! original problem data and the returned vectors only.

use crate::problem::{LpProblem, Sense};
use crate::settings::Tolerances;
use crate::simplex::farkas_gap;
use crate::solution::LpSolution;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AuditReport {
    /// Worst bound or row violation, relative to `1 + |bound|`.
    pub primal_violation: f64,
    /// Worst wrong-signed dual (a multiplier on a side that is infinite or
    /// pointing the wrong way), relative to `1 + |dual|`.
    pub dual_violation: f64,
    /// Worst `|multiplier| * slack` product.
    pub complementarity: f64,
    /// `|primal objective - dual objective|`.
    pub duality_gap: f64,
    pub objective_scale: f64,
}

impl AuditReport {
    pub fn passes(&self, tol: &Tolerances) -> bool {
        let scale = self.objective_scale.max(1.0);
        self.primal_violation <= tol.feas_tol
            && self.dual_violation <= tol.cs_tol
            && self.complementarity <= tol.cs_tol * scale
            && self.duality_gap <= tol.gap_tol * scale
    }
}

/// Audits a solution claimed optimal.
pub fn audit_lp(p: &LpProblem, sol: &LpSolution) -> AuditReport {
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut r = AuditReport::default();
    let x = &sol.x;
    let mut dual_obj = p.objective_offset;
    let mut scale = p.objective_offset.abs();
    // dual quantities are judged relative to the largest cost coefficient
    let cmax = p.objective.iter().fold(0.0f64, |a, c| a.max(c.abs()));

    for j in 0..p.num_vars() {
        let (l, u, v) = (p.lower[j], p.upper[j], x[j]);
        if v < l {
            r.primal_violation = r.primal_violation.max((l - v) / (1.0 + l.abs()));
        }
        if v > u {
            r.primal_violation = r.primal_violation.max((v - u) / (1.0 + u.abs()));
        }
        // min-sense reduced cost: positive pushes against the lower bound
        let d = sign * sol.reduced_costs[j];
        let (bound, slack) = if d > 0.0 { (l, v - l) } else { (u, u - v) };
        if d != 0.0 {
            if !bound.is_finite() {
                r.dual_violation = r.dual_violation.max(d.abs() / (1.0 + cmax));
            } else {
                r.complementarity = r.complementarity.max(d.abs() * slack.abs());
                dual_obj += sol.reduced_costs[j] * bound;
            }
        }
        scale = scale.max((p.objective[j] * v).abs());
    }
    for (i, row) in p.rows.iter().enumerate() {
        let act = row.activity(x);
        if act < row.lower {
            r.primal_violation = r.primal_violation.max((row.lower - act) / (1.0 + row.lower.abs()));
        }
        if act > row.upper {
            r.primal_violation = r.primal_violation.max((act - row.upper) / (1.0 + row.upper.abs()));
        }
        let y = sign * sol.row_duals[i];
        let (bound, slack) = if y > 0.0 { (row.lower, act - row.lower) } else { (row.upper, row.upper - act) };
        if y != 0.0 {
            if !bound.is_finite() {
                let amax = row.coeffs.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
                r.dual_violation = r.dual_violation.max(y.abs() * amax.max(1e-12) / (1.0 + cmax));
            } else {
                r.complementarity = r.complementarity.max(y.abs() * slack.abs());
                dual_obj += sol.row_duals[i] * bound;
            }
        }
    }
    // stationarity: c = A^T y + d must hold for the reported multipliers
    let mut resid = p.objective.clone();
    let mut mag: Vec<f64> = p.objective.iter().map(|c| c.abs()).collect();
    for (i, row) in p.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            resid[j] -= a * sol.row_duals[i];
            mag[j] += (a * sol.row_duals[i]).abs();
        }
    }
    for j in 0..p.num_vars() {
        let e = (resid[j] - sol.reduced_costs[j]).abs();
        r.dual_violation = r.dual_violation.max(e / (1.0 + mag[j]));
    }
    r.duality_gap = (sol.objective - dual_obj).abs();
    r.objective_scale = scale.max(sol.objective.abs());
    r
}

/// Returns true when `u` proves that `p` has no feasible point.
pub fn verify_farkas(p: &LpProblem, u: &[f64]) -> bool {
    u.len() == p.num_rows() && farkas_gap(p, u) > 0.0
}
