use crate::simplex::Basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of an LP solve.
///
/// Sign convention for duals: `row_duals[i]` is the rate of change of the
/// optimal objective (in the problem's own sense) per unit increase of the
/// active right-hand side of row `i`; `reduced_costs[j]` is the same for the
/// active bound of column `j`. Hence for a minimization a binding `>=` row has
/// a nonnegative dual and a binding `<=` row a nonpositive one; for a
/// maximization the signs flip. Inactive rows and basic columns report zero.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub row_activity: Vec<f64>,
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Row multipliers proving infeasibility: for every point of the column
    /// box, `sum_i u_i (a_i . x)` stays strictly below the smallest value of
    /// `sum_i u_i w_i` over the row ranges.
    pub farkas: Option<Vec<f64>>,
    pub(crate) basis: Option<Basis>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub(crate) fn empty(status: LpStatus, n: usize, m: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            row_activity: vec![0.0; m],
            row_duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            objective: f64::NAN,
            iterations: 0,
            farkas: None,
            basis: None,
        }
    }
}
