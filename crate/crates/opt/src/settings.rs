/// Numerical tolerances shared by the LP and MILP solvers.
///
/// `feas_tol`, `gap_tol` and `cs_tol` are the user-facing audit tolerances
/// and are measured in the unscaled problem. The remaining fields steer the
/// simplex internals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Primal feasibility of rows and bounds.
    pub feas_tol: f64,
    /// Relative optimality gap (strong duality for LPs, incumbent/bound for MILPs).
    pub gap_tol: f64,
    /// Absolute optimality gap added on top of `gap_tol`.
    pub abs_gap_tol: f64,
    /// Complementary slackness products.
    pub cs_tol: f64,
    /// Reduced cost tolerance in the scaled problem.
    pub opt_tol: f64,
    /// Smallest admissible pivot magnitude in the scaled problem.
    pub pivot_tol: f64,
    /// Hard cap on simplex iterations per solve (0 = automatic).
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            gap_tol: 1e-6,
            abs_gap_tol: 1e-9,
            cs_tol: 1e-6,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 0,
            bland_after: 60,
        }
    }
}
