//! Linear and mixed-binary programming for the attack models.
//!
//! [`solve_lp`] is a bounded-variable revised simplex with row/column
//! scaling, Harris ratio test and a Bland fallback. Optimal answers carry
//! row duals and reduced costs and are audited before they are returned;
//! infeasible answers carry a Farkas certificate. [`solve_milp_with`] runs
//! branch and bound on top of it with warm-started node LPs.

mod audit;
mod error;
mod lp;
mod milp;
mod problem;
mod settings;
mod simplex;
mod solution;

pub use audit::{audit_lp, verify_farkas, AuditReport};
pub use error::{OptError, OptResult};
pub use lp::{solve_lp, solve_lp_from};
pub use milp::{solve_milp, solve_milp_with, MilpHeuristic, MilpOptions, MilpReport, MilpStatus};
pub use problem::{LpProblem, MilpProblem, Relation, Row, RowId, Sense, VarId};
pub use settings::Tolerances;
pub use simplex::Basis;
pub use solution::{LpSolution, LpStatus};
