//! Worst-case line overflow under false data injection on a DC grid.
//!
//! The attacker perturbs state estimates with `c` so the operator re-dispatches
//! against a shifted load picture. [`attack_milp`] gives the exact worst case
//! by row generation and a cheaper lower bound by row-and-column generation,
//! [`dm_bounds`] brackets it with one LP and [`mbd`] runs a Benders-style
//! decomposition. [`assess`] sweeps all of them over targets and budgets.

pub mod assess;
pub mod attack_milp;
pub mod case_io;
pub mod dcopf;
pub mod dm_bounds;
pub mod error;
pub mod mbd;
pub mod grid_model;

pub use error::{Error, Result};
