//! Facts about the 118-bus fixture. Baseline cost from scipy's HiGHS.

mod common;

use common::grid;
use fdiva::attack_milp::{build_attack_milp, solve_rcg, solve_rg, AttackInstance, AttackOptions};
use fdiva::dcopf::{solve_dcopf, DcopfRequest};
use fdiva::grid_model::{find_critical_lines, find_marginal_generators};
use fdiva_opt::Tolerances;

#[test]
fn dimensions_and_baseline() {
    let g = grid("case118");
    assert_eq!((g.n_bus(), g.n_branch(), g.n_gen()), (118, 186, 54));
    let d = solve_dcopf(&g, DcopfRequest::default(), &Tolerances::default()).unwrap();
    assert!((d.cost - 141342.20449421796).abs() < 1e-6 * d.cost);
    let critical: Vec<usize> = find_critical_lines(&d.physical_flows, &g.case, 0.9).iter().map(|k| k + 1).collect();
    assert_eq!(critical, [98, 99, 108, 116, 123, 141, 163]);
    assert_eq!(find_marginal_generators(&d.pg, &g.case, 1e-4).len(), 5);
}

#[test]
fn full_model_binary_count() {
    let g = grid("case118");
    let d = solve_dcopf(&g, DcopfRequest::default(), &Tolerances::default()).unwrap();
    let lines: Vec<usize> = (0..g.n_branch()).collect();
    let gens: Vec<usize> = (0..g.n_gen()).collect();
    let m = build_attack_milp(&g, &AttackInstance::new(140, 1.0, 0.1), &lines, &gens, &d.pg, 1.0).unwrap();
    assert_eq!(m.num_binaries(), 480);
}

#[test]
fn column_generation_reaches_the_exact_value_on_line_141() {
    let g = grid("case118");
    let inst = AttackInstance::new(140, 1.0, 0.1);
    let rg = solve_rg(&g, &inst, &AttackOptions::default()).unwrap();
    let rcg = solve_rcg(&g, &inst, &AttackOptions::default()).unwrap();
    assert!(rcg.objective <= rg.objective + 1e-6);
    assert!((rcg.objective - rg.objective).abs() < 1e-6 * rg.objective.abs().max(1.0));
    assert!(rcg.binaries.iter().max() < rg.binaries.iter().max());
}
