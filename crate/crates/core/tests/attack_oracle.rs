//! Worst-case values from an independent pattern-enumeration oracle.

mod common;

use common::{grid, ORACLE};
use fdiva::attack_milp::{solve_full_milp, solve_rcg, solve_rg, AttackInstance, AttackOptions, BoundType};

#[test]
fn row_generation_matches_enumeration() {
    for &(case, target, n1, ls, value, flow) in ORACLE {
        let g = grid(case);
        let inst = AttackInstance::new(target, n1, ls);
        let r = solve_rg(&g, &inst, &AttackOptions::default()).unwrap();
        assert_eq!(r.bound_type, BoundType::Exact);
        let got = r.objective - r.penalty;
        assert!((got - value).abs() < 1e-6, "{case} line {}: {got} vs {value}", target + 1);
        assert!((r.objective - flow).abs() < 1e-4, "{case} line {}: flow {} vs {flow}", target + 1, r.objective);
    }
}

#[test]
fn full_milp_agrees_with_row_generation() {
    for &(case, target, n1, ls, value, _) in ORACLE {
        let g = grid(case);
        let r = solve_full_milp(&g, &AttackInstance::new(target, n1, ls), &AttackOptions::default()).unwrap();
        assert!((r.objective - r.penalty - value).abs() < 1e-6);
    }
}

#[test]
fn rcg_never_exceeds_the_exact_value() {
    for &(case, target, n1, ls, _, flow) in ORACLE {
        let g = grid(case);
        let r = solve_rcg(&g, &AttackInstance::new(target, n1, ls), &AttackOptions::default()).unwrap();
        assert_eq!(r.bound_type, BoundType::LowerBound);
        assert!(r.objective <= flow + 1e-6, "{case} line {}: {} > {flow}", target + 1, r.objective);
    }
}

#[test]
fn dm_sandwiches_the_exact_value() {
    use fdiva::dm_bounds::solve_dm;
    for &(case, target, n1, ls, _, flow) in ORACLE {
        let g = grid(case);
        let r = solve_dm(&g, &AttackInstance::new(target, n1, ls), &Default::default()).unwrap();
        assert!(r.lower_bound <= flow + 1e-6, "{case} line {}: lb {} > {flow}", target + 1, r.lower_bound);
        assert!(flow <= r.upper_bound + 1e-6, "{case} line {}: ub {} < {flow}", target + 1, r.upper_bound);
    }
}

#[test]
fn mbd_never_exceeds_the_exact_value() {
    use fdiva::mbd::solve_mbd_attack;
    for &(case, target, n1, ls, value, _) in ORACLE {
        let g = grid(case);
        let inst = AttackInstance::new(target, n1, ls);
        let (r, out) = solve_mbd_attack(&g, &inst, &Default::default()).unwrap();
        assert!(out.converged, "{case} line {}", target + 1);
        assert!(r.objective - r.penalty <= value + 1e-6, "{case} line {}: {} > {value}", target + 1, r.objective - r.penalty);
        println!("{case} line {} N1 {n1}: mbd {:.6} exact {value:.6} in {} iterations", target + 1, r.objective - r.penalty, out.iterations);
    }
}
