//! Properties of the worst-case attack on the small fixtures.

mod common;

use common::grid;
use fdiva::attack_milp::{audit_attack, solve_rg, AttackInstance, AttackOptions};
use fdiva::dcopf::{optimal_flow_range, DcopfRequest};
use fdiva::dm_bounds::solve_dm;
use fdiva_opt::Tolerances;
use proptest::prelude::*;

fn penalised(case: &str, target: usize, n1: f64, ls: f64) -> f64 {
    let g = grid(case);
    let inst = AttackInstance::new(target, n1, ls);
    let r = solve_rg(&g, &inst, &AttackOptions::default()).unwrap();
    audit_attack(&g, &inst, &r.c).unwrap();
    r.objective - r.penalty
}

fn instance() -> impl Strategy<Value = (&'static str, usize)> {
    prop_oneof![(Just("case3"), 0usize..3), (Just("case6"), 0usize..8)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn value_grows_with_the_budget((case, target) in instance(), a in 0.05f64..3.0, b in 0.05f64..3.0, ls in 0.05f64..0.2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(penalised(case, target, lo, ls) <= penalised(case, target, hi, ls) + 1e-6);
    }

    #[test]
    fn value_grows_with_the_load_shift((case, target) in instance(), n1 in 0.05f64..3.0, a in 0.02f64..0.3, b in 0.02f64..0.3) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(penalised(case, target, n1, lo) <= penalised(case, target, n1, hi) + 1e-6);
    }

    #[test]
    fn dm_bounds_hold((case, target) in instance(), n1 in 0.05f64..3.0, ls in 0.05f64..0.2) {
        let g = grid(case);
        let inst = AttackInstance::new(target, n1, ls);
        let exact = solve_rg(&g, &inst, &AttackOptions::default()).unwrap().objective;
        let dm = solve_dm(&g, &inst, &Tolerances::default()).unwrap();
        prop_assert!(dm.lower_bound <= exact + 1e-6);
        prop_assert!(exact <= dm.upper_bound + 1e-6);
    }
}

#[test]
fn zero_budget_picks_the_best_optimal_dispatch() {
    for (case, lines) in [("case3", 3), ("case6", 8)] {
        let g = grid(case);
        for target in 0..lines {
            let r = solve_rg(&g, &AttackInstance::new(target, 0.0, 0.1), &AttackOptions::default()).unwrap();
            assert!(r.c.iter().all(|v| *v == 0.0));
            let (lo, hi) = optimal_flow_range(&g, DcopfRequest::default(), target, &Tolerances::default()).unwrap();
            let best = if r.direction > 0.0 { hi } else { -lo };
            assert!((r.objective - best).abs() < 1e-6, "{case} line {}: {} vs {best}", target + 1, r.objective);
        }
    }
}
