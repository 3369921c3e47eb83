use fdiva_opt::{
    audit_lp, solve_lp, solve_milp, verify_farkas, LpProblem, LpStatus, MilpOptions, MilpProblem, OptError, Relation,
    Sense, Tolerances, VarId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random LP over a box with rows built around a known interior point.
fn random_lp(seed: u64, m: usize, n: usize) -> (LpProblem, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sense = if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut p = LpProblem::new(sense);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    for j in 0..n {
        let lo = if rng.gen_bool(0.8) { x0[j] - rng.gen_range(0.0..3.0) } else { f64::NEG_INFINITY };
        let hi = if rng.gen_bool(0.8) { x0[j] + rng.gen_range(0.0..3.0) } else { f64::INFINITY };
        p.add_var(format!("x{j}"), lo, hi, rng.gen_range(-5.0..5.0));
    }
    for i in 0..m {
        let mut coeffs: Vec<(VarId, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                coeffs.push((VarId(j), rng.gen_range(-4.0..4.0)));
            }
        }
        let act: f64 = coeffs.iter().map(|(v, a)| a * x0[v.0]).sum();
        match rng.gen_range(0..3) {
            0 => p.add_row(format!("r{i}"), coeffs, Relation::Le, act + rng.gen_range(0.0..2.0)),
            1 => p.add_row(format!("r{i}"), coeffs, Relation::Ge, act - rng.gen_range(0.0..2.0)),
            _ => p.add_row(format!("r{i}"), coeffs, Relation::Eq, act),
        };
    }
    // keep the problem bounded
    for j in 0..n {
        if !p.lower[j].is_finite() || !p.upper[j].is_finite() {
            p.add_range_row(format!("box{j}"), [(VarId(j), 1.0)], x0[j] - 10.0, x0[j] + 10.0);
        }
    }
    (p, x0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_lps_are_solved_and_audited(seed in any::<u64>(), m in 1usize..12, n in 1usize..12) {
        let (p, x0) = random_lp(seed, m, n);
        let tol = Tolerances::default();
        let s = solve_lp(&p, &tol).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        prop_assert!(audit_lp(&p, &s).passes(&tol));
        let at_x0 = p.objective_value(&x0);
        match p.sense {
            Sense::Minimize => prop_assert!(s.objective <= at_x0 + 1e-7),
            Sense::Maximize => prop_assert!(s.objective >= at_x0 - 1e-7),
        }
    }

    #[test]
    fn contradictory_rows_give_certificates(seed in any::<u64>(), m in 1usize..8, n in 1usize..8) {
        let (mut p, _) = random_lp(seed, m, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let coeffs: Vec<(VarId, f64)> = (0..n).map(|j| (VarId(j), rng.gen_range(-3.0..3.0))).collect();
        let big = 1e3;
        p.add_row("hi", coeffs.clone(), Relation::Ge, big);
        p.add_row("lo", coeffs, Relation::Le, big - 1.0);
        let s = solve_lp(&p, &Tolerances::default()).unwrap();
        prop_assert_eq!(s.status, LpStatus::Infeasible);
        prop_assert!(verify_farkas(&p, s.farkas.as_ref().unwrap()));
    }

    #[test]
    fn milp_matches_enumeration_and_ignores_order(seed in any::<u64>(), perm_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nb = 4;
        let nc = 3;
        let cost: Vec<f64> = (0..nb + nc).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let rows: Vec<(Vec<f64>, f64)> = (0..4)
            .map(|_| ((0..nb + nc).map(|_| rng.gen_range(-3.0..3.0)).collect(), rng.gen_range(0.0..4.0)))
            .collect();
        let build = |order: &[usize]| {
            // order[k] = original index of the k-th created variable
            let mut p = MilpProblem::new(LpProblem::new(Sense::Maximize));
            let mut id = vec![VarId(0); nb + nc];
            for &o in order {
                id[o] = if o < nb {
                    p.add_binary(format!("b{o}"), cost[o])
                } else {
                    p.lp.add_var(format!("y{o}"), 0.0, 2.0, cost[o])
                };
            }
            for (i, (a, rhs)) in rows.iter().enumerate() {
                p.lp.add_row(format!("r{i}"), a.iter().enumerate().map(|(j, &v)| (id[j], v)), Relation::Le, *rhs);
            }
            p
        };
        let identity: Vec<usize> = (0..nb + nc).collect();
        let mut shuffled = identity.clone();
        let mut prng = ChaCha8Rng::seed_from_u64(perm_seed);
        for k in (1..shuffled.len()).rev() {
            shuffled.swap(k, prng.gen_range(0..=k));
        }

        // enumeration oracle: every binary assignment as an LP
        let base = build(&identity);
        let mut best: Option<f64> = None;
        for mask in 0..(1u32 << nb) {
            let mut lp = base.lp.clone();
            for k in 0..nb {
                let v = (mask >> k & 1) as f64;
                lp.set_bounds(base.binaries[k], v, v);
            }
            let s = solve_lp(&lp, &Tolerances::default()).unwrap();
            if s.is_optimal() {
                best = Some(best.map_or(s.objective, |b: f64| b.max(s.objective)));
            }
        }
        let opts = MilpOptions::default();
        let a = solve_milp(&base, &opts);
        let b = solve_milp(&build(&shuffled), &opts);
        match best {
            None => {
                prop_assert!(matches!(a, Err(OptError::Infeasible)));
                prop_assert!(matches!(b, Err(OptError::Infeasible)));
            }
            Some(v) => {
                let (a, b) = (a.unwrap(), b.unwrap());
                prop_assert!((a.objective - v).abs() <= 1e-6, "{} vs {}", a.objective, v);
                prop_assert!((b.objective - v).abs() <= 1e-6, "{} vs {}", b.objective, v);
                prop_assert!(a.best_bound >= a.objective - 1e-6 * a.objective.abs().max(1.0));
            }
        }
    }
}
