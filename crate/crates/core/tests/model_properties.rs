//! Invariants of case I/O, the sensitivity matrices and the dispatch on
//! random connected networks.

use fdiva::case_io::{parse_case, validate_case, write_case, Branch, Bus, Generator, NetworkCase};
use fdiva::dcopf::{solve_dcopf, DcopfRequest};
use fdiva::grid_model::Grid;
use fdiva::Error;
use fdiva_opt::Tolerances;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_case(seed: u64, n: usize) -> NetworkCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // non-contiguous ids on purpose
    let ids: Vec<usize> = (0..n).map(|i| 10 * i + 1 + rng.gen_range(0..5)).collect();
    let buses: Vec<Bus> =
        ids.iter().map(|&id| Bus { id, load: if rng.gen_bool(0.7) { rng.gen_range(0.0..80.0) } else { 0.0 } }).collect();
    let mut branches = Vec::new();
    let edge = |rng: &mut ChaCha8Rng, a: usize, b: usize| Branch {
        from: ids[a],
        to: ids[b],
        reactance: rng.gen_range(0.02..0.5),
        rating: if rng.gen_bool(0.8) { rng.gen_range(20.0..300.0) } else { f64::INFINITY },
    };
    for i in 1..n {
        let j = rng.gen_range(0..i);
        branches.push(edge(&mut rng, j, i));
    }
    for _ in 0..rng.gen_range(0..n) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            branches.push(edge(&mut rng, a, b));
        }
    }
    let load: f64 = buses.iter().map(|b| b.load).sum();
    let ng = rng.gen_range(1..=n.min(4));
    let generators = (0..ng)
        .map(|_| Generator {
            bus: ids[rng.gen_range(0..n)],
            pmin: 0.0,
            pmax: (1.5 * load / ng as f64 + 10.0) * rng.gen_range(1.0..2.0),
            cost: rng.gen_range(5.0..50.0),
        })
        .collect();
    NetworkCase {
        name: format!("rand{seed}"),
        base_mva: 100.0,
        buses,
        branches,
        generators,
        reference_bus: ids[rng.gen_range(0..n)],
    }
}

fn merit_order_cost(case: &NetworkCase) -> f64 {
    let mut gens: Vec<&Generator> = case.generators.iter().collect();
    gens.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    let mut left = case.total_load();
    let mut cost = 0.0;
    for g in gens {
        let p = left.min(g.pmax);
        cost += p * g.cost;
        left -= p;
    }
    cost
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_identity(seed in any::<u64>(), n in 2usize..10) {
        let case = random_case(seed, n);
        prop_assert!(validate_case(&case).is_empty());
        let back = parse_case(&write_case(&case)).unwrap();
        prop_assert_eq!(back, case);
    }

    #[test]
    fn injection_columns_sum_to_zero(seed in any::<u64>(), n in 2usize..10) {
        let g = Grid::new(random_case(seed, n)).unwrap();
        for j in 0..g.n_bus() {
            let s: f64 = g.h.entries.column(j).iter().sum();
            let scale = g.h.entries.column(j).amax();
            prop_assert!(s.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn ptdf_flows_conserve_power(seed in any::<u64>(), n in 2usize..10, inj_seed in any::<u64>()) {
        let g = Grid::new(random_case(seed, n)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(inj_seed);
        let mut p: Vec<f64> = (0..g.n_bus()).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let total: f64 = p.iter().sum();
        p[g.reference_position()] -= total;
        let f = &g.ptdf.entries * DVector::from_column_slice(&p);
        let mut net = vec![0.0; g.n_bus()];
        for (k, br) in g.case.branches.iter().enumerate() {
            net[g.bus_position(br.from).unwrap()] += f[k];
            net[g.bus_position(br.to).unwrap()] -= f[k];
        }
        for i in 0..g.n_bus() {
            prop_assert!((net[i] - p[i]).abs() < 1e-9, "bus {}: {} vs {}", i, net[i], p[i]);
        }
        // the reference column carries nothing
        prop_assert!(g.ptdf.entries.column(g.reference_position()).amax() == 0.0);
    }

    #[test]
    fn sparse_attack_rows_match_dense_product(seed in any::<u64>(), n in 2usize..10, c_seed in any::<u64>()) {
        let g = Grid::new(random_case(seed, n)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(c_seed);
        let c: Vec<f64> = (0..g.n_bus()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dense = &g.ptdf.entries * (&g.h.entries * DVector::from_column_slice(&c));
        let sparse = g.attack_flows(&c);
        for k in 0..g.n_branch() {
            prop_assert!((dense[k] - sparse[k]).abs() <= 1e-8 * (1.0 + sparse[k].abs()));
        }
    }

    #[test]
    fn dispatch_is_feasible_and_stationary(seed in any::<u64>(), n in 2usize..10) {
        let g = Grid::new(random_case(seed, n)).unwrap();
        let d = match solve_dcopf(&g, DcopfRequest::default(), &Tolerances::default()) {
            Ok(d) => d,
            Err(Error::DcopfInfeasible) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let load = g.case.total_load();
        prop_assert!((d.pg.iter().sum::<f64>() - load).abs() < 1e-6 * load.max(1.0));
        for (k, f) in d.physical_flows.iter().enumerate() {
            prop_assert!(f.abs() <= g.rating(k) + 1e-6);
        }
        prop_assert!(d.stationarity_residual(&g, &vec![false; g.n_gen()]) < 1e-6);
        let cost: f64 = d.pg.iter().zip(&g.case.generators).map(|(p, gen)| p * gen.cost).sum();
        prop_assert!((cost - d.cost).abs() < 1e-6 * cost.abs().max(1.0));
        prop_assert!(d.cost >= merit_order_cost(&g.case) - 1e-6 * d.cost.abs().max(1.0));
        // no attack: both flow views agree
        prop_assert_eq!(&d.physical_flows, &d.cyber_flows);
    }
}
