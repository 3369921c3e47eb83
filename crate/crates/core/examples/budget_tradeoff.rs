//! How the worst flow, the attack's l1 norm and its support grow with N1.
//!
//! cargo run --release --example budget_tradeoff -- [case.m] [line] [L_S] [N1 grid]

use fdiva::assess::ValueList;
use fdiva::attack_milp::{solve_rg, AttackInstance, AttackOptions};
use fdiva::case_io::load_case;
use fdiva::grid_model::Grid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().filter(|s| !s.is_empty()).cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/case118_fdi.m").into());
    let line: usize = args.get(1).map_or(Ok(141), |s| s.parse())?;
    let ls: f64 = args.get(2).map_or(Ok(0.1), |s| s.parse())?;
    let grid_n1: ValueList = args.get(3).map_or("0.02:0.02:0.2", |s| s.as_str()).parse()?;
    let grid = Grid::new(load_case(&path)?)?;
    let rating = grid.rating(line - 1);

    println!("   N1     flow  loading      l1  l0  buses");
    for &n1 in &grid_n1.0 {
        let r = solve_rg(&grid, &AttackInstance::new(line - 1, n1, ls), &AttackOptions::default())?;
        let buses: Vec<usize> = (0..grid.n_bus()).filter(|&b| r.c[b].abs() > 1e-6).map(|b| grid.case.buses[b].id).collect();
        println!("{n1:4.2} {:8.3} {:8.4} {:7.4} {:3}  {buses:?}", r.objective, r.objective / rating, r.l1(), r.l0(1e-6));
    }
    Ok(())
}
