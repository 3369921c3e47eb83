//! All four algorithms on one target: exact value, lower bounds and the
//! difference-maximization sandwich.
//!
//! cargo run --release --example compare_algorithms -- [case.m] [line] [N1] [L_S]

use std::time::Instant;

use fdiva::attack_milp::{solve_rcg, solve_rg, AttackInstance, AttackOptions};
use fdiva::case_io::load_case;
use fdiva::dm_bounds::solve_dm;
use fdiva::grid_model::Grid;
use fdiva::mbd::solve_mbd_attack;
use fdiva_opt::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().filter(|s| !s.is_empty()).cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/case118_fdi.m").into());
    let line: usize = args.get(1).map_or(Ok(141), |s| s.parse())?;
    let n1: f64 = args.get(2).map_or(Ok(0.5), |s| s.parse())?;
    let ls: f64 = args.get(3).map_or(Ok(0.1), |s| s.parse())?;
    let grid = Grid::new(load_case(&path)?)?;
    let inst = AttackInstance::new(line - 1, n1, ls);
    let opts = AttackOptions::default();
    let tol = Tolerances::default();
    println!("line {line}, rating {:.1} MW, N1 {n1}, L_S {ls}", grid.rating(line - 1));

    let t = Instant::now();
    let dm = solve_dm(&grid, &inst, &tol)?;
    println!("DM   [{:9.4}, {:9.4}] tight={} ({:.2?})", dm.lower_bound, dm.upper_bound, dm.tight, t.elapsed());
    let t = Instant::now();
    let rg = solve_rg(&grid, &inst, &opts)?;
    println!("RG   {:9.4}  binaries {:?} ({:.2?})", rg.objective, rg.binaries, t.elapsed());
    let t = Instant::now();
    let rcg = solve_rcg(&grid, &inst, &opts)?;
    println!("RCG  {:9.4}  binaries {:?} ({:.2?})", rcg.objective, rcg.binaries, t.elapsed());
    let t = Instant::now();
    let (mbd, out) = solve_mbd_attack(&grid, &inst, &tol)?;
    println!("MBD  {:9.4}  {} iterations, converged={} ({:.2?})", mbd.objective, out.iterations, out.converged, t.elapsed());
    Ok(())
}
