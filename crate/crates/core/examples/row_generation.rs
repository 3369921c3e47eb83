//! Exact worst-case overflow on one line by row generation.
//!
//! cargo run --release --example row_generation -- [case.m] [line] [N1] [L_S]

use fdiva::attack_milp::{solve_rg, write_trace, AttackInstance, AttackOptions};
use fdiva::case_io::load_case;
use fdiva::grid_model::Grid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().filter(|s| !s.is_empty()).cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/case118_fdi.m").into());
    let line: usize = args.get(1).map_or(Ok(141), |s| s.parse())?;
    let n1: f64 = args.get(2).map_or(Ok(1.0), |s| s.parse())?;
    let ls: f64 = args.get(3).map_or(Ok(0.1), |s| s.parse())?;

    let grid = Grid::new(load_case(&path)?)?;
    let inst = AttackInstance::new(line - 1, n1, ls);
    let t = std::time::Instant::now();
    let res = solve_rg(&grid, &inst, &AttackOptions::default())?;
    println!("line {line}: worst flow {:.4} MW (rating {:.1}), {:?}", res.objective, grid.rating(line - 1), res.bound_type);
    println!("{} iterations, binaries {:?}, l1 {:.4}, l0 {}, {:.2?}", res.iterations, res.binaries, res.l1(), res.l0(1e-6), t.elapsed());
    write_trace(&res.trace, std::io::stdout().lock())?;
    Ok(())
}
