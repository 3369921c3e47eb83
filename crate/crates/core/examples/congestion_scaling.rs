//! Worst-case target flow as all ratings shrink, target loading held fixed.
//!
//! cargo run --release --example congestion_scaling -- [case.m] [line] [N1] [L_S]

use fdiva::assess::scale_holding_target;
use fdiva::attack_milp::{solve_rg, AttackInstance, AttackOptions};
use fdiva::case_io::load_case;
use fdiva::grid_model::Grid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().filter(|s| !s.is_empty()).cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/case6_fdi.m").into());
    let line: usize = args.get(1).map_or(Ok(2), |s| s.parse())?;
    let n1: f64 = args.get(2).map_or(Ok(1.0), |s| s.parse())?;
    let ls: f64 = args.get(3).map_or(Ok(0.1), |s| s.parse())?;

    let case = load_case(&path)?;
    println!("scale  rating    worst flow  flow/rating");
    for scale in [1.0, 0.975, 0.95, 0.925, 0.9] {
        let scaled = match scale_holding_target(&case, scale, line - 1) {
            Ok(c) => c,
            Err(e) => {
                println!("{scale:<6} {e}");
                continue;
            }
        };
        let grid = Grid::new(scaled)?;
        match solve_rg(&grid, &AttackInstance::new(line - 1, n1, ls), &AttackOptions::default()) {
            Ok(r) => println!("{scale:<6} {:<9.3} {:<11.4} {:.6}", grid.rating(line - 1), r.objective, r.objective / grid.rating(line - 1)),
            Err(e) => println!("{scale:<6} {e}"),
        }
    }
    Ok(())
}
