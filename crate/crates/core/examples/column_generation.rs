//! Row-and-column generation: the generator set grows from the marginal
//! units until the re-dispatch agrees with the attacker's anticipation.
//!
//! cargo run --release --example column_generation -- [case.m] [line] [N1] [L_S]

use fdiva::attack_milp::{solve_rcg, solve_rg, AttackInstance, AttackOptions};
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
    let opts = AttackOptions::default();

    let res = solve_rcg(&grid, &inst, &opts)?;
    for it in &res.trace {
        println!(
            "iter {}: |Q| {} |R| {} binaries {} incumbent {:.4} nodes {} +lines {:?} +gens {:?}",
            it.iteration,
            it.lines.len(),
            it.gens.len(),
            it.binaries,
            it.incumbent,
            it.nodes,
            it.added_lines,
            it.added_gens
        );
    }
    let gens: Vec<usize> = res.gens.iter().map(|g| g + 1).collect();
    println!("RCG {:.4} MW ({:?}), final generators {gens:?}", res.objective, res.bound_type);

    let exact = solve_rg(&grid, &inst, &opts)?;
    println!("RG  {:.4} MW with {} binaries per MILP", exact.objective, exact.binaries.iter().max().unwrap_or(&0));
    Ok(())
}
