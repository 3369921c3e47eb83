//! Modified Benders decomposition on one target, iteration by iteration.
//!
//! cargo run --release --example benders_trace -- [case.m] [line] [N1] [L_S]

use fdiva::attack_milp::AttackInstance;
use fdiva::case_io::load_case;
use fdiva::grid_model::Grid;
use fdiva::mbd::solve_mbd_attack;
use fdiva_opt::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().filter(|s| !s.is_empty()).cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/case118_fdi.m").into());
    let line: usize = args.get(1).map_or(Ok(141), |s| s.parse())?;
    let n1: f64 = args.get(2).map_or(Ok(1.0), |s| s.parse())?;
    let ls: f64 = args.get(3).map_or(Ok(0.1), |s| s.parse())?;
    let grid = Grid::new(load_case(&path)?)?;
    let (res, out) = solve_mbd_attack(&grid, &AttackInstance::new(line - 1, n1, ls), &Tolerances::default())?;

    println!("  k   master        sub        gap  cut");
    for it in &out.trace {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
        println!("{:3} {:>10} {:>10} {:>10}  {:?}", it.k, f(it.mp_objective), f(it.sp_objective), f(it.gap), it.cut);
    }
    println!(
        "line {line}: flow {:.4} MW (rating {:.1}), converged {} after {} iterations, {} cuts",
        res.objective,
        grid.rating(line - 1),
        out.converged,
        out.iterations,
        out.cuts.len()
    );
    Ok(())
}
