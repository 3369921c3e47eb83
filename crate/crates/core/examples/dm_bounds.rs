//! Difference-maximization bounds on every critical line.
//!
//! cargo run --release --example dm_bounds -- [case.m] [N1] [L_S]

use fdiva::attack_milp::AttackInstance;
use fdiva::case_io::load_case;
use fdiva::dcopf::{solve_dcopf, DcopfRequest};
use fdiva::dm_bounds::solve_dm;
use fdiva::grid_model::{find_critical_lines, Grid};
use fdiva_opt::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().filter(|s| !s.is_empty()).cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/case118_fdi.m").into());
    let n1: f64 = args.get(1).map_or(Ok(1.0), |s| s.parse())?;
    let ls: f64 = args.get(2).map_or(Ok(0.1), |s| s.parse())?;
    let grid = Grid::new(load_case(&path)?)?;
    let tol = Tolerances::default();
    let base = solve_dcopf(&grid, DcopfRequest::default(), &tol)?;

    println!("line   rating     lower     upper       gap  tight  l1");
    for k in find_critical_lines(&base.physical_flows, &grid.case, 0.9) {
        let r = solve_dm(&grid, &AttackInstance::new(k, n1, ls), &tol)?;
        println!(
            "{:4} {:8.1} {:9.4} {:9.4} {:9.4}  {:5}  {:.4}{}",
            k + 1,
            grid.rating(k),
            r.lower_bound,
            r.upper_bound,
            r.upper_bound - r.lower_bound,
            r.tight,
            r.l1(),
            if r.post_infeasible { "  (re-dispatch infeasible)" } else { "" }
        );
    }
    Ok(())
}
