//! Per-line range of the flow distortion PTDF*H*c an unobservable attack can cause.
//!
//! cargo run --release --example attack_reach -- [case.m] [N1] [L_S]

use fdiva::attack_milp::{attack_flow_ranges, AttackInstance};
use fdiva::case_io::load_case;
use fdiva::grid_model::Grid;
use fdiva_opt::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().filter(|s| !s.is_empty()).cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/case118_fdi.m").into());
    let n1: f64 = args.get(1).map_or(Ok(1.0), |s| s.parse())?;
    let ls: f64 = args.get(2).map_or(Ok(0.1), |s| s.parse())?;
    let grid = Grid::new(load_case(&path)?)?;
    let lines: Vec<usize> = (0..grid.n_branch()).collect();
    let target = lines.iter().copied().find(|&k| grid.rating(k).is_finite()).ok_or("no rated line")?;
    let inst = AttackInstance::new(target, n1, ls);
    let ranges = attack_flow_ranges(&grid, &inst, &lines, &Tolerances::default())?;
    let reachable: Vec<_> = ranges.iter().enumerate().filter(|(_, r)| r.0 < 0.0 || r.1 > 0.0).collect();
    println!("{} attackable buses, {} of {} lines can be distorted", grid.attackable_buses().len(), reachable.len(), lines.len());
    for (k, (lo, hi)) in reachable {
        let br = &grid.case.branches[k];
        println!("line {:4} ({:3}-{:3}) rating {:8.1}  distortion [{:9.3}, {:9.3}] MW", k + 1, br.from, br.to, grid.rating(k), lo, hi);
    }
    Ok(())
}
