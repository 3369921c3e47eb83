//! Pre-attack dispatch: cost, prices, critical lines and marginal units.
//! With a directory argument the PTDF and H matrices are written there as CSV.
//!
//! cargo run --release --example baseline_dispatch -- [case.m] [out_dir]

use std::fs::File;

use fdiva::case_io::load_case;
use fdiva::dcopf::{solve_dcopf, DcopfRequest};
use fdiva::grid_model::{find_critical_lines, find_marginal_generators, Grid, MatrixKind};
use fdiva_opt::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().filter(|s| !s.is_empty()).cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/case118_fdi.m").into());
    let grid = Grid::new(load_case(&path)?)?;
    let d = solve_dcopf(&grid, DcopfRequest::default(), &Tolerances::default())?;
    println!(
        "{}: {} buses, {} lines, {} generators, load {:.1} MW",
        grid.case.name,
        grid.n_bus(),
        grid.n_branch(),
        grid.n_gen(),
        grid.case.total_load()
    );
    println!("cost {:.4} $/h, system lambda {:.4} $/MWh", d.cost, d.lambda);

    println!("critical lines (|f| >= 0.9 rating):");
    for k in find_critical_lines(&d.physical_flows, &grid.case, 0.9) {
        let br = &grid.case.branches[k];
        let mu = d.f_plus[k] - d.f_minus[k];
        println!(
            "  {:4} {:>4}-{:<4} flow {:9.3} rating {:7.1} loading {:.4} dual {:.4}",
            k + 1,
            br.from,
            br.to,
            d.physical_flows[k],
            br.rating,
            d.physical_flows[k].abs() / br.rating,
            mu
        );
    }
    println!("marginal generators:");
    for g in find_marginal_generators(&d.pg, &grid.case, 1e-4) {
        let gen = &grid.case.generators[g];
        println!("  {:3} bus {:4} {:8.3} MW in [{}, {}] at {} $/MWh", g + 1, gen.bus, d.pg[g], gen.pmin, gen.pmax, gen.cost);
    }

    if let Some(dir) = args.get(1) {
        std::fs::create_dir_all(dir)?;
        grid.write_matrix_csv(MatrixKind::Ptdf, File::create(format!("{dir}/ptdf.csv"))?)?;
        grid.write_matrix_csv(MatrixKind::Injection, File::create(format!("{dir}/h.csv"))?)?;
        println!("wrote {dir}/ptdf.csv and {dir}/h.csv");
    }
    Ok(())
}
