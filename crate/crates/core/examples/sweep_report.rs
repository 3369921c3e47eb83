//! The `assess` sweep driven from code, writing CSV and JSON reports.
//!
//! cargo run --release --example sweep_report -- [case.m] [out_dir]

use fdiva::assess::{emit_report, run_assessment, AssessmentConfig, ReportFormat, ValueList};
use fdiva::Error;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().filter(|s| !s.is_empty()).cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/case6_fdi.m").into());
    let dir = args.get(1).cloned().unwrap_or_else(|| std::env::temp_dir().display().to_string());

    let mut cfg = AssessmentConfig::new(path);
    cfg.n1 = "0.2:0.2:1.0".parse::<ValueList>()?;
    cfg.load_shift = ValueList(vec![0.05, 0.1]);
    let report = match run_assessment(&cfg) {
        Ok(r) => r,
        Err(Error::Invariant(r)) => {
            for v in &r.violations {
                eprintln!("violation: {v}");
            }
            *r
        }
        Err(e) => return Err(e.into()),
    };
    std::fs::create_dir_all(&dir)?;
    emit_report(&report, ReportFormat::Csv, format!("{dir}/sweep.csv"))?;
    emit_report(&report, ReportFormat::Json, format!("{dir}/sweep.json"))?;

    println!("{}: targets {:?}, {} cells in {:.2}s", report.meta.case_name, report.meta.targets, report.cells.len(), report.meta.wall_seconds);
    println!("overflowing cells:");
    for c in report.cells.iter().filter(|c| c.overflow == Some(true)) {
        println!("  line {:3} N1 {:.1} L_S {:.2} {:4} {:.3} > {:.1}", c.target, c.n1, c.load_shift, c.algorithm, c.objective.unwrap_or(f64::NAN), c.rating);
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    println!("reports in {dir}");
    Ok(())
}
