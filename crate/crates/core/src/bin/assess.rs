use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fdiva::assess::{emit_report, run_assessment, AssessmentConfig, AssessmentReport, ReportFormat, TargetSelection, ValueList};
use fdiva::assess::parse_algorithms;
use fdiva::Error;

/// Worst-case overflow sweep. Flags override the JSON config.
#[derive(Parser, Debug)]
#[command(name = "assess", version)]
struct Cli {
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<PathBuf>,
    /// Comma list out of rg, rcg, dm, mbd, milp.
    #[arg(long)]
    algorithms: Option<String>,
    /// `critical` or 1-based line numbers, comma separated.
    #[arg(long)]
    targets: Option<TargetSelection>,
    /// `start:step:end` or a comma list.
    #[arg(long)]
    n1: Option<ValueList>,
    #[arg(long = "load-shift")]
    load_shift: Option<ValueList>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Uniform rating multiplier.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long = "critical-threshold")]
    critical_threshold: Option<f64>,
    /// Seconds per cell.
    #[arg(long = "time-limit")]
    time_limit: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn config(cli: Cli) -> Result<AssessmentConfig, Error> {
    let mut cfg = match (&cli.config, &cli.case) {
        (Some(p), _) => AssessmentConfig::from_json_file(p)?,
        (None, Some(c)) => AssessmentConfig::new(c),
        (None, None) => return Err(Error::Config("either --case or --config is required".into())),
    };
    if let Some(v) = cli.case {
        cfg.case = v;
    }
    if let Some(v) = cli.algorithms {
        cfg.algorithms = parse_algorithms(&v)?;
    }
    if let Some(v) = cli.targets {
        cfg.targets = v;
    }
    if let Some(v) = cli.n1 {
        cfg.n1 = v;
    }
    if let Some(v) = cli.load_shift {
        cfg.load_shift = v;
    }
    if let Some(v) = cli.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = cli.scale {
        cfg.scale = v;
    }
    if let Some(v) = cli.critical_threshold {
        cfg.critical_threshold = v;
    }
    if let Some(v) = cli.time_limit {
        cfg.time_limit = v;
    }
    if let Some(v) = cli.jobs {
        cfg.jobs = v;
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    if cli.json.is_some() {
        cfg.json = cli.json;
    }
    Ok(cfg)
}

fn write(report: &AssessmentReport) -> Result<(), Error> {
    let cfg = &report.meta.config;
    if let Some(p) = &cfg.out {
        emit_report(report, ReportFormat::Csv, p)?;
    }
    if let Some(p) = &cfg.json {
        emit_report(report, ReportFormat::Json, p)?;
    }
    if cfg.out.is_none() && cfg.json.is_none() {
        fdiva::assess::write_csv(report, std::io::stdout().lock())?;
    }
    Ok(())
}

fn summary(report: &AssessmentReport) {
    eprintln!(
        "{}: {} cells on {} targets, {} failed, {:.1}s",
        report.meta.case_name,
        report.cells.len(),
        report.meta.targets.len(),
        report.failed_cells(),
        report.meta.wall_seconds
    );
    for n in &report.notes {
        eprintln!("note: {n}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cfg = match config(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run_assessment(&cfg) {
        Ok(report) => {
            summary(&report);
            if let Err(e) = write(&report) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if report.failed_cells() > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Error::Invariant(report)) => {
            summary(&report);
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            let _ = write(&report);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
