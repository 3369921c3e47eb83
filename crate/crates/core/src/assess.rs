//! Batch sweeps over targets, budgets, load shifts and algorithms.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use fdiva_opt::Tolerances;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack_milp::{audit_attack, solve_full_milp, solve_rcg, solve_rg, AttackInstance, AttackOptions, BoundType};
use crate::case_io::{load_case, NetworkCase};
use crate::dcopf::{solve_dcopf, DcopfRequest};
use crate::dm_bounds::solve_dm;
use crate::error::{Error, Result};
use crate::grid_model::{find_critical_lines, Grid};
use crate::mbd::solve_mbd_attack;

/// Attack entries at or below this magnitude do not count toward `l0`.
pub const L0_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rg,
    Rcg,
    Dm,
    Mbd,
    Milp,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rg => "rg",
            Algorithm::Rcg => "rcg",
            Algorithm::Dm => "dm",
            Algorithm::Mbd => "mbd",
            Algorithm::Milp => "milp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rg" => Ok(Algorithm::Rg),
            "rcg" => Ok(Algorithm::Rcg),
            "dm" => Ok(Algorithm::Dm),
            "mbd" => Ok(Algorithm::Mbd),
            "milp" => Ok(Algorithm::Milp),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Parses `rg,rcg,dm`.
pub fn parse_algorithms(s: &str) -> Result<Vec<Algorithm>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TargetsRepr", into = "TargetsRepr")]
pub enum TargetSelection {
    /// Lines loaded at or above the critical threshold before the attack.
    Critical,
    /// 1-based line numbers.
    Lines(Vec<usize>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TargetsRepr {
    Text(String),
    Lines(Vec<usize>),
}

impl TryFrom<TargetsRepr> for TargetSelection {
    type Error = Error;
    fn try_from(r: TargetsRepr) -> Result<Self> {
        match r {
            TargetsRepr::Text(s) => s.parse(),
            TargetsRepr::Lines(v) => Ok(TargetSelection::Lines(v)),
        }
    }
}

impl From<TargetSelection> for TargetsRepr {
    fn from(t: TargetSelection) -> Self {
        match t {
            TargetSelection::Critical => TargetsRepr::Text("critical".into()),
            TargetSelection::Lines(v) => TargetsRepr::Lines(v),
        }
    }
}

impl FromStr for TargetSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("critical") {
            return Ok(TargetSelection::Critical);
        }
        let lines = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad target line {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(TargetSelection::Lines(lines))
    }
}

/// A list of values written either as `0.1,0.5` or as `start:step:end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ValuesRepr", into = "Vec<f64>")]
pub struct ValueList(pub Vec<f64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum ValuesRepr {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl TryFrom<ValuesRepr> for ValueList {
    type Error = Error;
    fn try_from(r: ValuesRepr) -> Result<Self> {
        match r {
            ValuesRepr::One(v) => Ok(ValueList(vec![v])),
            ValuesRepr::Many(v) => Ok(ValueList(v)),
            ValuesRepr::Text(s) => s.parse(),
        }
    }
}

impl From<ValueList> for Vec<f64> {
    fn from(v: ValueList) -> Self {
        v.0
    }
}

impl FromStr for ValueList {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {t:?}")));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => Ok(ValueList(s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect::<Result<_>>()?)),
            3 => {
                let (a, step, b) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
                if !(step > 0.0) || b < a {
                    return Err(Error::Config(format!("bad range {s:?}")));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                // round away the accumulated binary noise of a + k*step
                Ok(ValueList((0..=n).map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12).collect()))
            }
            _ => Err(Error::Config(format!("expected a list or start:step:end, got {s:?}"))),
        }
    }
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Rg, Algorithm::Rcg, Algorithm::Dm, Algorithm::Mbd]
}
fn default_targets() -> TargetSelection {
    TargetSelection::Critical
}
fn default_n1() -> ValueList {
    "0.1:0.1:1.0".parse().unwrap()
}
fn default_ls() -> ValueList {
    ValueList(vec![0.1])
}
fn default_sigma() -> f64 {
    1e-3
}
fn default_one() -> f64 {
    1.0
}
fn default_threshold() -> f64 {
    0.9
}
fn default_time_limit() -> f64 {
    300.0
}
fn default_invariant_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessmentConfig {
    pub case: PathBuf,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_targets")]
    pub targets: TargetSelection,
    #[serde(default = "default_n1")]
    pub n1: ValueList,
    #[serde(default = "default_ls")]
    pub load_shift: ValueList,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Uniform multiplier on every rating, applied before the baseline dispatch.
    #[serde(default = "default_one")]
    pub scale: f64,
    #[serde(default = "default_threshold")]
    pub critical_threshold: f64,
    /// Seconds per cell for the MILP-based algorithms.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    /// Relative slack of the bound-ordering checks.
    #[serde(default = "default_invariant_tol")]
    pub invariant_tol: f64,
    /// Worker threads; 0 picks the number of cores.
    #[serde(default)]
    pub jobs: usize,
    /// Recorded in the report; every algorithm here is deterministic.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

impl AssessmentConfig {
    pub fn new(case: impl Into<PathBuf>) -> Self {
        Self {
            case: case.into(),
            algorithms: default_algorithms(),
            targets: default_targets(),
            n1: default_n1(),
            load_shift: default_ls(),
            sigma: default_sigma(),
            scale: 1.0,
            critical_threshold: default_threshold(),
            time_limit: default_time_limit(),
            invariant_tol: default_invariant_tol(),
            jobs: 0,
            seed: None,
            out: None,
            json: None,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.algorithms.is_empty() {
            return bad("no algorithm selected".into());
        }
        if let Some(v) = self.n1.0.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return bad(format!("N1 value {v} must be positive"));
        }
        if let Some(v) = self.load_shift.0.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return bad(format!("load shift {v} must lie in (0, 1)"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("rating scale {} must be positive", self.scale));
        }
        if !(self.sigma > 0.0) {
            return bad(format!("sigma {} must be positive", self.sigma));
        }
        if !(self.time_limit > 0.0) {
            return bad(format!("time limit {} must be positive", self.time_limit));
        }
        if let TargetSelection::Lines(v) = &self.targets {
            if v.contains(&0) {
                return bad("target lines are 1-based".into());
            }
        }
        Ok(())
    }
}

/// One (target, N1, L_S, algorithm) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    /// 1-based line number.
    pub target: usize,
    pub n1: f64,
    pub load_shift: f64,
    pub algorithm: Algorithm,
    pub rating: f64,
    /// Target flow in MW along the baseline direction; the lower bound for DM.
    pub objective: Option<f64>,
    /// DM only.
    pub upper_bound: Option<f64>,
    pub bound_type: Option<BoundType>,
    /// `objective > rating`.
    pub overflow: Option<bool>,
    pub l0: Option<usize>,
    pub l1: Option<f64>,
    pub iterations: Option<usize>,
    /// MILP binaries per iteration, `;`-separated.
    pub binaries: String,
    /// Generation loop closed, or the decomposition met its gap test.
    pub converged: Option<bool>,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

impl CellResult {
    fn blank(target: usize, n1: f64, load_shift: f64, algorithm: Algorithm, rating: f64) -> Self {
        Self {
            target: target + 1,
            n1,
            load_shift,
            algorithm,
            rating,
            objective: None,
            upper_bound: None,
            bound_type: None,
            overflow: None,
            l0: None,
            l1: None,
            iterations: None,
            binaries: String::new(),
            converged: None,
            wall_seconds: 0.0,
            error: None,
        }
    }

    pub fn binary_counts(&self) -> Vec<usize> {
        self.binaries.split(';').filter_map(|t| t.parse().ok()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub case_name: String,
    pub case_path: String,
    pub n_bus: usize,
    pub n_branch: usize,
    pub n_gen: usize,
    pub baseline_cost: f64,
    /// 1-based.
    pub critical_lines: Vec<usize>,
    pub targets: Vec<usize>,
    pub config: AssessmentConfig,
    pub version: String,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub meta: ReportMeta,
    pub cells: Vec<CellResult>,
    /// Fatal: bound orderings or audits that failed.
    pub violations: Vec<String>,
    /// Non-fatal observations, e.g. RCG differing from RG.
    pub notes: Vec<String>,
}

impl AssessmentReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn cell(&self, target: usize, n1: f64, load_shift: f64, alg: Algorithm) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.target == target && c.n1 == n1 && c.load_shift == load_shift && c.algorithm == alg)
    }
}

fn attack_options(cfg: &AssessmentConfig) -> AttackOptions {
    AttackOptions {
        critical_threshold: cfg.critical_threshold,
        time_limit: Some(Duration::from_secs_f64(cfg.time_limit)),
        ..AttackOptions::default()
    }
}

fn run_cell(grid: &Grid, cfg: &AssessmentConfig, target: usize, n1: f64, ls: f64, alg: Algorithm) -> (CellResult, Vec<String>) {
    let mut cell = CellResult::blank(target, n1, ls, alg, grid.rating(target));
    let inst = AttackInstance { sigma: cfg.sigma, ..AttackInstance::new(target, n1, ls) };
    let opts = attack_options(cfg);
    let tol = Tolerances::default();
    let start = Instant::now();
    let outcome: Result<Vec<f64>> = (|| match alg {
        Algorithm::Rg | Algorithm::Rcg | Algorithm::Milp => {
            let r = match alg {
                Algorithm::Rg => solve_rg(grid, &inst, &opts)?,
                Algorithm::Rcg => solve_rcg(grid, &inst, &opts)?,
                _ => solve_full_milp(grid, &inst, &opts)?,
            };
            cell.objective = Some(r.objective);
            cell.bound_type = Some(r.bound_type);
            cell.iterations = Some(r.iterations);
            cell.binaries = r.binaries.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(";");
            let closed = r.trace.last().is_some_and(|t| t.added_lines.is_empty() && t.added_gens.is_empty());
            cell.converged = Some(closed && !r.limit_hit);
            Ok(r.c)
        }
        Algorithm::Dm => {
            let r = solve_dm(grid, &inst, &tol)?;
            cell.objective = Some(r.lower_bound);
            cell.upper_bound = Some(r.upper_bound);
            cell.bound_type = Some(BoundType::LowerBound);
            cell.iterations = Some(1);
            cell.converged = Some(true);
            Ok(r.c)
        }
        Algorithm::Mbd => {
            let (r, out) = solve_mbd_attack(grid, &inst, &tol)?;
            cell.objective = Some(r.objective);
            cell.bound_type = Some(BoundType::LowerBound);
            cell.iterations = Some(out.iterations);
            cell.converged = Some(out.converged);
            Ok(r.c)
        }
    })();
    cell.wall_seconds = start.elapsed().as_secs_f64();
    let mut violations = Vec::new();
    match outcome {
        Ok(c) => {
            cell.l0 = Some(c.iter().filter(|v| v.abs() > L0_THRESHOLD).count());
            cell.l1 = Some(c.iter().map(|v| v.abs()).sum());
            cell.overflow = cell.objective.map(|o| o > cell.rating + 1e-6);
            if let Err(e) = audit_attack(grid, &inst, &c) {
                violations.push(format!("line {} N1 {n1} L_S {ls} {alg}: {e}", target + 1));
            }
        }
        Err(e) => {
            warn!("line {} N1 {n1} L_S {ls} {alg}: {e}", target + 1);
            cell.error = Some(e.to_string());
        }
    }
    (cell, violations)
}

fn le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * a.abs().max(b.abs()).max(1.0)
}

/// Bound orderings within one (target, N1, L_S) group. Returns fatal
/// violations and notes.
pub fn check_group(cells: &[&CellResult], tol: f64) -> (Vec<String>, Vec<String>) {
    let get = |alg: Algorithm| cells.iter().find(|c| c.algorithm == alg && c.error.is_none()).copied();
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    let Some(first) = cells.first() else { return (bad, notes) };
    let tag = format!("line {} N1 {} L_S {}", first.target, first.n1, first.load_shift);
    let exact = |c: &CellResult| c.bound_type == Some(BoundType::Exact);
    let dm = get(Algorithm::Dm);
    let rg = get(Algorithm::Rg);
    let rcg = get(Algorithm::Rcg);
    let mbd = get(Algorithm::Mbd);
    let milp = get(Algorithm::Milp);
    let mut need = |ok: bool, what: String| {
        if !ok {
            bad.push(format!("{tag}: {what}"));
        }
    };
    if let Some(d) = dm {
        let (lo, hi) = (d.objective.unwrap(), d.upper_bound.unwrap());
        need(le(lo, hi, tol), format!("DM lower {lo} above DM upper {hi}"));
        for c in [rg, rcg, milp, mbd].into_iter().flatten() {
            let v = c.objective.unwrap();
            need(le(v, hi, tol), format!("{} {v} above DM upper {hi}", c.algorithm));
        }
        for c in [rg, milp].into_iter().flatten().filter(|c| exact(c)) {
            let v = c.objective.unwrap();
            need(le(lo, v, tol), format!("{} {v} below DM lower {lo}", c.algorithm));
        }
        if let Some(c) = rcg {
            let v = c.objective.unwrap();
            need(le(lo, v, tol), format!("RCG {v} below DM lower {lo}"));
        }
        if let Some(c) = mbd {
            let v = c.objective.unwrap();
            if !le(lo, v, tol) {
                notes.push(format!("{tag}: MBD {v} below DM lower {lo}"));
            }
        }
    }
    for r in [rg, milp].into_iter().flatten().filter(|c| exact(c)) {
        let top = r.objective.unwrap();
        for c in [rcg, mbd].into_iter().flatten() {
            let v = c.objective.unwrap();
            need(le(v, top, tol), format!("{} {v} above {} {top}", c.algorithm, r.algorithm));
        }
    }
    if let (Some(a), Some(b)) = (rg, milp) {
        if exact(a) && exact(b) {
            let (x, y) = (a.objective.unwrap(), b.objective.unwrap());
            need(le(x, y, tol) && le(y, x, tol), format!("RG {x} and full MILP {y} disagree"));
        }
    }
    if let (Some(a), Some(b)) = (rg, rcg) {
        let (x, y) = (a.objective.unwrap(), b.objective.unwrap());
        if !le(x, y, tol) {
            notes.push(format!("{tag}: RCG {y} below RG {x}"));
        }
        let (ra, rb) = (a.binary_counts(), b.binary_counts());
        if ra.iter().max() < rb.iter().max() {
            notes.push(format!("{tag}: RCG used more binaries than RG"));
        }
    }
    (bad, notes)
}

/// Runs the sweep. Bound-ordering or audit violations end in
/// [`Error::Invariant`], which still carries the full report.
pub fn run_assessment(cfg: &AssessmentConfig) -> Result<AssessmentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut case = load_case(&cfg.case)?;
    case.scale_ratings(cfg.scale);
    let grid = Grid::new(case)?;
    let base = solve_dcopf(&grid, DcopfRequest::default(), &Tolerances::default())?;
    let critical = find_critical_lines(&base.physical_flows, &grid.case, cfg.critical_threshold);
    let targets: Vec<usize> = match &cfg.targets {
        TargetSelection::Critical => critical.clone(),
        TargetSelection::Lines(v) => {
            for &k in v {
                if k > grid.n_branch() {
                    return Err(Error::Config(format!("target line {k} exceeds {} lines", grid.n_branch())));
                }
            }
            v.iter().map(|k| k - 1).collect()
        }
    };
    let mut algs = cfg.algorithms.clone();
    algs.sort();
    algs.dedup();
    let mut jobs = Vec::new();
    for &t in &targets {
        for &n1 in &cfg.n1.0 {
            for &ls in &cfg.load_shift.0 {
                for &a in &algs {
                    jobs.push((t, n1, ls, a));
                }
            }
        }
    }
    info!("{} cells on {} targets", jobs.len(), targets.len());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build().map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<(CellResult, Vec<String>)> =
        pool.install(|| jobs.par_iter().map(|&(t, n1, ls, a)| run_cell(&grid, cfg, t, n1, ls, a)).collect());
    let mut violations = Vec::new();
    let mut cells = Vec::with_capacity(results.len());
    for (c, v) in results {
        violations.extend(v);
        cells.push(c);
    }
    let mut notes = Vec::new();
    for group in cells.chunks(algs.len()) {
        let refs: Vec<&CellResult> = group.iter().collect();
        let (b, n) = check_group(&refs, cfg.invariant_tol);
        violations.extend(b);
        notes.extend(n);
    }
    let report = AssessmentReport {
        meta: ReportMeta {
            case_name: grid.case.name.clone(),
            case_path: cfg.case.display().to_string(),
            n_bus: grid.n_bus(),
            n_branch: grid.n_branch(),
            n_gen: grid.n_gen(),
            baseline_cost: base.cost,
            critical_lines: critical.iter().map(|k| k + 1).collect(),
            targets: targets.iter().map(|k| k + 1).collect(),
            config: cfg.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        cells,
        violations,
        notes,
    };
    if !report.violations.is_empty() {
        return Err(Error::Invariant(Box::new(report)));
    }
    Ok(report)
}

/// Scales every rating by `scale`, then resets the target's rating so its
/// pre-attack loading matches the unscaled case.
pub fn scale_holding_target(case: &NetworkCase, scale: f64, target: usize) -> Result<NetworkCase> {
    let tol = Tolerances::default();
    let loading = |c: &NetworkCase| -> Result<f64> {
        let g = Grid::new(c.clone())?;
        Ok(solve_dcopf(&g, DcopfRequest::default(), &tol)?.physical_flows[target].abs())
    };
    let u0 = loading(case)? / case.branches[target].rating;
    let mut out = case.clone();
    out.scale_ratings(scale);
    for _ in 0..100 {
        let want = loading(&out)? / u0;
        let diff = (want - out.branches[target].rating).abs();
        out.branches[target].rating = want;
        if diff <= 1e-9 * want.max(1.0) {
            return Ok(out);
        }
    }
    Err(Error::Config(format!("target loading did not settle at scale {scale}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn write_csv<W: Write>(report: &AssessmentReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for c in &report.cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

/// Column order of [`write_csv`].
pub const CSV_COLUMNS: [&str; 16] = [
    "target",
    "n1",
    "load_shift",
    "algorithm",
    "rating",
    "objective",
    "upper_bound",
    "bound_type",
    "overflow",
    "l0",
    "l1",
    "iterations",
    "binaries",
    "converged",
    "wall_seconds",
    "error",
];

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CellResult>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_json<W: Write>(report: &AssessmentReport, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

pub fn emit_report(report: &AssessmentReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        ReportFormat::Csv => write_csv(report, file),
        ReportFormat::Json => write_json(report, file),
    }
}
