//! MATPOWER-style case files.
//!
//! Only the active-power subset is read: `baseMVA`, the bus id/type/Pd
//! columns, branch endpoints/reactance/rateA/status, generator
//! bus/status/Pmax/Pmin and polynomial cost rows of degree at most one.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    /// Active load, MW.
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    /// Series reactance, p.u.
    pub reactance: f64,
    /// Thermal rating in MW; `f64::INFINITY` when the file gives 0.
    pub rating: f64,
}

impl Branch {
    pub fn is_rated(&self) -> bool {
        self.rating.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub pmin: f64,
    pub pmax: f64,
    /// Linear cost, $/MWh.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub reference_bus: usize,
}

impl NetworkCase {
    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branch(&self) -> usize {
        self.branches.len()
    }

    pub fn n_gen(&self) -> usize {
        self.generators.len()
    }

    pub fn total_load(&self) -> f64 {
        self.buses.iter().map(|b| b.load).sum()
    }

    pub fn total_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.pmax).sum()
    }

    /// Position of each bus id in `buses`.
    pub fn bus_positions(&self) -> HashMap<usize, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    /// Multiplies every finite rating by `factor`.
    pub fn scale_ratings(&mut self, factor: f64) {
        for br in &mut self.branches {
            if br.is_rated() {
                br.rating *= factor;
            }
        }
    }
}

struct Table {
    rows: Vec<Vec<f64>>,
    lines: Vec<usize>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line, column, message: message.into() }
}

fn strip_comment(line: &str) -> &str {
    // '%' inside a quoted string does not start a comment
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '\'' => quoted = !quoted,
            '%' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_number(tok: &str) -> Option<f64> {
    match tok {
        "Inf" | "inf" => Some(f64::INFINITY),
        "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().ok().filter(|v| !v.is_nan()),
    }
}

enum Value {
    Scalar(f64, usize),
    Matrix(Table),
    Ignored,
}

/// Splits the text into `mpc.<field> = <value>` statements.
fn statements(text: &str) -> Result<(Option<String>, HashMap<String, Value>)> {
    let lines: Vec<&str> = text.lines().collect();
    let mut name = None;
    let mut fields = HashMap::new();
    let mut i = 0;
    while i < lines.len() {
        let raw = strip_comment(lines[i]);
        let line_no = i + 1;
        let trimmed = raw.trim();
        let indent = raw.len() - raw.trim_start().len();
        i += 1;
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("function") {
            let n = rest.rsplit('=').next().unwrap_or("").trim().trim_end_matches(';').trim();
            if n.is_empty() || !n.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(syntax(line_no, indent + 1, "malformed function header"));
            }
            name = Some(n.to_string());
            continue;
        }
        let Some(rest) = trimmed.strip_prefix("mpc.") else {
            return Err(syntax(line_no, indent + 1, format!("unexpected statement `{trimmed}`")));
        };
        let Some(eq) = rest.find('=') else {
            return Err(syntax(line_no, indent + 5, "expected `=`"));
        };
        let field = rest[..eq].trim().to_string();
        if field.is_empty() || !field.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(syntax(line_no, indent + 5, "malformed field name"));
        }
        let rhs_col = indent + 4 + eq + 2;
        let rhs = rest[eq + 1..].trim();
        if let Some(body) = rhs.strip_prefix('[') {
            let mut table = Table { rows: Vec::new(), lines: Vec::new() };
            let mut chunk = body.to_string();
            let mut chunk_line = line_no;
            let mut chunk_col = rhs_col + 1;
            loop {
                let (content, closed) = match chunk.find(']') {
                    Some(p) => (chunk[..p].to_string(), Some(chunk[p + 1..].trim().to_string())),
                    None => (chunk.clone(), None),
                };
                for row in content.split(';') {
                    let mut vals = Vec::new();
                    let mut col = chunk_col;
                    let mut rest = row;
                    while !rest.is_empty() {
                        let skip = rest.len() - rest.trim_start_matches(|c: char| c.is_whitespace() || c == ',').len();
                        col += skip;
                        rest = &rest[skip..];
                        if rest.is_empty() {
                            break;
                        }
                        let end = rest.find(|c: char| c.is_whitespace() || c == ',').unwrap_or(rest.len());
                        let tok = &rest[..end];
                        match parse_number(tok) {
                            Some(v) => vals.push(v),
                            None => return Err(syntax(chunk_line, col, format!("invalid number `{tok}`"))),
                        }
                        col += end;
                        rest = &rest[end..];
                    }
                    if !vals.is_empty() {
                        table.rows.push(vals);
                        table.lines.push(chunk_line);
                    }
                    chunk_col = col + 1;
                }
                if let Some(after) = closed {
                    if !after.is_empty() && after != ";" {
                        return Err(syntax(chunk_line, 1, format!("unexpected `{after}` after matrix")));
                    }
                    break;
                }
                if i >= lines.len() {
                    return Err(syntax(line_no, rhs_col, format!("matrix `{field}` is not closed")));
                }
                let raw = strip_comment(lines[i]);
                chunk = raw.to_string();
                chunk_line = i + 1;
                chunk_col = 1;
                i += 1;
            }
            fields.insert(field, Value::Matrix(table));
        } else if rhs.starts_with('{') {
            // cell arrays (bus names and the like) are skipped
            let mut depth = rhs.matches('{').count() as isize - rhs.matches('}').count() as isize;
            while depth > 0 {
                if i >= lines.len() {
                    return Err(syntax(line_no, rhs_col, format!("cell array `{field}` is not closed")));
                }
                let l = strip_comment(lines[i]);
                depth += l.matches('{').count() as isize - l.matches('}').count() as isize;
                i += 1;
            }
            fields.insert(field, Value::Ignored);
        } else {
            let v = rhs.trim_end_matches(';').trim();
            if v.starts_with('\'') {
                fields.insert(field, Value::Ignored);
            } else {
                match parse_number(v) {
                    Some(x) => {
                        fields.insert(field, Value::Scalar(x, line_no));
                    }
                    None => return Err(syntax(line_no, rhs_col, format!("invalid value `{v}`"))),
                }
            }
        }
    }
    Ok((name, fields))
}

fn table<'a>(fields: &'a HashMap<String, Value>, name: &str) -> Result<&'a Table> {
    match fields.get(name) {
        Some(Value::Matrix(t)) => Ok(t),
        Some(_) => Err(Error::Semantic(format!("mpc.{name} must be a matrix"))),
        None => Err(Error::Semantic(format!("missing mpc.{name}"))),
    }
}

fn need_cols(t: &Table, name: &str, n: usize) -> Result<()> {
    for (row, &line) in t.rows.iter().zip(&t.lines) {
        if row.len() < n {
            return Err(syntax(line, 1, format!("mpc.{name} rows need at least {n} columns, found {}", row.len())));
        }
    }
    Ok(())
}

fn as_id(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(Error::Semantic(format!("{what} `{v}` is not a positive integer")))
    }
}

/// Reads and parses a case file.
pub fn load_case(path: impl AsRef<std::path::Path>) -> Result<NetworkCase> {
    parse_case(&std::fs::read_to_string(path)?)
}

/// Parses a MATPOWER case file.
pub fn parse_case(text: &str) -> Result<NetworkCase> {
    let (name, fields) = statements(text)?;
    let base_mva = match fields.get("baseMVA") {
        Some(Value::Scalar(v, line)) if *v > 0.0 && v.is_finite() => {
            let _ = line;
            *v
        }
        Some(Value::Scalar(v, line)) => return Err(syntax(*line, 1, format!("baseMVA must be positive, got {v}"))),
        _ => return Err(Error::Semantic("missing mpc.baseMVA".into())),
    };

    let bus_t = table(&fields, "bus")?;
    need_cols(bus_t, "bus", 3)?;
    let mut buses = Vec::with_capacity(bus_t.rows.len());
    let mut seen = HashSet::new();
    let mut reference = None;
    for row in &bus_t.rows {
        let id = as_id(row[0], "bus id")?;
        if !seen.insert(id) {
            return Err(Error::Semantic(format!("duplicate bus id {id}")));
        }
        if !row[2].is_finite() {
            return Err(Error::Semantic(format!("bus {id} has a non-finite load")));
        }
        if row[1] == 3.0 && reference.is_none() {
            reference = Some(id);
        }
        buses.push(Bus { id, load: row[2] });
    }

    let br_t = table(&fields, "branch")?;
    need_cols(br_t, "branch", 4)?;
    let mut branches = Vec::with_capacity(br_t.rows.len());
    for (k, row) in br_t.rows.iter().enumerate() {
        let status = row.get(10).copied().unwrap_or(1.0);
        if status == 0.0 {
            continue;
        }
        let from = as_id(row[0], "branch endpoint")?;
        let to = as_id(row[1], "branch endpoint")?;
        for b in [from, to] {
            if !seen.contains(&b) {
                return Err(Error::Semantic(format!("branch {} references absent bus {b}", k + 1)));
            }
        }
        let x = row[3];
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Semantic(format!("branch {} ({from}-{to}) has non-positive reactance {x}", k + 1)));
        }
        let rate = row.get(5).copied().unwrap_or(0.0);
        if rate < 0.0 || rate.is_nan() {
            return Err(Error::Semantic(format!("branch {} has negative rating {rate}", k + 1)));
        }
        let rating = if rate == 0.0 { f64::INFINITY } else { rate };
        branches.push(Branch { from, to, reactance: x, rating });
    }

    let gen_t = table(&fields, "gen")?;
    need_cols(gen_t, "gen", 10)?;
    let cost_t = table(&fields, "gencost")?;
    if cost_t.rows.len() < gen_t.rows.len() {
        return Err(Error::Semantic(format!(
            "mpc.gencost has {} rows for {} generators",
            cost_t.rows.len(),
            gen_t.rows.len()
        )));
    }
    let mut generators = Vec::with_capacity(gen_t.rows.len());
    for (g, (row, crow)) in gen_t.rows.iter().zip(&cost_t.rows).enumerate() {
        if row[7] <= 0.0 {
            continue;
        }
        let bus = as_id(row[0], "generator bus")?;
        if !seen.contains(&bus) {
            return Err(Error::Semantic(format!("generator {} references absent bus {bus}", g + 1)));
        }
        let cost = linear_cost(crow, g + 1)?;
        generators.push(Generator { bus, pmin: row[9], pmax: row[8], cost });
    }

    let reference_bus = reference
        .or_else(|| generators.first().map(|g| g.bus))
        .ok_or_else(|| Error::Semantic("no reference bus and no generator".into()))?;
    Ok(NetworkCase {
        name: name.unwrap_or_else(|| "case".into()),
        base_mva,
        buses,
        branches,
        generators,
        reference_bus,
    })
}

fn linear_cost(row: &[f64], g: usize) -> Result<f64> {
    if row.len() < 4 {
        return Err(Error::Semantic(format!("gencost row {g} is too short")));
    }
    if row[0] == 1.0 {
        return Err(Error::Unsupported(format!("piecewise linear cost on generator {g}")));
    }
    if row[0] != 2.0 {
        return Err(Error::Unsupported(format!("cost model {} on generator {g}", row[0])));
    }
    let n = row[3];
    if !(n >= 0.0 && n.fract() == 0.0) || row.len() < 4 + n as usize {
        return Err(Error::Semantic(format!("gencost row {g} declares {n} coefficients")));
    }
    let coeffs = &row[4..4 + n as usize];
    // highest order first; everything above degree one must vanish
    let k = coeffs.len();
    for (i, &c) in coeffs.iter().enumerate() {
        let degree = k - 1 - i;
        if degree >= 2 && c != 0.0 {
            return Err(Error::Unsupported(format!("degree-{degree} cost term on generator {g}")));
        }
    }
    let c1 = if k >= 2 { coeffs[k - 2] } else { 0.0 };
    if !c1.is_finite() {
        return Err(Error::Semantic(format!("generator {g} has a non-finite cost")));
    }
    Ok(c1)
}

/// Writes the case back in MATPOWER syntax. Parsing the output yields an
/// identical case.
pub fn write_case(case: &NetworkCase) -> String {
    let mut s = String::new();
    let gen_buses: HashSet<usize> = case.generators.iter().map(|g| g.bus).collect();
    let _ = writeln!(s, "function mpc = {}", case.name);
    let _ = writeln!(s, "mpc.version = '2';");
    let _ = writeln!(s, "mpc.baseMVA = {:?};", case.base_mva);
    let _ = writeln!(s, "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin");
    let _ = writeln!(s, "mpc.bus = [");
    for b in &case.buses {
        let kind = if b.id == case.reference_bus {
            3
        } else if gen_buses.contains(&b.id) {
            2
        } else {
            1
        };
        let _ = writeln!(s, "\t{}\t{kind}\t{:?}\t0\t0\t0\t1\t1\t0\t230\t1\t1.1\t0.9;", b.id, b.load);
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin");
    let _ = writeln!(s, "mpc.gen = [");
    for g in &case.generators {
        let _ = writeln!(s, "\t{}\t0\t0\t0\t0\t1\t{:?}\t1\t{:?}\t{:?};", g.bus, case.base_mva, g.pmax, g.pmin);
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax");
    let _ = writeln!(s, "mpc.branch = [");
    for br in &case.branches {
        let r = if br.is_rated() { br.rating } else { 0.0 };
        let _ = writeln!(
            s,
            "\t{}\t{}\t0\t{:?}\t0\t{r:?}\t{r:?}\t{r:?}\t0\t0\t1\t-360\t360;",
            br.from, br.to, br.reactance
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "mpc.gencost = [");
    for g in &case.generators {
        let _ = writeln!(s, "\t2\t0\t0\t2\t{:?}\t0;", g.cost);
    }
    let _ = writeln!(s, "];");
    s
}

/// Lists violations of the case invariants. An empty list means the case
/// is usable.
pub fn validate_case(case: &NetworkCase) -> Vec<String> {
    let mut out = Vec::new();
    let pos = case.bus_positions();
    if pos.len() != case.buses.len() {
        out.push("duplicate bus ids".to_string());
    }
    if !(case.base_mva > 0.0) {
        out.push(format!("base MVA {} is not positive", case.base_mva));
    }
    if !pos.contains_key(&case.reference_bus) {
        out.push(format!("reference bus {} does not exist", case.reference_bus));
    }
    for (k, br) in case.branches.iter().enumerate() {
        for b in [br.from, br.to] {
            if !pos.contains_key(&b) {
                out.push(format!("branch {} references absent bus {b}", k + 1));
            }
        }
        if !(br.reactance > 0.0) {
            out.push(format!("branch {} has non-positive reactance {}", k + 1, br.reactance));
        }
        if !(br.rating > 0.0) {
            out.push(format!("branch {} has non-positive rating {}", k + 1, br.rating));
        }
    }
    for (g, gen) in case.generators.iter().enumerate() {
        if !pos.contains_key(&gen.bus) {
            out.push(format!("generator {} references absent bus {}", g + 1, gen.bus));
        }
        if !(gen.pmin <= gen.pmax) {
            out.push(format!("generator {} has Pmin {} above Pmax {}", g + 1, gen.pmin, gen.pmax));
        }
    }
    if case.total_capacity() < case.total_load() {
        out.push(format!(
            "insufficient capacity: {} MW of generation for {} MW of load",
            case.total_capacity(),
            case.total_load()
        ));
    }
    let min_output: f64 = case.generators.iter().map(|g| g.pmin).sum();
    if min_output > case.total_load() {
        out.push(format!("minimum generation {min_output} MW exceeds load {} MW", case.total_load()));
    }
    if !case.buses.is_empty() {
        let mut adj = vec![Vec::new(); case.buses.len()];
        for br in &case.branches {
            if let (Some(&a), Some(&b)) = (pos.get(&br.from), pos.get(&br.to)) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut seen = vec![false; case.buses.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        let islanded: Vec<usize> = case.buses.iter().zip(&seen).filter(|(_, &s)| !s).map(|(b, _)| b.id).collect();
        if !islanded.is_empty() {
            out.push(format!("network is disconnected: buses {islanded:?} unreachable from bus {}", case.buses[0].id));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_BUS: &str = "function mpc = two_bus
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0;
    2 1 100;
];
mpc.gen = [
    1 0 0 0 0 1 100 1 200 0;
];
mpc.branch = [
    1 2 0 0.1 0 150 0 0 0 0 1;
];
mpc.gencost = [
    2 0 0 2 10 0;
];
";

    #[test]
    fn minimal_case() {
        let c = parse_case(TWO_BUS).unwrap();
        assert_eq!((c.n_bus(), c.n_branch(), c.n_gen()), (2, 1, 1));
        assert_eq!(c.reference_bus, 1);
        assert_eq!(c.branches[0].rating, 150.0);
        assert!(validate_case(&c).is_empty());
    }

    #[test]
    fn dangling_bus_is_named() {
        let text = TWO_BUS.replace("1 2 0 0.1 0 150", "1 99 0 0.1 0 150");
        let err = parse_case(&text).unwrap_err().to_string();
        assert!(err.contains("99"), "{err}");
    }

    #[test]
    fn negative_reactance_rejected() {
        let text = TWO_BUS.replace("1 2 0 0.1", "1 2 0 -0.1");
        assert!(matches!(parse_case(&text), Err(Error::Semantic(_))));
    }

    #[test]
    fn syntax_error_has_position() {
        let text = TWO_BUS.replace("2 1 100;", "2 1 1x0;");
        match parse_case(&text) {
            Err(Error::Syntax { line, column, .. }) => {
                assert_eq!(line, 5);
                assert_eq!(column, 9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unclosed_matrix() {
        let text = TWO_BUS.replace("    1 2 0 0.1 0 150 0 0 0 0 1;\n];", "    1 2 0 0.1 0 150 0 0 0 0 1;");
        let text = text.replace("mpc.gencost = [\n    2 0 0 2 10 0;\n];\n", "");
        assert!(matches!(parse_case(&text), Err(Error::Syntax { .. })));
    }

    #[test]
    fn zero_rating_is_unlimited() {
        let text = TWO_BUS.replace("1 2 0 0.1 0 150", "1 2 0 0.1 0 0");
        let c = parse_case(&text).unwrap();
        assert!(!c.branches[0].is_rated());
    }

    #[test]
    fn out_of_service_dropped() {
        let text = TWO_BUS.replace(
            "    1 2 0 0.1 0 150 0 0 0 0 1;\n",
            "    1 2 0 0.1 0 150 0 0 0 0 1;\n    1 2 0 0.2 0 50 0 0 0 0 0;\n",
        );
        let text = text.replace(
            "    1 0 0 0 0 1 100 1 200 0;\n",
            "    1 0 0 0 0 1 100 1 200 0;\n    2 0 0 0 0 1 100 0 50 0;\n",
        );
        let text = text.replace("    2 0 0 2 10 0;\n", "    2 0 0 2 10 0;\n    2 0 0 2 99 0;\n");
        let c = parse_case(&text).unwrap();
        assert_eq!((c.n_branch(), c.n_gen()), (1, 1));
        assert_eq!(c.generators[0].cost, 10.0);
    }

    #[test]
    fn quadratic_costs() {
        let zero = TWO_BUS.replace("2 0 0 2 10 0;", "2 0 0 3 0 10 5;");
        assert_eq!(parse_case(&zero).unwrap().generators[0].cost, 10.0);
        let quad = TWO_BUS.replace("2 0 0 2 10 0;", "2 0 0 3 0.01 10 5;");
        assert!(matches!(parse_case(&quad), Err(Error::Unsupported(_))));
        let pwl = TWO_BUS.replace("2 0 0 2 10 0;", "1 0 0 2 0 0 100 1000;");
        assert!(matches!(parse_case(&pwl), Err(Error::Unsupported(_))));
    }

    #[test]
    fn round_trip() {
        let c = parse_case(TWO_BUS).unwrap();
        assert_eq!(parse_case(&write_case(&c)).unwrap(), c);
    }

    #[test]
    fn validation_reports() {
        let mut c = parse_case(TWO_BUS).unwrap();
        c.buses.push(Bus { id: 3, load: 0.0 });
        let r = validate_case(&c);
        assert!(r.iter().any(|v| v.contains("disconnected")), "{r:?}");

        let mut c = parse_case(TWO_BUS).unwrap();
        c.generators[0].pmax = 50.0;
        let r = validate_case(&c);
        assert!(r.iter().any(|v| v.contains("capacity")), "{r:?}");
    }
}
