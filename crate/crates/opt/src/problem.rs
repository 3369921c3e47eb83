//! Problem containers for linear and mixed-binary programs.

use std::fmt::Write as _;

use crate::error::{OptError, OptResult};

/// Direction of optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Relation of a constraint row to its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// Handle to a column of an [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Handle to a row of an [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

/// A constraint `lower <= sum(coeff * x) <= upper`.
///
/// `Le`, `Ge` and `Eq` rows are the special cases with one infinite side or
/// equal sides. Ranged rows carry both.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

impl Row {
    pub fn relation(&self) -> Option<Relation> {
        match (self.lower.is_finite(), self.upper.is_finite()) {
            (true, true) if self.lower == self.upper => Some(Relation::Eq),
            (false, true) => Some(Relation::Le),
            (true, false) => Some(Relation::Ge),
            _ => None,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// A linear program in row form with bounded columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    /// Constant added to the objective value.
    pub objective_offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub var_names: Vec<String>,
    pub rows: Vec<Row>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            objective_offset: 0.0,
            lower: Vec::new(),
            upper: Vec::new(),
            var_names: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_names.push(name.into());
        VarId(self.objective.len() - 1)
    }

    pub fn add_row<I>(&mut self, name: impl Into<String>, coeffs: I, rel: Relation, rhs: f64) -> RowId
    where
        I: IntoIterator<Item = (VarId, f64)>,
    {
        let (lower, upper) = match rel {
            Relation::Le => (f64::NEG_INFINITY, rhs),
            Relation::Ge => (rhs, f64::INFINITY),
            Relation::Eq => (rhs, rhs),
        };
        self.add_range_row(name, coeffs, lower, upper)
    }

    /// Adds `lower <= a.x <= upper`. Duplicate column entries are summed and
    /// exact zeros dropped.
    pub fn add_range_row<I>(&mut self, name: impl Into<String>, coeffs: I, lower: f64, upper: f64) -> RowId
    where
        I: IntoIterator<Item = (VarId, f64)>,
    {
        let mut c: Vec<(usize, f64)> = coeffs.into_iter().map(|(v, a)| (v.0, a)).collect();
        c.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c.len());
        for (j, a) in c {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Row { name: name.into(), coeffs: merged, lower, upper });
        RowId(self.rows.len() - 1)
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        self.lower[v.0] = lower;
        self.upper[v.0] = upper;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Checks structural well-formedness: consistent lengths, column indices
    /// in range, no NaN and a finite objective.
    pub fn validate(&self) -> OptResult<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.var_names.len() != n {
            return Err(OptError::Malformed("column vectors have inconsistent lengths".into()));
        }
        if !self.objective_offset.is_finite() {
            return Err(OptError::Malformed("objective offset is not finite".into()));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(OptError::Malformed(format!("objective coefficient of {} is not finite", self.var_names[j])));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(OptError::Malformed(format!("NaN bound on {}", self.var_names[j])));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(OptError::Malformed(format!("empty domain for {}", self.var_names[j])));
            }
        }
        for row in &self.rows {
            if row.lower.is_nan() || row.upper.is_nan() {
                return Err(OptError::Malformed(format!("NaN bound on row {}", row.name)));
            }
            if row.lower == f64::INFINITY || row.upper == f64::NEG_INFINITY {
                return Err(OptError::Malformed(format!("row {} has an empty range", row.name)));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(OptError::Malformed(format!("row {} references column {j} of {n}", row.name)));
                }
                if !a.is_finite() {
                    return Err(OptError::Malformed(format!("row {} has a non-finite coefficient", row.name)));
                }
            }
        }
        Ok(())
    }

    /// Renders the problem in CPLEX LP text format for cross-checks with
    /// external solvers.
    pub fn to_lp_format(&self, binaries: &[VarId]) -> String {
        fn name_of(raw: &str, idx: usize) -> String {
            let clean: String = raw
                .chars()
                .map(|ch| if ch.is_ascii_alphanumeric() || "_.[]".contains(ch) { ch } else { '_' })
                .collect();
            if clean.is_empty() || clean.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
                format!("x{idx}_{clean}")
            } else {
                clean
            }
        }
        fn term(out: &mut String, a: f64, name: &str, first: bool) {
            if a < 0.0 {
                let _ = write!(out, " - {} {}", -a, name);
            } else if first {
                let _ = write!(out, " {} {}", a, name);
            } else {
                let _ = write!(out, " + {} {}", a, name);
            }
        }
        let names: Vec<String> = self.var_names.iter().enumerate().map(|(j, s)| name_of(s, j)).collect();
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n obj:",
            Sense::Maximize => "Maximize\n obj:",
        });
        let mut first = true;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                term(&mut out, c, &names[j], first);
                first = false;
            }
        }
        if first {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let label = format!("r{}_{}", i, name_of(&row.name, i));
            let mut lhs = String::new();
            let mut first = true;
            for &(j, a) in &row.coeffs {
                term(&mut lhs, a, &names[j], first);
                first = false;
            }
            if first {
                lhs.push_str(" 0 ");
                lhs.push_str(&names.first().cloned().unwrap_or_default());
            }
            match row.relation() {
                Some(Relation::Eq) => {
                    let _ = writeln!(out, " {label}:{lhs} = {}", row.lower);
                }
                Some(Relation::Le) => {
                    let _ = writeln!(out, " {label}:{lhs} <= {}", row.upper);
                }
                Some(Relation::Ge) => {
                    let _ = writeln!(out, " {label}:{lhs} >= {}", row.lower);
                }
                None if row.lower.is_finite() => {
                    let _ = writeln!(out, " {label}_lo:{lhs} >= {}", row.lower);
                    let _ = writeln!(out, " {label}_hi:{lhs} <= {}", row.upper);
                }
                None => {}
            }
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            let (l, u) = (self.lower[j], self.upper[j]);
            match (l.is_finite(), u.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " {} free", names[j]);
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {} <= {}", l, names[j], u);
                }
                (true, false) => {
                    let _ = writeln!(out, " {} >= {}", names[j], l);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {} <= {}", names[j], u);
                }
            }
        }
        if !binaries.is_empty() {
            out.push_str("Binaries\n");
            for b in binaries {
                let _ = writeln!(out, " {}", names[b.0]);
            }
        }
        out.push_str("End\n");
        out
    }
}

/// An LP plus a set of columns restricted to `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpProblem {
    pub lp: LpProblem,
    pub binaries: Vec<VarId>,
}

impl MilpProblem {
    pub fn new(lp: LpProblem) -> Self {
        Self { lp, binaries: Vec::new() }
    }

    /// Adds a `{0,1}` column.
    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> VarId {
        let v = self.lp.add_var(name, 0.0, 1.0, cost);
        self.binaries.push(v);
        v
    }

    pub fn num_binaries(&self) -> usize {
        self.binaries.len()
    }

    pub fn validate(&self) -> OptResult<()> {
        self.lp.validate()?;
        for b in &self.binaries {
            if b.0 >= self.lp.num_vars() {
                return Err(OptError::Malformed(format!("binary index {} out of range", b.0)));
            }
            if self.lp.lower[b.0] < 0.0 || self.lp.upper[b.0] > 1.0 {
                return Err(OptError::Malformed(format!(
                    "binary {} must carry bounds within [0,1]",
                    self.lp.var_names[b.0]
                )));
            }
        }
        Ok(())
    }

    pub fn to_lp_format(&self) -> String {
        self.lp.to_lp_format(&self.binaries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_coefficients_are_merged() {
        let mut p = LpProblem::new(Sense::Minimize);
        let x = p.add_var("x", 0.0, 1.0, 1.0);
        let y = p.add_var("y", 0.0, 1.0, 1.0);
        p.add_row("r", [(x, 1.0), (y, 2.0), (x, 0.5), (y, -2.0)], Relation::Le, 3.0);
        assert_eq!(p.rows[0].coeffs, vec![(0, 1.5)]);
        assert_eq!(p.rows[0].relation(), Some(Relation::Le));
    }

    #[test]
    fn validation_rejects_nan_and_bad_indices() {
        let mut p = LpProblem::new(Sense::Minimize);
        let x = p.add_var("x", 0.0, f64::NAN, 1.0);
        assert!(p.validate().is_err());
        p.set_bounds(x, 0.0, 1.0);
        assert!(p.validate().is_ok());
        p.rows.push(Row { name: "bad".into(), coeffs: vec![(3, 1.0)], lower: 0.0, upper: 1.0 });
        assert!(p.validate().is_err());
    }

    #[test]
    fn binaries_need_unit_bounds() {
        let mut m = MilpProblem::new(LpProblem::new(Sense::Maximize));
        let b = m.add_binary("b", 1.0);
        assert!(m.validate().is_ok());
        m.lp.set_bounds(b, 0.0, 2.0);
        assert!(m.validate().is_err());
    }

    #[test]
    fn lp_export_lists_sections() {
        let mut m = MilpProblem::new(LpProblem::new(Sense::Maximize));
        let x = m.lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let d = m.add_binary("d[1]", 0.0);
        m.lp.add_row("cap", [(x, 1.0), (d, -5.0)], Relation::Le, 0.0);
        m.lp.add_range_row("band", [(x, 1.0)], -2.0, 2.0);
        let text = m.to_lp_format();
        assert!(text.starts_with("Maximize"));
        assert!(text.contains("x free"));
        assert!(text.contains("Binaries\n d[1]"));
        assert!(text.contains("_lo:"));
    }
}
