//! Bounded-variable revised simplex.
//!
//! The problem `lower <= A x <= upper, l <= x <= u` is rewritten as
//! `A x - w = 0` with one logical column `w_i` per row carrying the row
//! range as bounds, so every column (structural or logical) is boxed and
//! the initial basis is the logical one. The basis inverse is kept dense and
//! updated in product form; refactorization exploits the logical columns so
//! its cost is cubic only in the number of basic structurals.
//!
//! Internally the engine always minimizes over a row/column scaled copy of
//! the problem. Primal simplex (composite phase 1 + phase 2) handles cold
//! starts; dual simplex handles warm starts after bound changes.

use log::trace;

use crate::error::{OptError, OptResult};
use crate::problem::{LpProblem, Sense};
use crate::settings::Tolerances;
use crate::solution::{LpSolution, LpStatus};

const NONBASIC: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NbPos {
    Lower,
    Upper,
    Free,
}

/// Snapshot of a simplex basis, usable to warm-start a later solve of a
/// problem with the same rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub(crate) head: Vec<usize>,
    pub(crate) nb: Vec<NbPos>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EngineStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum PrimalOutcome {
    Optimal,
    Unbounded,
    Infeasible,
}

enum DualOutcome {
    Optimal,
    Infeasible(usize),
    GaveUp,
}

pub(crate) struct Simplex {
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    obj_scale: f64,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    pos: Vec<usize>,
    nb: Vec<NbPos>,
    binv: Vec<f64>,
    since_refactor: usize,
    binv_valid: bool,
    pub(crate) iterations: usize,
    tol: Tolerances,
    farkas: Option<Vec<f64>>,
}

fn pow2_round(v: f64) -> f64 {
    if !v.is_finite() || v <= 0.0 {
        1.0
    } else {
        2f64.powi(v.log2().round() as i32)
    }
}

impl Simplex {
    pub(crate) fn new(p: &LpProblem, tol: Tolerances) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        // column-major copy of A
        let mut counts = vec![0usize; n + 1];
        for row in &p.rows {
            for &(j, _) in &row.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let nnz = counts[n];
        let mut fill = counts.clone();
        let mut col_idx = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, row) in p.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                col_idx[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }

        // geometric-mean scaling followed by max-norm equilibration; entries
        // that are negligible next to the largest one do not steer the scales
        let amax = col_val.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let negligible = amax * 1e-9;
        let mut rs = vec![1.0; m];
        let mut cs = vec![1.0; n];
        for _ in 0..6 {
            let mut rmin = vec![f64::INFINITY; m];
            let mut rmax = vec![0.0f64; m];
            for j in 0..n {
                for k in counts[j]..counts[j + 1] {
                    if col_val[k].abs() <= negligible {
                        continue;
                    }
                    let v = (col_val[k] * cs[j]).abs();
                    let i = col_idx[k];
                    rmin[i] = rmin[i].min(v);
                    rmax[i] = rmax[i].max(v);
                }
            }
            for i in 0..m {
                if rmax[i] > 0.0 {
                    rs[i] = 1.0 / (rmin[i] * rmax[i]).sqrt();
                }
            }
            for j in 0..n {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for k in counts[j]..counts[j + 1] {
                    if col_val[k].abs() <= negligible {
                        continue;
                    }
                    let v = (col_val[k] * rs[col_idx[k]]).abs();
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if hi > 0.0 {
                    cs[j] = 1.0 / (lo * hi).sqrt();
                }
            }
        }
        let mut rmax = vec![0.0f64; m];
        for j in 0..n {
            for k in counts[j]..counts[j + 1] {
                let i = col_idx[k];
                rmax[i] = rmax[i].max((col_val[k] * cs[j] * rs[i]).abs());
            }
        }
        for i in 0..m {
            if rmax[i] > 0.0 {
                rs[i] /= rmax[i];
            }
            rs[i] = pow2_round(rs[i]);
        }
        for c in cs.iter_mut() {
            *c = pow2_round(*c);
        }
        for j in 0..n {
            for k in counts[j]..counts[j + 1] {
                col_val[k] *= rs[col_idx[k]] * cs[j];
            }
        }

        let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let cmax = (0..n).map(|j| (p.objective[j] * cs[j]).abs()).fold(0.0f64, f64::max);
        let obj_scale = if cmax > 0.0 { pow2_round(1.0 / cmax) } else { 1.0 };
        let mut cost = vec![0.0; n + m];
        let mut lb = vec![0.0; n + m];
        let mut ub = vec![0.0; n + m];
        for j in 0..n {
            cost[j] = sign * p.objective[j] * cs[j] * obj_scale;
            lb[j] = p.lower[j] / cs[j];
            ub[j] = p.upper[j] / cs[j];
        }
        for (i, row) in p.rows.iter().enumerate() {
            lb[n + i] = row.lower * rs[i];
            ub[n + i] = row.upper * rs[i];
        }

        let mut s = Self {
            m,
            n,
            col_start: counts,
            col_idx,
            col_val,
            row_scale: rs,
            col_scale: cs,
            obj_scale,
            cost,
            lb,
            ub,
            x: vec![0.0; n + m],
            head: (n..n + m).collect(),
            pos: vec![NONBASIC; n + m],
            nb: vec![NbPos::Lower; n + m],
            binv: vec![0.0; m * m],
            since_refactor: 0,
            binv_valid: false,
            iterations: 0,
            tol,
            farkas: None,
        };
        s.cold_basis();
        s
    }

    fn default_nb(&self, j: usize) -> NbPos {
        let (l, u) = (self.lb[j], self.ub[j]);
        match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if l.abs() <= u.abs() {
                    NbPos::Lower
                } else {
                    NbPos::Upper
                }
            }
            (true, false) => NbPos::Lower,
            (false, true) => NbPos::Upper,
            (false, false) => NbPos::Free,
        }
    }

    fn place_nonbasic(&mut self, j: usize) {
        // keep the recorded side unless that bound is infinite
        let st = match self.nb[j] {
            NbPos::Lower if self.lb[j].is_finite() => NbPos::Lower,
            NbPos::Upper if self.ub[j].is_finite() => NbPos::Upper,
            _ => self.default_nb(j),
        };
        self.nb[j] = st;
        self.x[j] = match st {
            NbPos::Lower => self.lb[j],
            NbPos::Upper => self.ub[j],
            NbPos::Free => 0.0,
        };
    }

    pub(crate) fn cold_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.binv_valid = false;
        self.head = (n..n + m).collect();
        self.pos = vec![NONBASIC; n + m];
        for (p, &j) in self.head.iter().enumerate() {
            self.pos[j] = p;
        }
        for j in 0..n + m {
            if self.pos[j] == NONBASIC {
                self.nb[j] = self.default_nb(j);
                self.place_nonbasic(j);
            }
        }
    }

    pub(crate) fn basis(&self) -> Basis {
        Basis { head: self.head.clone(), nb: self.nb.clone() }
    }

    pub(crate) fn load_basis(&mut self, b: &Basis) -> bool {
        let total = self.n + self.m;
        if b.head.len() != self.m || b.nb.len() != total {
            return false;
        }
        self.head = b.head.clone();
        self.nb = b.nb.clone();
        self.binv_valid = false;
        self.pos = vec![NONBASIC; total];
        for (p, &j) in self.head.iter().enumerate() {
            if j >= total || self.pos[j] != NONBASIC {
                self.cold_basis();
                return false;
            }
            self.pos[j] = p;
        }
        for j in 0..total {
            if self.pos[j] == NONBASIC {
                self.place_nonbasic(j);
            }
        }
        true
    }

    /// Changes the (unscaled) bounds of structural column `j`.
    pub(crate) fn set_col_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lb[j] = lower / self.col_scale[j];
        self.ub[j] = upper / self.col_scale[j];
        if self.pos[j] == NONBASIC {
            self.place_nonbasic(j);
        }
    }

    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for k in self.col_start[j]..self.col_start[j + 1] {
                s += self.col_val[k] * v[self.col_idx[k]];
            }
            s
        } else {
            -v[j - self.n]
        }
    }

    /// alpha = B^-1 a_j
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if j < self.n {
            let range = self.col_start[j]..self.col_start[j + 1];
            for (p, o) in out.iter_mut().enumerate() {
                let row = &self.binv[p * m..(p + 1) * m];
                let mut s = 0.0;
                for k in range.clone() {
                    s += row[self.col_idx[k]] * self.col_val[k];
                }
                *o = s;
            }
        } else {
            let i = j - self.n;
            for (p, o) in out.iter_mut().enumerate() {
                *o = -self.binv[p * m + i];
            }
        }
        out
    }

    /// y = c_B^T B^-1
    fn btran_costs(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (p, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.binv[p * m..(p + 1) * m];
                for (yk, &b) in y.iter_mut().zip(row) {
                    *yk += c * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, costs: &[f64], y: &[f64]) -> f64 {
        costs[j] - self.col_dot(j, y)
    }

    /// Rebuilds the dense inverse from the current basis heading. Dependent
    /// structural columns are swapped for logicals.
    fn refactor(&mut self) -> OptResult<()> {
        let (n, m) = (self.n, self.m);
        for _attempt in 0..4 {
            let structs: Vec<(usize, usize)> =
                self.head.iter().enumerate().filter(|(_, &j)| j < n).map(|(p, &j)| (p, j)).collect();
            let mut covered = vec![false; m];
            for &j in &self.head {
                if j >= n {
                    covered[j - n] = true;
                }
            }
            let krows: Vec<usize> = (0..m).filter(|&i| !covered[i]).collect();
            let k = structs.len();
            if krows.len() != k {
                return Err(OptError::Numerical("inconsistent basis heading".into()));
            }
            let mut kpos = vec![usize::MAX; m];
            for (a, &i) in krows.iter().enumerate() {
                kpos[i] = a;
            }
            // B11 (k x k) augmented with identity, Gauss-Jordan with partial pivoting
            let w = 2 * k;
            let mut aug = vec![0.0; k * w];
            for (b, &(_, j)) in structs.iter().enumerate() {
                for q in self.col_start[j]..self.col_start[j + 1] {
                    let i = self.col_idx[q];
                    if kpos[i] != usize::MAX {
                        aug[kpos[i] * w + b] = self.col_val[q];
                    }
                }
            }
            for a in 0..k {
                aug[a * w + k + a] = 1.0;
            }
            let mut row_of_col = vec![usize::MAX; k];
            let mut used = vec![false; k];
            let mut dependent = Vec::new();
            for b in 0..k {
                let mut best = usize::MAX;
                let mut bv = 1e-11;
                for a in 0..k {
                    if !used[a] {
                        let v = aug[a * w + b].abs();
                        if v > bv {
                            bv = v;
                            best = a;
                        }
                    }
                }
                if best == usize::MAX {
                    dependent.push(b);
                    continue;
                }
                used[best] = true;
                row_of_col[b] = best;
                let piv = aug[best * w + b];
                for c in 0..w {
                    aug[best * w + c] /= piv;
                }
                let prow: Vec<f64> = aug[best * w..(best + 1) * w].to_vec();
                for a in 0..k {
                    if a != best {
                        let f = aug[a * w + b];
                        if f != 0.0 {
                            let r = &mut aug[a * w..(a + 1) * w];
                            for c in 0..w {
                                r[c] -= f * prow[c];
                            }
                        }
                    }
                }
            }
            if !dependent.is_empty() {
                let free_rows: Vec<usize> = (0..k).filter(|&a| !used[a]).collect();
                for (d, &b) in dependent.iter().enumerate() {
                    let (p, j) = structs[b];
                    let i = krows[free_rows[d]];
                    self.pos[j] = NONBASIC;
                    self.nb[j] = self.default_nb(j);
                    self.place_nonbasic(j);
                    self.head[p] = n + i;
                    self.pos[n + i] = p;
                }
                trace!("refactor replaced {} dependent columns", dependent.len());
                continue;
            }
            // inverse rows of B11: inv[b][a] lives in aug[row_of_col[b]][k + a]
            self.binv.iter_mut().for_each(|v| *v = 0.0);
            for (b, &(p, _)) in structs.iter().enumerate() {
                let src = row_of_col[b] * w + k;
                for a in 0..k {
                    self.binv[p * m + krows[a]] = aug[src + a];
                }
            }
            for (p, &j) in self.head.iter().enumerate() {
                if j >= n {
                    self.binv[p * m + (j - n)] = -1.0;
                }
            }
            for (b, &(_, j)) in structs.iter().enumerate() {
                let src = row_of_col[b] * w + k;
                for q in self.col_start[j]..self.col_start[j + 1] {
                    let i = self.col_idx[q];
                    if covered[i] {
                        let p = self.pos[n + i];
                        let v = self.col_val[q];
                        for a in 0..k {
                            self.binv[p * m + krows[a]] += v * aug[src + a];
                        }
                    }
                }
            }
            self.since_refactor = 0;
            self.binv_valid = true;
            self.recompute_xb();
            return Ok(());
        }
        Err(OptError::Numerical("basis repair did not converge".into()))
    }

    fn recompute_xb(&mut self) {
        let (n, m) = (self.n, self.m);
        let mut v = vec![0.0; m];
        for j in 0..n {
            if self.pos[j] == NONBASIC && self.x[j] != 0.0 {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    v[self.col_idx[k]] += self.col_val[k] * self.x[j];
                }
            }
        }
        for i in 0..m {
            if self.pos[n + i] == NONBASIC {
                v[i] -= self.x[n + i];
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let s: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            self.x[self.head[p]] = -s;
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let mut prow: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for (p, &a) in alpha.iter().enumerate() {
            if p != r && a != 0.0 {
                let row = &mut self.binv[p * m..(p + 1) * m];
                for (x, &pr) in row.iter_mut().zip(&prow) {
                    *x -= a * pr;
                }
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&prow);
        let leaving = self.head[r];
        self.pos[leaving] = NONBASIC;
        self.head[r] = q;
        self.pos[q] = r;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lb[j] {
            self.lb[j] - v
        } else if v > self.ub[j] {
            v - self.ub[j]
        } else {
            0.0
        }
    }

    fn primal_infeasible(&self) -> bool {
        let ftol = self.ftol();
        self.head.iter().any(|&j| self.infeasibility(j) > ftol)
    }

    fn ftol(&self) -> f64 {
        (self.tol.feas_tol * 1e-2).max(1e-10)
    }

    fn dual_feasible(&self) -> bool {
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        let y = self.btran_costs(&cb);
        let dtol = self.tol.opt_tol.max(1e-9) * 10.0;
        (0..self.n + self.m).all(|j| {
            if self.pos[j] != NONBASIC || self.lb[j] == self.ub[j] {
                return true;
            }
            let d = self.reduced_cost(j, &self.cost, &y);
            match self.nb[j] {
                NbPos::Lower => d >= -dtol,
                NbPos::Upper => d <= dtol,
                NbPos::Free => d.abs() <= dtol,
            }
        })
    }

    fn iteration_cap(&self) -> usize {
        if self.tol.max_iterations > 0 {
            self.tol.max_iterations
        } else {
            50 * (self.n + self.m) + 20_000
        }
    }

    fn maybe_refactor(&mut self) -> OptResult<()> {
        if self.since_refactor >= 100 {
            self.refactor()?;
        }
        Ok(())
    }

    /// Primal simplex. Phase one minimizes the sum of bound violations of
    /// basic variables, phase two the true objective.
    fn primal(&mut self, phase: Phase, start_iter: usize) -> OptResult<PrimalOutcome> {
        let (n, m) = (self.n, self.m);
        let total = n + m;
        let ftol = self.ftol();
        let dtol = self.tol.opt_tol;
        let ptol = self.tol.pivot_tol;
        let cap = self.iteration_cap();
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut phase_cost = vec![0.0; total];
        loop {
            if self.iterations - start_iter > cap {
                return Err(OptError::Numerical(format!("simplex iteration limit {cap} exceeded")));
            }
            self.maybe_refactor()?;
            let costs: &[f64] = match phase {
                Phase::Two => &self.cost,
                Phase::One => {
                    phase_cost.iter_mut().for_each(|c| *c = 0.0);
                    let mut any = false;
                    for &j in &self.head {
                        let v = self.x[j];
                        if v < self.lb[j] - ftol {
                            phase_cost[j] = -1.0;
                            any = true;
                        } else if v > self.ub[j] + ftol {
                            phase_cost[j] = 1.0;
                            any = true;
                        }
                    }
                    if !any {
                        return Ok(PrimalOutcome::Optimal);
                    }
                    &phase_cost
                }
            };
            let cb: Vec<f64> = self.head.iter().map(|&j| costs[j]).collect();
            let y = self.btran_costs(&cb);

            // pricing
            let mut enter = usize::MAX;
            let mut enter_dir = 0.0;
            let mut best = 0.0;
            for j in 0..total {
                if self.pos[j] != NONBASIC || self.lb[j] == self.ub[j] {
                    continue;
                }
                let d = self.reduced_cost(j, costs, &y);
                let dir = match self.nb[j] {
                    NbPos::Lower if d < -dtol => 1.0,
                    NbPos::Upper if d > dtol => -1.0,
                    NbPos::Free if d.abs() > dtol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    enter = j;
                    enter_dir = dir;
                }
            }
            if enter == usize::MAX {
                if phase == Phase::One {
                    let farkas = y.clone();
                    self.farkas = Some(farkas);
                    return Ok(PrimalOutcome::Infeasible);
                }
                return Ok(PrimalOutcome::Optimal);
            }
            let q = enter;
            let dir = enter_dir;
            let alpha = self.ftran(q);

            // Harris two-pass ratio test
            let mut tmax = f64::INFINITY;
            for p in 0..m {
                let a = alpha[p];
                if a.abs() <= ptol {
                    continue;
                }
                let j = self.head[p];
                let g = -dir * a;
                let v = self.x[j];
                let t = if g < 0.0 {
                    if phase == Phase::One && v < self.lb[j] - ftol {
                        continue;
                    } else if phase == Phase::One && v > self.ub[j] + ftol {
                        (v - self.ub[j] + ftol) / -g
                    } else if self.lb[j].is_finite() {
                        (v - self.lb[j] + ftol) / -g
                    } else {
                        continue;
                    }
                } else if phase == Phase::One && v > self.ub[j] + ftol {
                    continue;
                } else if phase == Phase::One && v < self.lb[j] - ftol {
                    (self.lb[j] - v + ftol) / g
                } else if self.ub[j].is_finite() {
                    (self.ub[j] - v + ftol) / g
                } else {
                    continue;
                };
                tmax = tmax.min(t);
            }
            let mut leave = usize::MAX;
            let mut leave_to_upper = false;
            let mut step = 0.0;
            let mut best_piv = 0.0;
            if tmax.is_finite() {
                for p in 0..m {
                    let a = alpha[p];
                    if a.abs() <= ptol {
                        continue;
                    }
                    let j = self.head[p];
                    let g = -dir * a;
                    let v = self.x[j];
                    let (t, to_upper) = if g < 0.0 {
                        if phase == Phase::One && v < self.lb[j] - ftol {
                            continue;
                        } else if phase == Phase::One && v > self.ub[j] + ftol {
                            ((v - self.ub[j]) / -g, true)
                        } else if self.lb[j].is_finite() {
                            ((v - self.lb[j]) / -g, false)
                        } else {
                            continue;
                        }
                    } else if phase == Phase::One && v > self.ub[j] + ftol {
                        continue;
                    } else if phase == Phase::One && v < self.lb[j] - ftol {
                        ((self.lb[j] - v) / g, false)
                    } else if self.ub[j].is_finite() {
                        ((self.ub[j] - v) / g, true)
                    } else {
                        continue;
                    };
                    if t <= tmax {
                        let better = if bland {
                            leave == usize::MAX || self.head[p] < self.head[leave]
                        } else {
                            a.abs() > best_piv
                        };
                        if better {
                            best_piv = a.abs();
                            leave = p;
                            leave_to_upper = to_upper;
                            step = t.max(0.0);
                        }
                    }
                }
            }
            let flip = self.ub[q] - self.lb[q];
            if flip.is_finite() && (leave == usize::MAX || flip <= step) {
                // bound flip of the entering column
                for p in 0..m {
                    if alpha[p] != 0.0 {
                        let j = self.head[p];
                        self.x[j] -= dir * alpha[p] * flip;
                    }
                }
                if dir > 0.0 {
                    self.nb[q] = NbPos::Upper;
                    self.x[q] = self.ub[q];
                } else {
                    self.nb[q] = NbPos::Lower;
                    self.x[q] = self.lb[q];
                }
                self.iterations += 1;
                degenerate = 0;
                continue;
            }
            if leave == usize::MAX {
                if phase == Phase::Two {
                    return Ok(PrimalOutcome::Unbounded);
                }
                return Err(OptError::Numerical("phase one found no blocking variable".into()));
            }
            for p in 0..m {
                if alpha[p] != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= dir * alpha[p] * step;
                }
            }
            self.x[q] += dir * step;
            let out = self.head[leave];
            self.pivot(leave, q, &alpha);
            if leave_to_upper {
                self.nb[out] = NbPos::Upper;
                self.x[out] = self.ub[out];
            } else {
                self.nb[out] = NbPos::Lower;
                self.x[out] = self.lb[out];
            }
            if !self.x[out].is_finite() {
                self.nb[out] = NbPos::Free;
                self.x[out] = 0.0;
            }
            if step <= 1e-12 {
                degenerate += 1;
                if degenerate >= self.tol.bland_after {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    /// Dual simplex from a dual feasible basis.
    fn dual(&mut self, start_iter: usize) -> OptResult<DualOutcome> {
        let (n, m) = (self.n, self.m);
        let total = n + m;
        let ftol = self.ftol();
        let dtol = self.tol.opt_tol;
        let ptol = self.tol.pivot_tol.max(1e-9);
        let cap = self.iteration_cap().min(20 * (n + m) + 5_000);
        let mut degenerate = 0usize;
        loop {
            if self.iterations - start_iter > cap || degenerate > 5 * self.tol.bland_after {
                return Ok(DualOutcome::GaveUp);
            }
            self.maybe_refactor()?;
            // leaving row: largest bound violation
            let mut r = usize::MAX;
            let mut worst = ftol;
            for p in 0..m {
                let inf = self.infeasibility(self.head[p]);
                if inf > worst {
                    worst = inf;
                    r = p;
                }
            }
            if r == usize::MAX {
                return Ok(DualOutcome::Optimal);
            }
            let jr = self.head[r];
            let below = self.x[jr] < self.lb[jr];
            let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
            let y = self.btran_costs(&cb);
            let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();

            let mut cand: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..total {
                if self.pos[j] != NONBASIC || self.lb[j] == self.ub[j] {
                    continue;
                }
                let a = self.col_dot(j, &rho);
                if a.abs() <= ptol {
                    continue;
                }
                let ok = match (self.nb[j], below) {
                    (NbPos::Lower, true) => a < 0.0,
                    (NbPos::Upper, true) => a > 0.0,
                    (NbPos::Lower, false) => a > 0.0,
                    (NbPos::Upper, false) => a < 0.0,
                    (NbPos::Free, _) => true,
                };
                if ok {
                    let d = self.reduced_cost(j, &self.cost, &y);
                    cand.push((j, a, d));
                }
            }
            if cand.is_empty() {
                return Ok(DualOutcome::Infeasible(r));
            }
            let tmax = cand.iter().map(|&(_, a, d)| (d.abs() + dtol) / a.abs()).fold(f64::INFINITY, f64::min);
            let mut q = usize::MAX;
            let mut best = 0.0;
            let mut ratio = 0.0;
            for &(j, a, d) in &cand {
                let t = d.abs() / a.abs();
                if t <= tmax && a.abs() > best {
                    best = a.abs();
                    q = j;
                    ratio = t;
                }
            }
            let alpha = self.ftran(q);
            if alpha[r].abs() <= ptol * 0.1 {
                self.refactor()?;
                continue;
            }
            let target = if below { self.lb[jr] } else { self.ub[jr] };
            let dq = (self.x[jr] - target) / alpha[r];
            for p in 0..m {
                if alpha[p] != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= alpha[p] * dq;
                }
            }
            self.x[q] += dq;
            self.pivot(r, q, &alpha);
            self.nb[jr] = if below { NbPos::Lower } else { NbPos::Upper };
            self.x[jr] = target;
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
        }
    }

    pub(crate) fn run(&mut self) -> OptResult<EngineStatus> {
        let start = self.iterations;
        self.farkas = None;
        if self.binv_valid && self.since_refactor < 100 {
            self.recompute_xb();
        } else {
            self.refactor()?;
        }
        for _attempt in 0..3 {
            if self.primal_infeasible() && self.dual_feasible() {
                match self.dual(start)? {
                    DualOutcome::Optimal => {}
                    DualOutcome::Infeasible(r) => {
                        // certificate from the blocking row of B^-1
                        let m = self.m;
                        self.farkas = Some(self.binv[r * m..(r + 1) * m].to_vec());
                        self.refactor()?;
                        if self.primal_infeasible() {
                            // confirm with phase one for a clean certificate
                            match self.primal(Phase::One, start)? {
                                PrimalOutcome::Infeasible => return Ok(EngineStatus::Infeasible),
                                _ => {}
                            }
                        }
                    }
                    DualOutcome::GaveUp => {}
                }
            }
            if self.primal_infeasible() {
                match self.primal(Phase::One, start)? {
                    PrimalOutcome::Infeasible => {
                        self.refactor()?;
                        if self.primal_infeasible() {
                            return Ok(EngineStatus::Infeasible);
                        }
                    }
                    _ => {}
                }
            }
            if self.primal_infeasible() {
                continue;
            }
            match self.primal(Phase::Two, start)? {
                PrimalOutcome::Unbounded => return Ok(EngineStatus::Unbounded),
                PrimalOutcome::Infeasible => unreachable!(),
                PrimalOutcome::Optimal => {}
            }
            self.refactor()?;
            if !self.primal_infeasible() && self.dual_feasible() {
                return Ok(EngineStatus::Optimal);
            }
        }
        Err(OptError::Numerical("simplex did not reach a verified optimum".into()))
    }

    /// Maps the internal state back to the caller's problem.
    pub(crate) fn extract(&self, p: &LpProblem, status: EngineStatus) -> LpSolution {
        let (n, m) = (self.n, self.m);
        let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
        match status {
            EngineStatus::Infeasible => {
                let mut sol = LpSolution::empty(LpStatus::Infeasible, n, m);
                sol.iterations = self.iterations;
                sol.farkas = self.farkas.as_ref().map(|u| normalize_farkas(p, u, &self.row_scale));
                return sol;
            }
            EngineStatus::Unbounded => {
                let mut sol = LpSolution::empty(LpStatus::Unbounded, n, m);
                sol.iterations = self.iterations;
                return sol;
            }
            EngineStatus::Optimal => {}
        }
        let mut x = vec![0.0; n];
        for j in 0..n {
            let mut v = self.x[j] * self.col_scale[j];
            // snap onto bounds within tolerance
            if v < p.lower[j] {
                v = p.lower[j];
            }
            if v > p.upper[j] {
                v = p.upper[j];
            }
            x[j] = v;
        }
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        let y = self.btran_costs(&cb);
        let mut row_duals = vec![0.0; m];
        for i in 0..m {
            if self.pos[n + i] == NONBASIC {
                row_duals[i] = sign * y[i] * self.row_scale[i] / self.obj_scale;
            }
        }
        let mut reduced = vec![0.0; n];
        for j in 0..n {
            if self.pos[j] == NONBASIC {
                let d = self.reduced_cost(j, &self.cost, &y);
                reduced[j] = sign * d / self.col_scale[j] / self.obj_scale;
            }
        }
        let row_activity: Vec<f64> = p.rows.iter().map(|r| r.activity(&x)).collect();
        let objective = p.objective_value(&x);
        LpSolution {
            status: LpStatus::Optimal,
            x,
            row_activity,
            row_duals,
            reduced_costs: reduced,
            objective,
            iterations: self.iterations,
            farkas: None,
            basis: Some(self.basis()),
        }
    }
}

/// Converts scaled row multipliers into the documented certificate
/// orientation.
fn normalize_farkas(p: &LpProblem, u_scaled: &[f64], row_scale: &[f64]) -> Vec<f64> {
    let u: Vec<f64> = u_scaled.iter().zip(row_scale).map(|(a, r)| a * r).collect();
    let umax = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // drop round-off multipliers that lean on an infinite row bound
    let clean = |u: Vec<f64>| -> Vec<f64> {
        u.into_iter()
            .zip(&p.rows)
            .map(|(v, row)| {
                let open = if v > 0.0 { !row.lower.is_finite() } else { !row.upper.is_finite() };
                if v != 0.0 && open && v.abs() <= 1e-9 * umax {
                    0.0
                } else {
                    v
                }
            })
            .collect()
    };
    let neg = clean(u.iter().map(|v| -v).collect());
    let u = clean(u);
    let gap = farkas_gap(p, &u);
    if farkas_gap(p, &neg) > gap {
        neg
    } else {
        u
    }
}

/// `min_w u.w - max_x u.(A x)` over the row ranges and the column box.
/// Positive for a valid certificate.
pub(crate) fn farkas_gap(p: &LpProblem, u: &[f64]) -> f64 {
    let n = p.num_vars();
    let mut g = vec![0.0; n];
    let mut wmin = 0.0;
    for (row, &ui) in p.rows.iter().zip(u) {
        if ui == 0.0 {
            continue;
        }
        for &(j, a) in &row.coeffs {
            g[j] += ui * a;
        }
        wmin += if ui > 0.0 { ui * row.lower } else { ui * row.upper };
    }
    let unorm = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut xmax = 0.0;
    for j in 0..n {
        let gj = g[j];
        if gj.abs() <= 1e-9 * unorm.max(1.0) {
            continue;
        }
        xmax += if gj > 0.0 { gj * p.upper[j] } else { gj * p.lower[j] };
    }
    if wmin.is_nan() || xmax.is_nan() {
        return f64::NEG_INFINITY;
    }
    wmin - xmax
}
