//! DC network sensitivities.
//!
//! Lines and generators are addressed by their 0-based position in the
//! case; buses by position in `NetworkCase::buses` unless a function says
//! it takes a bus id.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;

use crate::case_io::{validate_case, NetworkCase};
use crate::error::{Error, Result};

/// Line flow per MW injected at a bus and withdrawn at the reference bus.
#[derive(Debug, Clone)]
pub struct PtdfMatrix {
    /// `n_br x n_b`.
    pub entries: DMatrix<f64>,
    /// Bus id.
    pub reference_bus: usize,
}

/// Bus injection change (MW) per unit of state perturbation.
#[derive(Debug, Clone)]
pub struct InjectionMatrix {
    /// `n_b x n_b`, the bus susceptance matrix times the MVA base.
    pub entries: DMatrix<f64>,
}

/// Builds PTDF and H with `reference` (a bus id) grounded.
pub fn build_matrices(case: &NetworkCase, reference: usize) -> Result<(PtdfMatrix, InjectionMatrix)> {
    let pos = case.bus_positions();
    let nb = case.n_bus();
    let r = *pos
        .get(&reference)
        .ok_or_else(|| Error::Semantic(format!("reference bus {reference} does not exist")))?;
    let mut bbus = DMatrix::<f64>::zeros(nb, nb);
    for br in &case.branches {
        let (f, t) = (pos[&br.from], pos[&br.to]);
        let b = 1.0 / br.reactance;
        bbus[(f, f)] += b;
        bbus[(t, t)] += b;
        bbus[(f, t)] -= b;
        bbus[(t, f)] -= b;
    }
    let keep: Vec<usize> = (0..nb).filter(|&i| i != r).collect();
    let red = bbus.select_rows(&keep).select_columns(&keep);
    let x = red
        .cholesky()
        .ok_or_else(|| Error::Singular("reduced susceptance matrix is not positive definite".into()))?
        .inverse();
    // X padded with a zero row and column at the reference bus
    let mut xfull = DMatrix::<f64>::zeros(nb, nb);
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            xfull[(i, j)] = x[(a, b)];
        }
    }
    let mut ptdf = DMatrix::<f64>::zeros(case.n_branch(), nb);
    for (k, br) in case.branches.iter().enumerate() {
        let (f, t) = (pos[&br.from], pos[&br.to]);
        let b = 1.0 / br.reactance;
        for j in 0..nb {
            ptdf[(k, j)] = b * (xfull[(f, j)] - xfull[(t, j)]);
        }
    }
    Ok((PtdfMatrix { entries: ptdf, reference_bus: reference }, InjectionMatrix { entries: bbus * case.base_mva }))
}

/// A validated case together with the sensitivities every model needs.
#[derive(Debug, Clone)]
pub struct Grid {
    pub case: NetworkCase,
    pub ptdf: PtdfMatrix,
    pub h: InjectionMatrix,
    pos: HashMap<usize, usize>,
    /// Bus position of each generator.
    pub gen_bus: Vec<usize>,
    /// Load per bus position, MW.
    pub load: Vec<f64>,
    /// `PTDF * G_B`, `n_br x n_g`.
    pub gen_ptdf: DMatrix<f64>,
    /// `PTDF * P_D`.
    pub load_flow: Vec<f64>,
}

impl Grid {
    pub fn new(case: NetworkCase) -> Result<Self> {
        let r = case.reference_bus;
        Self::with_reference(case, r)
    }

    pub fn with_reference(case: NetworkCase, reference: usize) -> Result<Self> {
        let issues = validate_case(&case);
        if !issues.is_empty() {
            return Err(Error::Semantic(issues.join("; ")));
        }
        let (ptdf, h) = build_matrices(&case, reference)?;
        let pos = case.bus_positions();
        let gen_bus: Vec<usize> = case.generators.iter().map(|g| pos[&g.bus]).collect();
        let load: Vec<f64> = case.buses.iter().map(|b| b.load).collect();
        let mut gen_ptdf = DMatrix::<f64>::zeros(case.n_branch(), case.n_gen());
        for (g, &b) in gen_bus.iter().enumerate() {
            gen_ptdf.set_column(g, &ptdf.entries.column(b));
        }
        let load_flow: Vec<f64> = (0..case.n_branch())
            .map(|k| (0..case.n_bus()).map(|i| ptdf.entries[(k, i)] * load[i]).sum())
            .collect();
        Ok(Self { case, ptdf, h, pos, gen_bus, load, gen_ptdf, load_flow })
    }

    pub fn n_bus(&self) -> usize {
        self.case.n_bus()
    }

    pub fn n_branch(&self) -> usize {
        self.case.n_branch()
    }

    pub fn n_gen(&self) -> usize {
        self.case.n_gen()
    }

    pub fn bus_position(&self, id: usize) -> Option<usize> {
        self.pos.get(&id).copied()
    }

    pub fn reference_position(&self) -> usize {
        self.pos[&self.ptdf.reference_bus]
    }

    pub fn rating(&self, k: usize) -> f64 {
        self.case.branches[k].rating
    }

    /// Sum of all finite ratings.
    pub fn total_rating(&self) -> f64 {
        self.case.branches.iter().filter(|b| b.is_rated()).map(|b| b.rating).sum()
    }

    /// Buses that may carry a nonzero attack component: load buses other
    /// than the reference.
    pub fn attackable_buses(&self) -> Vec<usize> {
        let r = self.reference_position();
        (0..self.n_bus()).filter(|&i| i != r && self.load[i] > 0.0).collect()
    }

    /// `H c`.
    pub fn injection(&self, c: &[f64]) -> Vec<f64> {
        (&self.h.entries * nalgebra::DVector::from_column_slice(c)).as_slice().to_vec()
    }

    /// Nonzeros of row `k` of `PTDF * H`. Because `H` is the susceptance
    /// matrix, the product collapses to the branch susceptance across the
    /// line's two ends.
    pub fn attack_row(&self, k: usize) -> [(usize, f64); 2] {
        let br = &self.case.branches[k];
        let w = self.case.base_mva / br.reactance;
        [(self.pos[&br.from], w), (self.pos[&br.to], -w)]
    }

    /// `PTDF * H * c`.
    pub fn attack_flows(&self, c: &[f64]) -> Vec<f64> {
        (0..self.n_branch())
            .map(|k| self.attack_row(k).iter().map(|&(i, w)| w * c[i]).sum())
            .collect()
    }

    fn check_dispatch(&self, dispatch: &[f64]) -> Result<()> {
        if dispatch.len() != self.n_gen() {
            return Err(Error::Instance(format!("dispatch has {} entries for {} generators", dispatch.len(), self.n_gen())));
        }
        let total_load = self.case.total_load();
        let mismatch = dispatch.iter().sum::<f64>() - total_load;
        if mismatch.abs() > 1e-6 * total_load.max(1.0) {
            return Err(Error::Imbalance(mismatch));
        }
        Ok(())
    }

    /// `PTDF (G_B P_G - P_D)`.
    pub fn physical_flows(&self, dispatch: &[f64]) -> Result<Vec<f64>> {
        self.check_dispatch(dispatch)?;
        Ok(self.flows_unchecked(dispatch))
    }

    pub(crate) fn flows_unchecked(&self, dispatch: &[f64]) -> Vec<f64> {
        (0..self.n_branch())
            .map(|k| {
                let g: f64 = (0..self.n_gen()).map(|j| self.gen_ptdf[(k, j)] * dispatch[j]).sum();
                g - self.load_flow[k]
            })
            .collect()
    }

    /// `PTDF (G_B P_G - P_D + H c)`.
    pub fn cyber_flows(&self, dispatch: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        self.check_dispatch(dispatch)?;
        if c.len() != self.n_bus() {
            return Err(Error::Instance(format!("attack vector has {} entries for {} buses", c.len(), self.n_bus())));
        }
        let base = self.flows_unchecked(dispatch);
        let extra = self.attack_flows(c);
        Ok(base.iter().zip(extra).map(|(a, b)| a + b).collect())
    }

    /// Writes PTDF (`rows = lines`) or H (`rows = buses`) with bus ids as
    /// the header.
    pub fn write_matrix_csv<W: Write>(&self, which: MatrixKind, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![match which {
            MatrixKind::Ptdf => "line".to_string(),
            MatrixKind::Injection => "bus".to_string(),
        }];
        header.extend(self.case.buses.iter().map(|b| b.id.to_string()));
        w.write_record(&header)?;
        let (m, labels): (&DMatrix<f64>, Vec<String>) = match which {
            MatrixKind::Ptdf => (
                &self.ptdf.entries,
                self.case.branches.iter().enumerate().map(|(k, b)| format!("{}:{}-{}", k + 1, b.from, b.to)).collect(),
            ),
            MatrixKind::Injection => (&self.h.entries, self.case.buses.iter().map(|b| b.id.to_string()).collect()),
        };
        for (r, label) in labels.into_iter().enumerate() {
            let mut rec = vec![label];
            rec.extend((0..m.ncols()).map(|j| format!("{:?}", m[(r, j)])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Ptdf,
    Injection,
}

/// Lines with `|flow| >= threshold * rating`; unrated lines never qualify.
pub fn find_critical_lines(flows: &[f64], case: &NetworkCase, threshold: f64) -> Vec<usize> {
    case.branches
        .iter()
        .zip(flows)
        .enumerate()
        .filter(|(_, (br, f))| br.is_rated() && f.abs() >= threshold * br.rating)
        .map(|(k, _)| k)
        .collect()
}

/// Generators strictly inside both limits by more than `tol` MW.
pub fn find_marginal_generators(dispatch: &[f64], case: &NetworkCase, tol: f64) -> Vec<usize> {
    case.generators
        .iter()
        .zip(dispatch)
        .enumerate()
        .filter(|(_, (g, &p))| p > g.pmin + tol && p < g.pmax - tol)
        .map(|(k, _)| k)
        .collect()
}
