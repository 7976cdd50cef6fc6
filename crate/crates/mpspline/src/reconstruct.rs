//! Edge and corner derivative reconstruction on 2D layouts.
//!
//! Work is organised in r-runs: a run is a θ value point followed through the
//! consecutive bands that all have it. A run is one r-line; its cuts are the
//! band interfaces it crosses. A run that stops at a non-conforming interface
//! (its θ point exists only on the fine side) takes its end derivative from
//! the ∂r trace of the coarse side, which in turn needs the runs through every
//! coarse point. The dependencies are ordered once at construction. T-joint
//! interfaces with nested cuts go through the same coarse-trace route.

use std::collections::HashMap;

use crate::domain1d::Boundary;
use crate::domain2d::{theta_trace, Domain2D, PatchField};
use crate::error::{Error, Result};
use crate::line::{LineEnd, LinePlan, LineShape, PlanMode};
use crate::spline::SplineCoeffs1D;
use crate::spline2d::Side;

/// How cross-derivatives at patch corners on conforming interfaces are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossMethod {
    /// r-lines on the θ-derivative field for tensor layouts, θ-lines otherwise.
    Auto,
    /// r-lines on the θ-derivative field (tensor layouts only).
    RLines,
    /// θ-lines on the r-derivative field.
    ThetaLines,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructOptions {
    pub mode: PlanMode,
    pub cross: CrossMethod,
    /// Replace fine-only values on non-conforming interfaces by the coarse
    /// trace. This makes the two sides agree off the nodes too, at the price
    /// of coarse-grid accuracy on the interface row. Off by default.
    pub project_values: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions { mode: PlanMode::Exact, cross: CrossMethod::Auto, project_values: false }
    }
}

#[derive(Debug, Clone)]
struct Run {
    b0: usize,
    b1: usize,
    cols: Vec<usize>,
    plan: usize,
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Run(usize),
    Trace(usize),
}

/// A band interface where one side (the coarse one) provides θ traces to the
/// other: non-conforming value points, or a T-joint with nested cuts.
#[derive(Debug, Clone)]
struct NonConforming {
    coarse: usize,
    fine: usize,
    coarse_side: Side,
    fine_side: Side,
    fine_only: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Reconstructor {
    domain: Domain2D,
    options: ReconstructOptions,
    runs: Vec<Run>,
    run_plans: Vec<LinePlan>,
    schedule: Vec<Step>,
    nonconf: Vec<Option<NonConforming>>,
    theta_plans: HashMap<(usize, Vec<usize>), LinePlan>,
    union_splits: Vec<Vec<usize>>,
    r_cross: bool,
    full_run_plan: Option<usize>,
}

fn side_row(d: &Domain2D, b: usize, s: Side) -> usize {
    match s {
        Side::Lo => 0,
        Side::Hi => d.band_r(b).axis.points().len() - 1,
    }
}

impl Reconstructor {
    pub fn new(domain: Domain2D, options: ReconstructOptions) -> Result<Self> {
        let nb = domain.n_bands();
        let mut nonconf = Vec::with_capacity(nb.saturating_sub(1));
        for b in 0..nb.saturating_sub(1) {
            let lo = &domain.band_theta(b).columns;
            let hi = &domain.band_theta(b + 1).columns;
            let lo_in_hi = lo.iter().all(|c| domain.find_column(b + 1, c.theta).is_some());
            let hi_in_lo = hi.iter().all(|c| domain.find_column(b, c.theta).is_some());
            let split_thetas = |bb: usize| -> Vec<f64> {
                let bt = domain.band_theta(bb);
                bt.splits.iter().map(|&s| bt.nodes[s]).collect()
            };
            let (slo, shi) = (split_thetas(b), split_thetas(b + 1));
            let contains = |outer: &[f64], inner: &[f64]| {
                inner.iter().all(|t| outer.iter().any(|u| (t - u).abs() <= 1e-12 * t.abs().max(1.0)))
            };
            let (cuts_lo_in_hi, cuts_hi_in_lo) = (contains(&shi, &slo), contains(&slo, &shi));
            let (coarse, fine) = if lo_in_hi && hi_in_lo {
                // Same value points. A T-joint with nested cuts still gets a
                // trace from the side with fewer cuts, so that truncated plans
                // stay C¹ across the joint.
                match (cuts_lo_in_hi, cuts_hi_in_lo) {
                    (true, true) => {
                        nonconf.push(None);
                        continue;
                    }
                    (true, false) => (b, b + 1),
                    (false, true) => (b + 1, b),
                    (false, false) => {
                        if options.mode != PlanMode::Exact {
                            return Err(Error::Layout(format!(
                                "interface {b}: interleaved θ cuts on both sides need the exact plan"
                            )));
                        }
                        nonconf.push(None);
                        continue;
                    }
                }
            } else {
                if domain.th_boundary() != Boundary::Periodic {
                    return Err(Error::Layout("non-conforming interfaces need a periodic θ direction".into()));
                }
                let pair = if lo_in_hi {
                    (b, b + 1)
                } else if hi_in_lo {
                    (b + 1, b)
                } else {
                    return Err(Error::Layout(format!(
                        "interface {b}: neither side's θ points contain the other's"
                    )));
                };
                let coarse_cuts_in_fine = if pair.0 == b { cuts_lo_in_hi } else { cuts_hi_in_lo };
                if !coarse_cuts_in_fine && options.mode != PlanMode::Exact {
                    return Err(Error::Layout(format!(
                        "interface {b}: coarse-side θ cuts missing on the fine side need the exact plan"
                    )));
                }
                pair
            };
            let (coarse_side, fine_side) = if coarse == b { (Side::Hi, Side::Lo) } else { (Side::Lo, Side::Hi) };
            let fine_only = domain
                .band_theta(fine)
                .columns
                .iter()
                .enumerate()
                .filter(|(_, c)| domain.find_column(coarse, c.theta).is_none())
                .map(|(i, _)| i)
                .collect();
            nonconf.push(Some(NonConforming { coarse, fine, coarse_side, fine_side, fine_only }));
        }

        // r-runs
        let r_end = domain.r_end();
        let mut runs = Vec::new();
        let mut run_of: Vec<Vec<usize>> =
            (0..nb).map(|b| vec![usize::MAX; domain.band_theta(b).columns.len()]).collect();
        let mut plan_index: HashMap<(usize, usize, [LineEnd; 2]), usize> = HashMap::new();
        let mut run_plans = Vec::new();
        for b in 0..nb {
            for c in 0..domain.band_theta(b).columns.len() {
                if run_of[b][c] != usize::MAX {
                    continue;
                }
                let theta = domain.band_theta(b).columns[c].theta;
                let mut cols = vec![c];
                let mut bb = b;
                while bb + 1 < nb {
                    match domain.find_column(bb + 1, theta) {
                        Some(cn) => {
                            cols.push(cn);
                            bb += 1;
                        }
                        None => break,
                    }
                }
                let ends = [
                    if b == 0 { r_end } else { LineEnd::Hermite },
                    if bb + 1 == nb { r_end } else { LineEnd::Hermite },
                ];
                let key = (b, bb, ends);
                let plan = match plan_index.get(&key) {
                    Some(&p) => p,
                    None => {
                        let mut nodes = vec![domain.bands()[b].r.first()];
                        let mut splits = Vec::new();
                        for band in &domain.bands()[b..=bb] {
                            if nodes.len() > 1 {
                                splits.push(nodes.len() - 1);
                            }
                            nodes.extend_from_slice(&band.r.points()[1..]);
                        }
                        run_plans.push(LinePlan::new(&nodes, LineShape::Open(ends), &splits, options.mode)?);
                        plan_index.insert(key, run_plans.len() - 1);
                        run_plans.len() - 1
                    }
                };
                let id = runs.len();
                for (q, &cc) in cols.iter().enumerate() {
                    run_of[b + q][cc] = id;
                }
                runs.push(Run { b0: b, b1: bb, cols, plan });
            }
        }
        let full_run_plan = plan_index.get(&(0, nb - 1, [r_end; 2])).copied();

        // dependency order
        let mut done_run = vec![false; runs.len()];
        let mut done_trace: Vec<bool> = nonconf.iter().map(|n| n.is_none()).collect();
        let mut schedule = Vec::new();
        loop {
            let mut progress = false;
            for (id, run) in runs.iter().enumerate() {
                if done_run[id] {
                    continue;
                }
                // Truncated stencils that stop short of a Hermite end do not need it.
                let rows = run_plans[run.plan].rows();
                let needs = |e: usize| rows.iter().any(|r| r.known[e] != 0.0);
                let lo_ok = run.b0 == 0 || done_trace[run.b0 - 1] || !needs(0);
                let hi_ok = run.b1 + 1 == nb || done_trace[run.b1] || !needs(1);
                if lo_ok && hi_ok {
                    done_run[id] = true;
                    schedule.push(Step::Run(id));
                    progress = true;
                }
            }
            for (i, nc) in nonconf.iter().enumerate() {
                let Some(nc) = nc else { continue };
                if done_trace[i] {
                    continue;
                }
                if run_of[nc.coarse].iter().all(|&id| done_run[id]) {
                    done_trace[i] = true;
                    schedule.push(Step::Trace(i));
                    progress = true;
                }
            }
            if done_run.iter().all(|&d| d) && done_trace.iter().all(|&d| d) {
                break;
            }
            if !progress {
                let stuck: Vec<String> = done_trace
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| !**d)
                    .map(|(i, _)| format!("interface {i}"))
                    .collect();
                return Err(Error::NoEliminationOrder(stuck.join(", ")));
            }
        }

        let r_cross = match options.cross {
            CrossMethod::Auto => domain.is_tensor(),
            CrossMethod::RLines => {
                if !domain.is_tensor() {
                    return Err(Error::Layout("r-line cross-derivatives need a tensor layout".into()));
                }
                true
            }
            CrossMethod::ThetaLines => false,
        };

        // θ-line plans
        let mut theta_plans = HashMap::new();
        let th_shape = domain.theta_shape();
        let mut add_plan = |b: usize, splits: Vec<usize>| -> Result<()> {
            if splits.is_empty() || theta_plans.contains_key(&(b, splits.clone())) {
                return Ok(());
            }
            let p = LinePlan::new(&domain.band_theta(b).nodes, th_shape, &splits, options.mode)?;
            theta_plans.insert((b, splits), p);
            Ok(())
        };
        for b in 0..nb {
            add_plan(b, domain.band_theta(b).splits.clone())?;
        }
        let mut union_splits = Vec::with_capacity(nonconf.len());
        for (b, nc) in nonconf.iter().enumerate() {
            let mut u: Vec<usize> = Vec::new();
            if nc.is_none() {
                u.extend(&domain.band_theta(b).splits);
                u.extend(&domain.band_theta(b + 1).splits);
                u.sort_unstable();
                u.dedup();
                add_plan(b, u.clone())?;
            }
            union_splits.push(u);
        }

        Ok(Reconstructor {
            domain,
            options,
            runs,
            run_plans,
            schedule,
            nonconf,
            theta_plans,
            union_splits,
            r_cross,
            full_run_plan,
        })
    }

    pub fn domain(&self) -> &Domain2D {
        &self.domain
    }

    pub fn options(&self) -> ReconstructOptions {
        self.options
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    /// Derivatives along a θ-line of band `b` at the given splits, from
    /// column-indexed data.
    fn theta_line(&self, b: usize, splits: &[usize], col_vals: &[f64]) -> Result<Vec<f64>> {
        let bt = self.domain.band_theta(b);
        let plan = &self.theta_plans[&(b, splits.to_vec())];
        let vals: Vec<f64> = bt.node_col.iter().map(|&c| col_vals[c]).collect();
        let extras = [bt.extra_col[0].map_or(0.0, |c| col_vals[c]), bt.extra_col[1].map_or(0.0, |c| col_vals[c])];
        plan.solve(&vals, extras, [0.0; 2])
    }

    fn row_values(&self, field: &PatchField, b: usize, row: usize) -> Vec<f64> {
        self.domain
            .band_theta(b)
            .columns
            .iter()
            .map(|c| {
                let (j, k) = c.owners[0];
                field.values[b][j][[row, k]]
            })
            .collect()
    }

    fn edge_dr(&self, field: &PatchField, b: usize, s: Side) -> Vec<f64> {
        self.domain
            .band_theta(b)
            .columns
            .iter()
            .map(|c| {
                let (j, k) = c.owners[0];
                field.edges[b][j].dr[s.index()][k]
            })
            .collect()
    }

    fn write_cross(&self, field: &mut PatchField, b: usize, rs: Side, node: usize, v: f64) {
        let bt = self.domain.band_theta(b);
        if let Some(q) = bt.splits.iter().position(|&s| s == node) {
            let (jl, jr) = bt.split_patches[q];
            field.edges[b][jl].cross[rs.index()][Side::Hi.index()] = v;
            field.edges[b][jr].cross[rs.index()][Side::Lo.index()] = v;
        }
    }

    /// Per-patch θ traces of band `b` from column data and slopes at the θ cuts.
    fn traces(&self, b: usize, col_vals: &[f64], split_slopes: &[f64]) -> Result<Vec<SplineCoeffs1D>> {
        let bt = self.domain.band_theta(b);
        let np = self.domain.bands()[b].theta.len();
        let mut slopes = vec![[0.0; 2]; np];
        for (q, &(jl, jr)) in bt.split_patches.iter().enumerate() {
            slopes[jl][1] = split_slopes[q];
            slopes[jr][0] = split_slopes[q];
        }
        (0..np)
            .map(|j| {
                let axis = &self.domain.interpolator(b, j).th;
                let mut vals = vec![0.0; axis.points().len()];
                for (ci, c) in bt.columns.iter().enumerate() {
                    for &(jj, k) in &c.owners {
                        if jj == j {
                            vals[k] = col_vals[ci];
                        }
                    }
                }
                theta_trace(axis, &vals, slopes[j])
            })
            .collect()
    }

    fn eval_trace(&self, b: usize, traces: &[SplineCoeffs1D], theta: f64, deriv: bool) -> Result<f64> {
        let th = self.domain.wrap_theta(theta)?;
        let pats = &self.domain.bands()[b].theta;
        let j = (0..pats.len()).rev().find(|&j| th >= pats[j].first()).unwrap_or(0);
        if deriv {
            traces[j].eval_deriv(th)
        } else {
            traces[j].eval(th)
        }
    }

    /// Coarse value trace at a non-conforming interface.
    fn value_traces(&self, field: &PatchField, nc: &NonConforming) -> Result<Vec<SplineCoeffs1D>> {
        let row = side_row(&self.domain, nc.coarse, nc.coarse_side);
        let vals = self.row_values(field, nc.coarse, row);
        let splits = &self.domain.band_theta(nc.coarse).splits;
        let slopes = if splits.is_empty() { vec![] } else { self.theta_line(nc.coarse, splits, &vals)? };
        self.traces(nc.coarse, &vals, &slopes)
    }

    fn solve_run(&self, field: &mut PatchField, id: usize) -> Result<()> {
        let d = &self.domain;
        let run = &self.runs[id];
        let plan = &self.run_plans[run.plan];
        let mut vals = Vec::with_capacity(plan.n_values());
        let mut extras = [0.0; 2];
        let mut ends = [0.0; 2];
        for (q, b) in (run.b0..=run.b1).enumerate() {
            let (j, k) = d.band_theta(b).columns[run.cols[q]].owners[0];
            let br = d.band_r(b);
            let start = if q == 0 { 0 } else { 1 };
            for &row in &br.node_rows[start..] {
                vals.push(field.values[b][j][[row, k]]);
            }
            if b == run.b0 {
                if let Some(er) = br.extra_rows[0] {
                    extras[0] = field.values[b][j][[er, k]];
                }
                ends[0] = field.edges[b][j].dr[0][k];
            }
            if b == run.b1 {
                if let Some(er) = br.extra_rows[1] {
                    extras[1] = field.values[b][j][[er, k]];
                }
                ends[1] = field.edges[b][j].dr[1][k];
            }
        }
        let derivs = plan.solve(&vals, extras, ends)?;
        for (q, &dv) in derivs.iter().enumerate() {
            let (bl, bu) = (run.b0 + q, run.b0 + q + 1);
            for &(j, k) in &d.band_theta(bl).columns[run.cols[q]].owners {
                field.edges[bl][j].dr[1][k] = dv;
            }
            for &(j, k) in &d.band_theta(bu).columns[run.cols[q + 1]].owners {
                field.edges[bu][j].dr[0][k] = dv;
            }
        }
        Ok(())
    }

    fn solve_trace(&self, field: &mut PatchField, i: usize) -> Result<()> {
        let nc = self.nonconf[i].as_ref().expect("non-conforming interface");
        let d = &self.domain;
        let dr = self.edge_dr(field, nc.coarse, nc.coarse_side);
        let csplits = d.band_theta(nc.coarse).splits.clone();
        let crosses = if csplits.is_empty() { vec![] } else { self.theta_line(nc.coarse, &csplits, &dr)? };
        for (q, &node) in csplits.iter().enumerate() {
            self.write_cross(field, nc.coarse, nc.coarse_side, node, crosses[q]);
        }
        let traces = self.traces(nc.coarse, &dr, &crosses)?;
        let fb = d.band_theta(nc.fine);
        for &c in &nc.fine_only {
            let v = self.eval_trace(nc.coarse, &traces, fb.columns[c].theta, false)?;
            for &(j, k) in &fb.columns[c].owners {
                field.edges[nc.fine][j].dr[nc.fine_side.index()][k] = v;
            }
        }
        for &node in &fb.splits {
            let v = self.eval_trace(nc.coarse, &traces, fb.nodes[node], true)?;
            self.write_cross(field, nc.fine, nc.fine_side, node, v);
        }
        Ok(())
    }

    /// Fills every edge derivative and corner cross-derivative of `field`.
    pub fn reconstruct(&self, field: &mut PatchField) -> Result<()> {
        let d = &self.domain;
        let nb = d.n_bands();
        let mut vtraces: Vec<Option<Vec<SplineCoeffs1D>>> = vec![None; self.nonconf.len()];
        // Value traces: on T-joints they only fix the fine side's θ slopes at
        // the extra cuts; on non-conforming interfaces they also overwrite the
        // fine-only values, when asked to.
        for (i, nc) in self.nonconf.iter().enumerate() {
            let Some(nc) = nc else { continue };
            if !(self.options.project_values || nc.fine_only.is_empty()) {
                continue;
            }
            let tr = self.value_traces(field, nc)?;
            let row = side_row(d, nc.fine, nc.fine_side);
            let fb = d.band_theta(nc.fine);
            for &c in &nc.fine_only {
                let v = self.eval_trace(nc.coarse, &tr, fb.columns[c].theta, false)?;
                for &(j, k) in &fb.columns[c].owners {
                    field.values[nc.fine][j][[row, k]] = v;
                }
            }
            vtraces[i] = Some(tr);
        }

        for step in &self.schedule {
            match *step {
                Step::Run(id) => self.solve_run(field, id)?,
                Step::Trace(i) => self.solve_trace(field, i)?,
            }
        }

        // corners on the outer r boundaries with known slopes
        if d.r_boundary() == Boundary::HermiteKnown {
            for (b, s) in [(0, Side::Lo), (nb - 1, Side::Hi)] {
                let splits = d.band_theta(b).splits.clone();
                if splits.is_empty() {
                    continue;
                }
                let dr = self.edge_dr(field, b, s);
                let cr = self.theta_line(b, &splits, &dr)?;
                for (q, &node) in splits.iter().enumerate() {
                    self.write_cross(field, b, s, node, cr[q]);
                }
            }
        }

        if !self.r_cross {
            for (b, nc) in self.nonconf.iter().enumerate() {
                if nc.is_some() || self.union_splits[b].is_empty() {
                    continue;
                }
                let splits = &self.union_splits[b];
                let dr = self.edge_dr(field, b, Side::Hi);
                let cr = self.theta_line(b, splits, &dr)?;
                for (q, &node) in splits.iter().enumerate() {
                    self.write_cross(field, b, Side::Hi, node, cr[q]);
                    self.write_cross(field, b + 1, Side::Lo, node, cr[q]);
                }
            }
        }

        // θ-derivatives along every r value row at the θ cuts
        for b in 0..nb {
            let bt = d.band_theta(b);
            if bt.splits.is_empty() {
                continue;
            }
            let rows = d.band_r(b).axis.points().len();
            for row in 0..rows {
                let vals = self.row_values(field, b, row);
                let dth = self.theta_line(b, &bt.splits, &vals)?;
                for (q, &(jl, jr)) in bt.split_patches.iter().enumerate() {
                    field.edges[b][jl].dth[1][row] = dth[q];
                    field.edges[b][jr].dth[0][row] = dth[q];
                }
            }
        }

        for (i, nc) in self.nonconf.iter().enumerate() {
            let (Some(nc), Some(tr)) = (nc, &vtraces[i]) else { continue };
            let fb = d.band_theta(nc.fine);
            let row = side_row(d, nc.fine, nc.fine_side);
            for (q, &node) in fb.splits.iter().enumerate() {
                let v = self.eval_trace(nc.coarse, tr, fb.nodes[node], true)?;
                let (jl, jr) = fb.split_patches[q];
                field.edges[nc.fine][jl].dth[1][row] = v;
                field.edges[nc.fine][jr].dth[0][row] = v;
            }
        }

        if self.r_cross && nb > 1 {
            let plan = &self.run_plans[self.full_run_plan.expect("tensor layouts have a full run")];
            let bt0 = d.band_theta(0);
            for (q, &(jl, _)) in bt0.split_patches.iter().enumerate() {
                let mut vals = Vec::with_capacity(plan.n_values());
                let mut extras = [0.0; 2];
                for b in 0..nb {
                    let br = d.band_r(b);
                    let dth = &field.edges[b][jl].dth[1];
                    let start = if b == 0 { 0 } else { 1 };
                    for &row in &br.node_rows[start..] {
                        vals.push(dth[row]);
                    }
                    if b == 0 {
                        if let Some(er) = br.extra_rows[0] {
                            extras[0] = dth[er];
                        }
                    }
                    if b + 1 == nb {
                        if let Some(er) = br.extra_rows[1] {
                            extras[1] = dth[er];
                        }
                    }
                }
                let ends = [field.edges[0][jl].cross[0][1], field.edges[nb - 1][jl].cross[1][1]];
                let cr = plan.solve(&vals, extras, ends)?;
                let node = bt0.splits[q];
                for (s, &v) in cr.iter().enumerate() {
                    self.write_cross(field, s, Side::Hi, node, v);
                    self.write_cross(field, s + 1, Side::Lo, node, v);
                }
            }
        }
        Ok(())
    }
}

/// Reconstruction on a conforming layout (cross-derivatives by r-lines when the
/// layout is a tensor product).
pub fn conforming_2d_derivs(domain: &Domain2D, field: &mut PatchField, mode: PlanMode) -> Result<()> {
    if !domain.is_conforming() {
        return Err(Error::Layout("layout is not conforming".into()));
    }
    let opts = ReconstructOptions { mode, ..Default::default() };
    Reconstructor::new(domain.clone(), opts)?.reconstruct(field)
}

/// Reconstruction on layouts with T-joints: r first, then cross-derivatives by
/// θ-lines on the r-derivatives, then θ-derivatives.
pub fn tjoint_derivs(domain: &Domain2D, field: &mut PatchField, mode: PlanMode) -> Result<()> {
    if !domain.is_conforming() {
        return Err(Error::Layout("T-joint layouts must be conforming in θ points".into()));
    }
    let opts = ReconstructOptions { mode, cross: CrossMethod::ThetaLines, ..Default::default() };
    Reconstructor::new(domain.clone(), opts)?.reconstruct(field)
}

/// Reconstruction with coarse-to-fine traces on non-conforming interfaces.
pub fn nonconforming_derivs(domain: &Domain2D, field: &mut PatchField, mode: PlanMode) -> Result<()> {
    let opts = ReconstructOptions { mode, ..Default::default() };
    Reconstructor::new(domain.clone(), opts)?.reconstruct(field)
}
