//! The five experiment drivers. Each writes its CSV files into the output
//! directory and returns the metrics for the run report.

use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use mpspline::advection::{exact_solution, AdvectionField, Advector, BslConfig, OutOfDomain, TwoBump};
use mpspline::domain1d::Boundary;
use mpspline::domain2d::{Domain2D, LocalSplines, PatchField};
use mpspline::interface::{explicit_uniform, three_point};
use mpspline::line::PlanMode;
use mpspline::mapping::Mapping;
use mpspline::reconstruct::Reconstructor;
use mpspline::spline::BreakPoints;
use mpspline::stability::{build_c0_blocks, build_c1_operator, PatchOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{mode_name, Coupling, ExperimentConfig, FieldSpec, FunctionKind};
use crate::output::{matrix, num, Csv};
use crate::report::RunReport;
use crate::RunError;

/// Physical test function and its r-derivative in logical coordinates.
struct TestFunction {
    kind: FunctionKind,
    mapping: Mapping,
    bump: TwoBump,
}

impl TestFunction {
    fn new(cfg: &ExperimentConfig) -> Self {
        TestFunction { kind: cfg.function, mapping: cfg.mapping, bump: TwoBump::standard(&cfg.mapping) }
    }

    fn physical(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            FunctionKind::Trig => (TAU * x).cos() * (TAU * y).sin(),
            FunctionKind::TwoBump => self.bump.eval(x, y),
        }
    }

    fn logical(&self, r: f64, th: f64) -> f64 {
        let (x, y) = self.mapping.forward(r, th);
        self.physical(x, y)
    }

    /// ∂f/∂r through the Jacobian of the map.
    fn logical_dr(&self, r: f64, th: f64) -> Result<f64, RunError> {
        let FunctionKind::Trig = self.kind else {
            return Err(RunError::Numerical(mpspline::Error::Invalid(
                "hermite r boundary needs the trig function, whose gradient is known".into(),
            )));
        };
        let (x, y) = self.mapping.forward(r, th);
        let fx = -TAU * (TAU * x).sin() * (TAU * y).sin();
        let fy = TAU * (TAU * x).cos() * (TAU * y).cos();
        let j = self.mapping.jacobian(r, th);
        Ok(fx * j[0][0] + fy * j[1][0])
    }

    /// Samples the function, with boundary slopes when the r ends need them.
    fn sample(&self, domain: &Domain2D) -> Result<PatchField, RunError> {
        let mut field = domain.sample(|r, th| self.logical(r, th));
        if domain.r_boundary() == Boundary::HermiteKnown {
            self.logical_dr(0.5, 0.0)?;
            domain.set_r_boundary_slopes(&mut field, |r, th| self.logical_dr(r, th).unwrap_or(f64::NAN));
        }
        Ok(field)
    }
}

fn reconstructed(cfg: &ExperimentConfig, domain: &Domain2D, field: &PatchField, mode: PlanMode) -> Result<PatchField, RunError> {
    let mut f = field.clone();
    Reconstructor::new(domain.clone(), cfg.options(mode))?.reconstruct(&mut f)?;
    Ok(f)
}

fn layout(cfg: &ExperimentConfig, refine: f64) -> Result<Domain2D, RunError> {
    Ok(cfg.layout.as_ref().expect("validated layout").build(refine)?)
}

/// Points where local and global splines are compared: six per r cell, on
/// every other θ node.
fn comparison_points(domain: &Domain2D) -> (Vec<f64>, Vec<f64>) {
    let mut rs = Vec::new();
    for band in domain.bands() {
        let p = band.r.points();
        for w in p.windows(2) {
            rs.extend((0..6).map(|k| w[0] + (w[1] - w[0]) * k as f64 / 6.0));
        }
    }
    rs.push(domain.r_range().1);
    let ths = domain.band_theta(0).nodes.iter().step_by(2).copied().collect();
    (rs, ths)
}

pub fn interpolation(cfg: &ExperimentConfig, dir: &Path, report: &mut RunReport) -> Result<(), RunError> {
    let domain = layout(cfg, 1.0)?;
    if !domain.is_conforming() {
        return Err(RunError::Numerical(mpspline::Error::Layout(
            "the interpolation test compares with the equivalent global spline and needs a conforming layout".into(),
        )));
    }
    let func = TestFunction::new(cfg);
    let field = func.sample(&domain)?;
    let global = domain.equivalent_global_spline(&field)?;
    let (rs, ths) = comparison_points(&domain);
    let mut csv = Csv::create(&dir.join("interpolation.csv"), &["mode", "err_funct", "err_deriv"])?;
    report.summary.push(format!("{:>14}  {:>10}  {:>10}", "mode", "err_funct", "err_deriv"));
    for &mode in &cfg.modes {
        let t0 = Instant::now();
        let rec = reconstructed(cfg, &domain, &field, mode)?;
        let local = LocalSplines::new(&domain, &rec)?;
        let mut err_funct = 0.0f64;
        for &r in &rs {
            for &th in &ths {
                err_funct = err_funct.max((local.eval(r, th)? - global.eval(r, th)?).abs());
            }
        }
        let mut err_deriv = 0.0f64;
        for b in 0..domain.n_bands() - 1 {
            let r_int = domain.bands()[b].r.last();
            for (band, side) in [(b, 1), (b + 1, 0)] {
                for j in 0..domain.bands()[band].theta.len() {
                    let th_pts = domain.interpolator(band, j).th.points();
                    for (k, &th) in th_pts.iter().enumerate() {
                        let d = rec.edges[band][j].dr[side][k];
                        err_deriv = err_deriv.max((d - global.eval_dr(r_int, th)?).abs());
                    }
                }
            }
        }
        let name = mode_name(mode);
        csv.row([name.clone(), num(err_funct), num(err_deriv)])?;
        report.metric(format!("err_funct[{name}]"), err_funct)?;
        report.metric(format!("err_deriv[{name}]"), err_deriv)?;
        report.timing(format!("mode {name}"), t0.elapsed());
        report.summary.push(format!("{name:>14}  {err_funct:>10.3e}  {err_deriv:>10.3e}"));
    }
    csv.finish()?;
    Ok(())
}

fn max_abs_diff(a: &PatchField, b: &PatchField) -> f64 {
    let mut m = 0.0f64;
    for (ra, rb) in a.values.iter().zip(&b.values) {
        for (pa, pb) in ra.iter().zip(rb) {
            for (x, y) in pa.iter().zip(pb.iter()) {
                m = m.max((x - y).abs());
            }
        }
    }
    m
}

/// The single-patch layout on the merged grid of a conforming layout.
fn merged_layout(domain: &Domain2D) -> Result<Domain2D, RunError> {
    let mut rb = vec![domain.r_range().0];
    for b in domain.bands() {
        rb.extend_from_slice(&b.r.points()[1..]);
    }
    let th = BreakPoints::new(domain.band_theta(0).nodes.clone())?;
    Ok(Domain2D::tensor(vec![BreakPoints::new(rb)?], vec![th], domain.r_boundary(), domain.th_boundary())?)
}

/// Largest difference between `field` on `domain` and the spline built from
/// `other` on `other_domain`, taken at the value points of `domain`.
fn nodewise_diff(domain: &Domain2D, field: &PatchField, other_domain: &Domain2D, other: &PatchField) -> Result<f64, RunError> {
    let mut rec = other.clone();
    Reconstructor::new(other_domain.clone(), Default::default())?.reconstruct(&mut rec)?;
    let spl = LocalSplines::new(other_domain, &rec)?;
    let mut m = 0.0f64;
    for (b, row) in field.values.iter().enumerate() {
        for (j, vals) in row.iter().enumerate() {
            let it = domain.interpolator(b, j);
            let (rp, tp) = (it.r.points(), it.th.points());
            for ((i, k), v) in vals.indexed_iter() {
                m = m.max((v - spl.eval(rp[i], tp[k])?).abs());
            }
        }
    }
    Ok(m)
}

fn write_grid(dir: &Path, domain: &Domain2D) -> std::io::Result<()> {
    let mut csv = Csv::create(&dir.join("grid.csv"), &["band", "patch", "axis", "index", "coord"])?;
    for b in 0..domain.n_bands() {
        for j in 0..domain.bands()[b].theta.len() {
            let it = domain.interpolator(b, j);
            for (axis, pts) in [("r", it.r.points()), ("theta", it.th.points())] {
                for (i, p) in pts.iter().enumerate() {
                    csv.row([b.to_string(), j.to_string(), axis.to_string(), i.to_string(), num(*p)])?;
                }
            }
        }
    }
    csv.finish()
}

fn write_snapshot(dir: &Path, step: usize, field: &PatchField) -> std::io::Result<()> {
    for (b, row) in field.values.iter().enumerate() {
        for (j, vals) in row.iter().enumerate() {
            matrix(&dir.join(format!("step{step:05}_band{b}_patch{j}.csv")), vals)?;
        }
    }
    Ok(())
}

struct Run {
    name: String,
    advector: Advector,
    field: PatchField,
    err: Vec<f64>,
}

pub fn advection(cfg: &ExperimentConfig, dir: &Path, report: &mut RunReport) -> Result<(), RunError> {
    let spec = cfg.advection.as_ref().expect("validated advection section");
    let field_kind = match spec.field {
        FieldSpec::Rotation { omega } => AdvectionField::MeshRotation { omega },
        FieldSpec::ConstantLogical { vr, vth } => AdvectionField::ConstantLogical { vr, vth },
    };
    let func = TestFunction::new(cfg);
    let init = |x: f64, y: f64| func.physical(x, y);
    let mode = cfg.modes[0];
    let mut bsl = BslConfig::new(spec.dt, spec.t_final, spec.tracer, cfg.options(mode));
    if spec.clamp {
        bsl.out_of_domain = OutOfDomain::Clamp;
    }

    let t0 = Instant::now();
    let domain = layout(cfg, 1.0)?;
    let mut layouts = vec![("local".to_string(), domain.clone())];
    for t in &cfg.twins {
        layouts.push((t.name.clone(), t.layout.build(1.0)?));
    }
    let global_idx = if spec.global_twin && domain.is_conforming() {
        layouts.push(("global".to_string(), merged_layout(&domain)?));
        Some(layouts.len() - 1)
    } else {
        None
    };
    let mut runs = Vec::new();
    for (name, d) in layouts {
        let advector = Advector::new(d, cfg.mapping, field_kind, bsl)?;
        let field = advector.sample(init);
        runs.push(Run { name, advector, field, err: vec![0.0] });
    }
    report.timing("setup", t0.elapsed());

    let snap_dir = dir.join("snapshots");
    if !spec.snapshot_steps.is_empty() {
        std::fs::create_dir_all(&snap_dir)?;
        write_grid(&snap_dir, &domain)?;
    }
    let mut header = vec!["step".to_string(), "time".to_string()];
    header.extend(runs.iter().map(|r| format!("err_{}", r.name)));
    if global_idx.is_some() {
        header.push("diff_global".into());
    }
    let mut csv = Csv::create(&dir.join("advection.csv"), &header.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut diffs = Vec::new();

    let n_steps = bsl.n_steps();
    let t0 = Instant::now();
    for step in 0..=n_steps {
        if step > 0 {
            for run in runs.iter_mut() {
                run.advector.step(&mut run.field)?;
                let exact = exact_solution(run.advector.domain(), &cfg.mapping, &field_kind, init, run.field.time);
                run.err.push(max_abs_diff(&run.field, &exact));
            }
        }
        let mut row = vec![step.to_string(), num(runs[0].field.time)];
        row.extend(runs.iter().map(|r| num(r.err[step])));
        if let Some(g) = global_idx {
            let d = nodewise_diff(&domain, &runs[0].field, runs[g].advector.domain(), &runs[g].field)?;
            diffs.push(d);
            row.push(num(d));
        }
        csv.row(row)?;
        if spec.snapshot_steps.contains(&step) {
            write_snapshot(&snap_dir, step, &runs[0].field)?;
        }
    }
    csv.finish()?;
    report.timing("time loop", t0.elapsed());

    report.metric("steps", n_steps as f64)?;
    for run in &runs {
        report.metric(format!("final_err[{}]", run.name), *run.err.last().unwrap())?;
        report.metric(format!("max_err[{}]", run.name), run.err.iter().fold(0.0, |a: f64, b| a.max(*b)))?;
    }
    if let Some(d) = diffs.last() {
        report.metric("final_diff_global", *d)?;
        report.metric("max_diff_global", diffs.iter().fold(0.0, |a: f64, b| a.max(*b)))?;
        report.summary.push(format!("final |local - global| = {d:.3e}"));
    }
    for run in &runs[1..] {
        if n_steps == 0 {
            break;
        }
        let ratios: Vec<f64> = (1..=n_steps).map(|s| runs[0].err[s] / run.err[s]).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        report.metric(format!("ratio_min[{}]", run.name), lo)?;
        report.metric(format!("ratio_max[{}]", run.name), hi)?;
        report.summary.push(format!("error local/{}: min {lo:.4}, max {hi:.4}", run.name));
    }
    report.summary.push(format!("final error local = {:.3e}", runs[0].err.last().unwrap()));
    Ok(())
}

pub fn stability(cfg: &ExperimentConfig, dir: &Path, report: &mut RunReport) -> Result<(), RunError> {
    let spec = cfg.stability.as_ref().expect("validated stability section");
    let mut shifts = spec.shifts.clone();
    shifts.extend((1..spec.scan).map(|j| j as f64 / spec.scan as f64));
    let mut csv = Csv::create(&dir.join("stability.csv"), &["coupling", "shift", "k", "radius"])?;
    for &coupling in &spec.couplings {
        let label = if coupling == Coupling::C0 { "c0" } else { "c1" };
        let t0 = Instant::now();
        let mut best = (0.0f64, 0.0, 0usize);
        for (idx, &s) in shifts.iter().enumerate() {
            let op: PatchOperator = match coupling {
                Coupling::C0 => build_c0_blocks(spec.n_c, s)?.with_patches(spec.n_p),
                Coupling::C1 => build_c1_operator(spec.n_p, spec.n_c, s)?,
            };
            let mut at_shift = 0.0f64;
            for k in 0..spec.n_p {
                let r = mpspline::stability::spectral_radius(&op.symbol(k)?.matrix)?;
                csv.row([label.to_string(), num(s), k.to_string(), num(r)])?;
                at_shift = at_shift.max(r);
                if r > best.0 {
                    best = (r, s, k);
                }
            }
            if idx < spec.shifts.len() {
                report.metric(format!("radius[{label},{s:?}]"), at_shift)?;
                report.summary.push(format!("{label} shift {s}: radius {at_shift:.12} (excess {:.3e})", at_shift - 1.0));
            }
        }
        report.metric(format!("max_radius[{label}]"), best.0)?;
        report.metric(format!("argmax_shift[{label}]"), best.1)?;
        report.metric(format!("argmax_k[{label}]"), best.2 as f64)?;
        report.timing(format!("{label} scan"), t0.elapsed());
        let verdict = if best.0 > 1.0 + 1e-12 { "exceeds 1" } else { "1 up to round-off" };
        report.summary.push(format!(
            "{label}: max radius {:.12} at shift {}, k = {} ({verdict}, excess {:.3e})",
            best.0,
            best.1,
            best.2,
            best.0 - 1.0
        ));
    }
    csv.finish()?;
    Ok(())
}

/// One row of the coefficient-decay table on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientRow {
    pub n: usize,
    /// (2 − √3)^N
    pub geometric: f64,
    /// |a_{N,N}| / |a_{1,1}|
    pub ratio_a: f64,
    /// |b_{N,N}| / |b_{1,1}|
    pub ratio_b: f64,
    /// |ω_{N,N,N}| Δx / |a_{1,1}|
    pub ratio_w: f64,
}

pub fn coefficient_row(n: usize) -> Result<CoefficientRow, RunError> {
    let s = explicit_uniform(n, n, 1.0, 1.0)?;
    let tp = three_point(1.0, 1.0)?;
    Ok(CoefficientRow {
        n,
        geometric: (2.0 - 3f64.sqrt()).powi(n as i32),
        ratio_a: s.a.abs() / tp.alpha.abs(),
        ratio_b: s.b.abs() / tp.beta.abs(),
        ratio_w: s.weight(n as isize).abs() / tp.alpha.abs(),
    })
}

pub fn coefficients(cfg: &ExperimentConfig, dir: &Path, report: &mut RunReport) -> Result<(), RunError> {
    let mut csv = Csv::create(&dir.join("coefficients.csv"), &["n", "geometric", "ratio_a", "ratio_b", "ratio_w"])?;
    report.summary.push(format!("{:>4}  {:>9}  {:>9}  {:>9}  {:>9}", "N", "(2-√3)^N", "|a|/|a11|", "|b|/|b11|", "|w|dx/|a11|"));
    for &n in &cfg.coefficients {
        let row = coefficient_row(n)?;
        csv.row([n.to_string(), num(row.geometric), num(row.ratio_a), num(row.ratio_b), num(row.ratio_w)])?;
        report.metric(format!("geometric[{n}]"), row.geometric)?;
        report.metric(format!("ratio_a[{n}]"), row.ratio_a)?;
        report.metric(format!("ratio_b[{n}]"), row.ratio_b)?;
        report.metric(format!("ratio_w[{n}]"), row.ratio_w)?;
        report.summary.push(format!(
            "{n:>4}  {:>9.2e}  {:>9.2e}  {:>9.2e}  {:>9.2e}",
            row.geometric, row.ratio_a, row.ratio_b, row.ratio_w
        ));
    }
    csv.finish()?;
    Ok(())
}

/// Least-squares slope of log(err) against log(1/refinement), i.e. the order
/// in the cell width.
pub fn fitted_order(refinements: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = refinements.iter().zip(errors).map(|(f, e)| (-f.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// First refinement at which `err` exceeds `factor` times the reference error.
pub fn saturation_level(refinements: &[f64], err: &[f64], reference: &[f64], factor: f64) -> Option<f64> {
    refinements.iter().zip(err.iter().zip(reference)).find(|(_, (e, r))| **e > factor * **r).map(|(f, _)| *f)
}

/// Largest |∂r s − ∂r f| over the interface θ points, with `ds(b, j, side, k, r, θ)`
/// giving the spline derivative.
fn interface_deriv_error(
    domain: &Domain2D,
    func: &TestFunction,
    mut ds: impl FnMut(usize, usize, usize, usize, f64, f64) -> Result<f64, RunError>,
) -> Result<f64, RunError> {
    let mut e = 0.0f64;
    for b in 0..domain.n_bands() - 1 {
        let r_int = domain.bands()[b].r.last();
        for (band, side) in [(b, 1), (b + 1, 0)] {
            for j in 0..domain.bands()[band].theta.len() {
                for (k, &th) in domain.interpolator(band, j).th.points().iter().enumerate() {
                    e = e.max((ds(band, j, side, k, r_int, th)? - func.logical_dr(r_int, th)?).abs());
                }
            }
        }
    }
    Ok(e)
}

pub fn convergence(cfg: &ExperimentConfig, dir: &Path, report: &mut RunReport) -> Result<(), RunError> {
    let spec = cfg.convergence.as_ref().expect("validated convergence section");
    let func = TestFunction::new(cfg);
    let base = layout(cfg, 1.0)?;
    let ((r0, r1), (t0, t1)) = (base.r_range(), base.theta_range());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<(f64, f64)> = (0..spec.samples).map(|_| (rng.gen_range(r0..r1), rng.gen_range(t0..t1))).collect();
    let exact: Vec<f64> = points.iter().map(|&(r, th)| func.logical(r, th)).collect();

    // Per series: (name, function errors, interface derivative errors).
    let mut series: Vec<(String, Vec<f64>, Vec<f64>)> =
        cfg.modes.iter().map(|m| (mode_name(*m), Vec::new(), Vec::new())).collect();
    let mut global = ("global".to_string(), Vec::new(), Vec::new());
    for &f in &spec.refinements {
        let t = Instant::now();
        let domain = layout(cfg, f)?;
        let field = func.sample(&domain)?;
        if domain.is_conforming() {
            let g = domain.equivalent_global_spline(&field)?;
            let mut e = 0.0f64;
            for (&(r, th), &v) in points.iter().zip(&exact) {
                e = e.max((g.eval(r, th)? - v).abs());
            }
            global.1.push(e);
            global.2.push(interface_deriv_error(&domain, &func, |_, _, _, _, r, th| Ok(g.eval_dr(r, th)?))?);
        }
        for (m, &mode) in cfg.modes.iter().enumerate() {
            let rec = reconstructed(cfg, &domain, &field, mode)?;
            let local = LocalSplines::new(&domain, &rec)?;
            let mut e = 0.0f64;
            for (&(r, th), &v) in points.iter().zip(&exact) {
                e = e.max((local.eval(r, th)? - v).abs());
            }
            series[m].1.push(e);
            series[m].2.push(interface_deriv_error(&domain, &func, |b, j, side, k, _, _| Ok(rec.edges[b][j].dr[side][k]))?);
        }
        report.timing(format!("refinement {f}"), t.elapsed());
    }
    if global.1.len() == spec.refinements.len() {
        series.push(global);
    }

    let refs = &spec.refinements;
    let mut csv = Csv::create(
        &dir.join("convergence.csv"),
        &["refinement", "series", "err_funct", "order_funct", "err_deriv", "order_deriv"],
    )?;
    let order = |errs: &[f64], i: usize| {
        if i == 0 {
            String::new()
        } else {
            num((errs[i - 1] / errs[i]).ln() / (refs[i] / refs[i - 1]).ln())
        }
    };
    for (name, ef, ed) in &series {
        for (i, &f) in refs.iter().enumerate() {
            csv.row([num(f), name.clone(), num(ef[i]), order(ef, i), num(ed[i]), order(ed, i)])?;
        }
    }
    csv.finish()?;

    // Saturation is measured against the exact plan, or the global spline without one.
    let reference = series.iter().find(|s| s.0 == "exact").or(series.iter().find(|s| s.0 == "global")).cloned();
    let mut summary = Csv::create(
        &dir.join("convergence_summary.csv"),
        &["series", "order_funct", "order_deriv", "saturation_funct", "saturation_deriv"],
    )?;
    let show = |s: Option<f64>| s.map_or("none".to_string(), num);
    for (name, ef, ed) in &series {
        let (of, od) = (fitted_order(refs, ef), fitted_order(refs, ed));
        let (sf, sd) = match &reference {
            Some(rf) if *name != rf.0 && name != "global" && name != "exact" => (
                saturation_level(refs, ef, &rf.1, spec.saturation_factor),
                saturation_level(refs, ed, &rf.2, spec.saturation_factor),
            ),
            _ => (None, None),
        };
        summary.row([name.clone(), num(of), num(od), show(sf), show(sd)])?;
        report.metric(format!("order_funct[{name}]"), of)?;
        report.metric(format!("order_deriv[{name}]"), od)?;
        if let Some(s) = sf {
            report.metric(format!("saturation_funct[{name}]"), s)?;
        }
        if let Some(s) = sd {
            report.metric(format!("saturation_deriv[{name}]"), s)?;
        }
        let level = |s: Option<f64>| s.map_or("none".to_string(), |s| format!("x{s}"));
        report.summary.push(format!(
            "{name:>14}: order {of:.3} (values), {od:.3} (interface slopes); saturation {} (values), {} (interface slopes)",
            level(sf),
            level(sd)
        ));
    }
    summary.finish()?;
    Ok(())
}
