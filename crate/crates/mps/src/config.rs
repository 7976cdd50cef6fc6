//! Experiment configuration: a line-oriented `key = value` format with
//! `[section]` headers. The README carries the full grammar.

use std::fmt::Write as _;

use mpspline::domain1d::Boundary;
use mpspline::domain2d::{Band, Domain2D};
use mpspline::line::PlanMode;
use mpspline::mapping::Mapping;
use mpspline::reconstruct::{CrossMethod, ReconstructOptions};
use mpspline::spline::BreakPoints;

use crate::expr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, message: message.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Interpolation,
    Advection,
    Stability,
    Coefficients,
    Convergence,
}

impl ExperimentKind {
    fn name(self) -> &'static str {
        match self {
            ExperimentKind::Interpolation => "interpolation",
            ExperimentKind::Advection => "advection",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Coefficients => "coefficients",
            ExperimentKind::Convergence => "convergence",
        }
    }
}

/// One uniform segment `start : end : cells`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub cells: usize,
}

impl Segment {
    pub fn breaks(&self, refine: f64) -> Result<BreakPoints, ConfigError> {
        let cells = scaled_cells(self.cells, refine)?;
        BreakPoints::uniform(self.start, self.end, cells)
            .map_err(|e| ConfigError { line: None, message: format!("segment {self:?}: {e}") })
    }
}

fn scaled_cells(cells: usize, refine: f64) -> Result<usize, ConfigError> {
    let s = cells as f64 * refine;
    if (s - s.round()).abs() > 1e-9 || s.round() < 1.0 {
        return err(None, format!("refinement {refine} does not give a whole number of cells from {cells}"));
    }
    Ok(s.round() as usize)
}

/// A ring of patches: one r segment and the θ segments that split it.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    pub r: Segment,
    pub theta: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutSpec {
    pub r_boundary: Boundary,
    pub theta_boundary: Boundary,
    pub bands: Vec<BandSpec>,
}

impl LayoutSpec {
    /// Builds the domain with every cell count multiplied by `refine`.
    pub fn build(&self, refine: f64) -> Result<Domain2D, ConfigError> {
        let bands = self
            .bands
            .iter()
            .map(|b| {
                Ok(Band { r: b.r.breaks(refine)?, theta: b.theta.iter().map(|t| t.breaks(refine)).collect::<Result<_, _>>()? })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        Domain2D::new(bands, self.r_boundary, self.theta_boundary)
            .map_err(|e| ConfigError { line: None, message: format!("invalid layout: {e}") })
    }

    /// Largest total cell count over the bands, `N_r · max N_θ`.
    pub fn global_cells(&self, refine: f64) -> f64 {
        let nr: usize = self.bands.iter().map(|b| b.r.cells).sum();
        let nt = self.bands.iter().map(|b| b.theta.iter().map(|t| t.cells).sum::<usize>()).max().unwrap_or(0);
        nr as f64 * nt as f64 * refine * refine
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinSpec {
    pub name: String,
    pub layout: LayoutSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    /// cos(2πx) sin(2πy) in physical coordinates.
    Trig,
    /// Two elliptic cos⁴ bumps centred at F(0.5, 0).
    TwoBump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    Rotation { omega: f64 },
    ConstantLogical { vr: f64, vth: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvectionSpec {
    pub field: FieldSpec,
    pub dt: f64,
    pub t_final: f64,
    pub tracer: mpspline::advection::Tracer,
    pub clamp: bool,
    pub snapshot_steps: Vec<usize>,
    /// Compare with the run on the merged grid when the layout is conforming.
    pub global_twin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    C0,
    C1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySpec {
    pub n_p: usize,
    pub n_c: usize,
    pub couplings: Vec<Coupling>,
    /// Shifts `j / scan` for `j = 1 .. scan − 1` (cell units); 0 disables the scan.
    pub scan: usize,
    pub shifts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSpec {
    pub refinements: Vec<f64>,
    pub samples: usize,
    pub saturation_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub mapping: Mapping,
    pub function: FunctionKind,
    pub layout: Option<LayoutSpec>,
    pub twins: Vec<TwinSpec>,
    pub modes: Vec<PlanMode>,
    pub cross: CrossMethod,
    pub project_values: bool,
    pub advection: Option<AdvectionSpec>,
    pub stability: Option<StabilitySpec>,
    pub coefficients: Vec<usize>,
    pub convergence: Option<ConvergenceSpec>,
}

/// Memory guard for the convergence driver, in global cells.
pub const MAX_GLOBAL_CELLS: f64 = 2048.0 * 2048.0;

impl ExperimentConfig {
    pub fn options(&self, mode: PlanMode) -> ReconstructOptions {
        ReconstructOptions { mode, cross: self.cross, project_values: self.project_values }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let exp = raw.unique("experiment")?.ok_or(ConfigError { line: None, message: "missing [experiment] section".into() })?;
        let kind = match exp.req("kind")?.1 {
            "interpolation" => ExperimentKind::Interpolation,
            "advection" => ExperimentKind::Advection,
            "stability" => ExperimentKind::Stability,
            "coefficients" => ExperimentKind::Coefficients,
            "convergence" => ExperimentKind::Convergence,
            other => return err(Some(exp.req("kind")?.0), format!("unknown experiment kind `{other}`")),
        };
        let name = exp.get("name").map_or("experiment", |v| v.1).to_string();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') {
            return err(exp.get("name").map(|v| v.0), "name may only hold letters, digits, `_`, `-` and `.`");
        }
        let seed = exp.get("seed").map(|v| parse_uint(v)).transpose()?.unwrap_or(0) as u64;
        exp.check_keys(&["kind", "name", "seed"])?;

        let mapping = match raw.unique("mapping")? {
            None => Mapping::czarny(0.3, 1.4),
            Some(s) => {
                s.check_keys(&["kind", "eps", "e"])?;
                match s.get("kind").map_or("czarny", |v| v.1) {
                    "czarny" => Mapping::czarny(
                        s.get("eps").map(parse_num).transpose()?.unwrap_or(0.3),
                        s.get("e").map(parse_num).transpose()?.unwrap_or(1.4),
                    ),
                    "circular" => Mapping::Circular,
                    "identity" => Mapping::Identity,
                    other => return err(s.get("kind").map(|v| v.0), format!("unknown mapping `{other}`")),
                }
            }
        };

        let function = match raw.unique("function")? {
            None => {
                if kind == ExperimentKind::Advection {
                    FunctionKind::TwoBump
                } else {
                    FunctionKind::Trig
                }
            }
            Some(s) => {
                s.check_keys(&["kind"])?;
                match s.req("kind")?.1 {
                    "trig" => FunctionKind::Trig,
                    "two_bump" => FunctionKind::TwoBump,
                    other => return err(Some(s.req("kind")?.0), format!("unknown function `{other}`")),
                }
            }
        };

        let layout = match raw.unique("layout")? {
            None => {
                if raw.all("band").next().is_some() {
                    return err(raw.all("band").next().map(|s| s.line), "[band] sections need a [layout] section");
                }
                None
            }
            Some(s) => {
                s.check_keys(&["r_boundary", "theta_boundary"])?;
                let r_boundary = match s.get("r_boundary").map_or("greville", |v| v.1) {
                    "greville" => Boundary::GrevilleExtra,
                    "hermite" => Boundary::HermiteKnown,
                    other => return err(s.get("r_boundary").map(|v| v.0), format!("unknown r boundary `{other}`")),
                };
                let theta_boundary = match s.get("theta_boundary").map_or("periodic", |v| v.1) {
                    "periodic" => Boundary::Periodic,
                    "greville" => Boundary::GrevilleExtra,
                    other => return err(s.get("theta_boundary").map(|v| v.0), format!("unknown θ boundary `{other}`")),
                };
                let bands = raw.all("band").map(parse_band).collect::<Result<Vec<_>, _>>()?;
                if bands.is_empty() {
                    return err(Some(s.line), "a layout needs at least one [band]");
                }
                Some(LayoutSpec { r_boundary, theta_boundary, bands })
            }
        };

        let mut twins = Vec::new();
        for s in raw.all("twin") {
            s.check_keys(&["name", "r", "theta"])?;
            let tname = s.req("name")?.1.to_string();
            if twins.iter().any(|t: &TwinSpec| t.name == tname) {
                return err(Some(s.line), format!("duplicate twin `{tname}`"));
            }
            let base = layout.as_ref().ok_or(ConfigError { line: Some(s.line), message: "a [twin] needs a [layout]".into() })?;
            let band = parse_band(s)?;
            twins.push(TwinSpec {
                name: tname,
                layout: LayoutSpec { r_boundary: base.r_boundary, theta_boundary: base.theta_boundary, bands: vec![band] },
            });
        }

        let (modes, cross, project_values) = match raw.unique("plan")? {
            None => (vec![PlanMode::Exact], CrossMethod::Auto, false),
            Some(s) => {
                s.check_keys(&["modes", "cross", "project_values"])?;
                let modes = match s.get("modes") {
                    None => vec![PlanMode::Exact],
                    Some(v) => split_list(v.1).map(|m| parse_mode(m).map_err(|e| ConfigError { line: Some(v.0), message: e })).collect::<Result<_, _>>()?,
                };
                let cross = match s.get("cross").map_or("auto", |v| v.1) {
                    "auto" => CrossMethod::Auto,
                    "r_lines" => CrossMethod::RLines,
                    "theta_lines" => CrossMethod::ThetaLines,
                    other => return err(s.get("cross").map(|v| v.0), format!("unknown cross method `{other}`")),
                };
                let pv = s.get("project_values").map(parse_bool).transpose()?.unwrap_or(false);
                (modes, cross, pv)
            }
        };
        if modes.is_empty() {
            return err(None, "at least one plan mode is needed");
        }

        let advection = match raw.unique("advection")? {
            None => None,
            Some(s) => {
                s.check_keys(&[
                    "field", "omega", "vr", "vth", "dt", "t_final", "tracer", "out_of_domain", "snapshot_steps", "global_twin",
                ])?;
                let field = match s.get("field").map_or("rotation", |v| v.1) {
                    "rotation" => FieldSpec::Rotation { omega: s.get("omega").map(parse_num).transpose()?.unwrap_or(2.0 * std::f64::consts::PI) },
                    "constant_logical" => FieldSpec::ConstantLogical {
                        vr: s.get("vr").map(parse_num).transpose()?.unwrap_or(0.0),
                        vth: s.get("vth").map(parse_num).transpose()?.unwrap_or(0.0),
                    },
                    other => return err(s.get("field").map(|v| v.0), format!("unknown field `{other}`")),
                };
                let dt = parse_num(s.req("dt")?)?;
                let t_final = parse_num(s.req("t_final")?)?;
                if !(dt > 0.0) || t_final < 0.0 {
                    return err(Some(s.line), "need dt > 0 and t_final ≥ 0");
                }
                let tracer = match s.get("tracer").map_or("rk3", |v| v.1) {
                    "rk3" => mpspline::advection::Tracer::Rk3,
                    "exact" => mpspline::advection::Tracer::ExactLogical,
                    other => return err(s.get("tracer").map(|v| v.0), format!("unknown tracer `{other}`")),
                };
                let clamp = match s.get("out_of_domain").map_or("error", |v| v.1) {
                    "error" => false,
                    "clamp" => true,
                    other => return err(s.get("out_of_domain").map(|v| v.0), format!("unknown out_of_domain `{other}`")),
                };
                let snapshot_steps = match s.get("snapshot_steps") {
                    None => vec![],
                    Some(v) => split_list(v.1).map(|x| parse_uint((v.0, x))).collect::<Result<_, _>>()?,
                };
                let global_twin = s.get("global_twin").map(parse_bool).transpose()?.unwrap_or(true);
                Some(AdvectionSpec { field, dt, t_final, tracer, clamp, snapshot_steps, global_twin })
            }
        };

        let stability = match raw.unique("stability")? {
            None => None,
            Some(s) => {
                s.check_keys(&["n_p", "n_c", "coupling", "scan", "shifts"])?;
                let couplings = match s.get("coupling") {
                    None => vec![Coupling::C0],
                    Some(v) => split_list(v.1)
                        .map(|c| match c {
                            "c0" => Ok(Coupling::C0),
                            "c1" => Ok(Coupling::C1),
                            other => err(Some(v.0), format!("unknown coupling `{other}`")),
                        })
                        .collect::<Result<_, _>>()?,
                };
                let shifts = match s.get("shifts") {
                    None => vec![],
                    Some(v) => split_list(v.1).map(|x| parse_num((v.0, x))).collect::<Result<_, _>>()?,
                };
                Some(StabilitySpec {
                    n_p: parse_uint(s.req("n_p")?)?,
                    n_c: parse_uint(s.req("n_c")?)?,
                    couplings,
                    scan: s.get("scan").map(parse_uint).transpose()?.unwrap_or(0),
                    shifts,
                })
            }
        };

        let coefficients = match raw.unique("coefficients")? {
            None => vec![],
            Some(s) => {
                s.check_keys(&["n"])?;
                let v = s.req("n")?;
                split_list(v.1).map(|x| parse_uint((v.0, x))).collect::<Result<_, _>>()?
            }
        };

        let convergence = match raw.unique("convergence")? {
            None => None,
            Some(s) => {
                s.check_keys(&["refinements", "samples", "saturation_factor"])?;
                let v = s.req("refinements")?;
                let refinements: Vec<f64> = split_list(v.1).map(|x| parse_num((v.0, x))).collect::<Result<_, _>>()?;
                if refinements.len() < 2 || refinements.windows(2).any(|w| w[1] <= w[0]) {
                    return err(Some(v.0), "refinements must be at least two increasing factors");
                }
                Some(ConvergenceSpec {
                    refinements,
                    samples: s.get("samples").map(parse_uint).transpose()?.unwrap_or(4096),
                    saturation_factor: s.get("saturation_factor").map(parse_num).transpose()?.unwrap_or(2.0),
                })
            }
        };

        let known = [
            "experiment", "mapping", "function", "layout", "band", "twin", "plan", "advection", "stability", "coefficients",
            "convergence",
        ];
        if let Some(s) = raw.sections.iter().find(|s| !known.contains(&s.name.as_str())) {
            return err(Some(s.line), format!("unknown section [{}]", s.name));
        }

        let cfg = ExperimentConfig {
            name,
            kind,
            seed,
            mapping,
            function,
            layout,
            twins,
            modes,
            cross,
            project_values,
            advection,
            stability,
            coefficients,
            convergence,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { err(None, format!("{} experiment needs {what}", self.kind.name())) };
        match self.kind {
            ExperimentKind::Interpolation => need(self.layout.is_some(), "a [layout]")?,
            ExperimentKind::Advection => {
                need(self.layout.is_some(), "a [layout]")?;
                need(self.advection.is_some(), "an [advection] section")?;
                if self.layout.as_ref().is_some_and(|l| l.r_boundary == Boundary::HermiteKnown) {
                    return err(None, "advection supports only the greville r boundary");
                }
            }
            ExperimentKind::Stability => need(self.stability.is_some(), "a [stability] section")?,
            ExperimentKind::Coefficients => need(!self.coefficients.is_empty(), "a [coefficients] section")?,
            ExperimentKind::Convergence => {
                need(self.layout.is_some(), "a [layout]")?;
                need(self.convergence.is_some(), "a [convergence] section")?;
                let conv = self.convergence.as_ref().unwrap();
                let top = conv.refinements.last().copied().unwrap_or(1.0);
                let cells = self.layout.as_ref().unwrap().global_cells(top);
                if cells > MAX_GLOBAL_CELLS {
                    return err(None, format!("refinement {top} gives {cells} global cells, above the 2048² limit"));
                }
            }
        }
        let hermite = self.layout.as_ref().is_some_and(|l| l.r_boundary == Boundary::HermiteKnown);
        if (hermite || self.kind == ExperimentKind::Convergence) && self.function != FunctionKind::Trig {
            return err(None, "hermite r boundaries and convergence studies need the trig function, whose gradient is known");
        }
        if let Some(l) = &self.layout {
            for f in self.convergence.as_ref().map_or(vec![1.0], |c| c.refinements.clone()) {
                l.build(f)?;
            }
            for t in &self.twins {
                t.layout.build(1.0)?;
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal configuration.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[experiment]\nname = {}\nkind = {}\nseed = {}", self.name, self.kind.name(), self.seed);
        match self.mapping {
            Mapping::Czarny { eps, e } => {
                let _ = writeln!(s, "\n[mapping]\nkind = czarny\neps = {eps:?}\ne = {e:?}");
            }
            Mapping::Circular => s.push_str("\n[mapping]\nkind = circular\n"),
            Mapping::Identity => s.push_str("\n[mapping]\nkind = identity\n"),
        }
        let fk = match self.function {
            FunctionKind::Trig => "trig",
            FunctionKind::TwoBump => "two_bump",
        };
        let _ = writeln!(s, "\n[function]\nkind = {fk}");
        if let Some(l) = &self.layout {
            let rb = if l.r_boundary == Boundary::HermiteKnown { "hermite" } else { "greville" };
            let tb = if l.theta_boundary == Boundary::Periodic { "periodic" } else { "greville" };
            let _ = writeln!(s, "\n[layout]\nr_boundary = {rb}\ntheta_boundary = {tb}");
            for b in &l.bands {
                let _ = writeln!(s, "\n[band]\nr = {}\ntheta = {}", seg(&b.r), b.theta.iter().map(seg).collect::<Vec<_>>().join(", "));
            }
            for t in &self.twins {
                let b = &t.layout.bands[0];
                let _ = writeln!(s, "\n[twin]\nname = {}\nr = {}\ntheta = {}", t.name, seg(&b.r), b.theta.iter().map(seg).collect::<Vec<_>>().join(", "));
            }
        }
        let cross = match self.cross {
            CrossMethod::Auto => "auto",
            CrossMethod::RLines => "r_lines",
            CrossMethod::ThetaLines => "theta_lines",
        };
        let modes: Vec<String> = self.modes.iter().map(|m| mode_name(*m)).collect();
        let _ = writeln!(s, "\n[plan]\nmodes = {}\ncross = {cross}\nproject_values = {}", modes.join(", "), self.project_values);
        if let Some(a) = &self.advection {
            s.push_str("\n[advection]\n");
            match a.field {
                FieldSpec::Rotation { omega } => {
                    let _ = writeln!(s, "field = rotation\nomega = {omega:?}");
                }
                FieldSpec::ConstantLogical { vr, vth } => {
                    let _ = writeln!(s, "field = constant_logical\nvr = {vr:?}\nvth = {vth:?}");
                }
            }
            let tracer = if a.tracer == mpspline::advection::Tracer::Rk3 { "rk3" } else { "exact" };
            let _ = writeln!(
                s,
                "dt = {:?}\nt_final = {:?}\ntracer = {tracer}\nout_of_domain = {}\nglobal_twin = {}",
                a.dt,
                a.t_final,
                if a.clamp { "clamp" } else { "error" },
                a.global_twin
            );
            if !a.snapshot_steps.is_empty() {
                let v: Vec<String> = a.snapshot_steps.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "snapshot_steps = {}", v.join(", "));
            }
        }
        if let Some(st) = &self.stability {
            let c: Vec<&str> = st.couplings.iter().map(|c| if *c == Coupling::C0 { "c0" } else { "c1" }).collect();
            let _ = writeln!(s, "\n[stability]\nn_p = {}\nn_c = {}\ncoupling = {}\nscan = {}", st.n_p, st.n_c, c.join(", "), st.scan);
            if !st.shifts.is_empty() {
                let v: Vec<String> = st.shifts.iter().map(|x| format!("{x:?}")).collect();
                let _ = writeln!(s, "shifts = {}", v.join(", "));
            }
        }
        if !self.coefficients.is_empty() {
            let v: Vec<String> = self.coefficients.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "\n[coefficients]\nn = {}", v.join(", "));
        }
        if let Some(c) = &self.convergence {
            let v: Vec<String> = c.refinements.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(
                s,
                "\n[convergence]\nrefinements = {}\nsamples = {}\nsaturation_factor = {:?}",
                v.join(", "),
                c.samples,
                c.saturation_factor
            );
        }
        s
    }
}

fn seg(s: &Segment) -> String {
    format!("{:?} : {:?} : {}", s.start, s.end, s.cells)
}

pub fn mode_name(m: PlanMode) -> String {
    match m {
        PlanMode::Exact => "exact".into(),
        PlanMode::Truncated(n) => format!("truncated:{n}"),
    }
}

pub fn parse_mode(s: &str) -> Result<PlanMode, String> {
    if s == "exact" {
        return Ok(PlanMode::Exact);
    }
    match s.strip_prefix("truncated:").map(|n| n.trim().parse::<usize>()) {
        Some(Ok(n)) if n >= 1 => Ok(PlanMode::Truncated(n)),
        _ => Err(format!("plan mode `{s}` is neither `exact` nor `truncated:N` with N ≥ 1")),
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn parse_num((line, v): (usize, &str)) -> Result<f64, ConfigError> {
    expr::eval(v).map_err(|m| ConfigError { line: Some(line), message: m })
}

fn parse_uint((line, v): (usize, &str)) -> Result<usize, ConfigError> {
    v.parse().map_err(|_| ConfigError { line: Some(line), message: format!("`{v}` is not a non-negative integer") })
}

fn parse_bool((line, v): (usize, &str)) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => err(Some(line), format!("`{v}` is not true or false")),
    }
}

fn parse_segment(line: usize, v: &str) -> Result<Segment, ConfigError> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return err(Some(line), format!("segment `{v}` must read `start : end : cells`"));
    }
    let start = parse_num((line, parts[0]))?;
    let end = parse_num((line, parts[1]))?;
    let cells = parse_uint((line, parts[2]))?;
    if !(end > start) {
        return err(Some(line), format!("segment `{v}` must have end > start"));
    }
    Ok(Segment { start, end, cells })
}

fn parse_band(s: &Section) -> Result<BandSpec, ConfigError> {
    let (lr, r) = s.req("r")?;
    let (lt, t) = s.req("theta")?;
    if s.name == "band" {
        s.check_keys(&["r", "theta"])?;
    }
    Ok(BandSpec {
        r: parse_segment(lr, r)?,
        theta: split_list(t).map(|x| parse_segment(lt, x)).collect::<Result<_, _>>()?,
    })
}

/// One `[section]` with its entries in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<(usize, String, String)>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.iter().find(|e| e.1 == key).map(|e| (e.0, e.2.as_str()))
    }

    fn req(&self, key: &str) -> Result<(usize, &str), ConfigError> {
        self.get(key).ok_or(ConfigError { line: Some(self.line), message: format!("[{}] needs `{key}`", self.name) })
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.entries.iter().find(|e| !allowed.contains(&e.1.as_str())) {
            Some(e) => err(Some(e.0), format!("unknown key `{}` in [{}]", e.1, self.name)),
            None => Ok(()),
        }
    }

    /// Sets `key`, replacing an existing entry.
    pub fn set(&mut self, key: &str, value: &str) {
        match self.entries.iter_mut().find(|e| e.1 == key) {
            Some(e) => e.2 = value.to_string(),
            None => self.entries.push((0, key.to_string(), value.to_string())),
        }
    }
}

/// Untyped view of a config file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawConfig {
    pub sections: Vec<Section>,
}

/// Sections that may appear several times; the others are unique.
const REPEATABLE: [&str; 2] = ["band", "twin"];

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: Vec<Section> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or(ConfigError { line: Some(line), message: "unterminated section header".into() })?.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                    return err(Some(line), format!("bad section name `{name}`"));
                }
                if !REPEATABLE.contains(&name) && sections.iter().any(|s| s.name == name) {
                    return err(Some(line), format!("section [{name}] appears twice"));
                }
                sections.push(Section { name: name.to_string(), line, entries: vec![] });
                continue;
            }
            let (k, v) = content.split_once('=').ok_or(ConfigError { line: Some(line), message: format!("expected `key = value`, got `{content}`") })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return err(Some(line), format!("bad key `{k}`"));
            }
            let sec = sections.last_mut().ok_or(ConfigError { line: Some(line), message: "entry before any section".into() })?;
            if sec.get(k).is_some() {
                return err(Some(line), format!("key `{k}` repeated in [{}]", sec.name));
            }
            sec.entries.push((line, k.to_string(), v.to_string()));
        }
        Ok(RawConfig { sections })
    }

    fn unique(&self, name: &str) -> Result<Option<&Section>, ConfigError> {
        Ok(self.sections.iter().find(|s| s.name == name))
    }

    fn all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }

    /// Layers `other` on top: unique sections merge key by key, and repeated
    /// sections of a kind present in `other` replace the base ones.
    pub fn overlay(&mut self, other: &RawConfig) {
        for kind in REPEATABLE {
            if other.sections.iter().any(|s| s.name == kind) {
                self.sections.retain(|s| s.name != kind);
            }
        }
        for s in &other.sections {
            if REPEATABLE.contains(&s.name.as_str()) {
                self.sections.push(s.clone());
                continue;
            }
            match self.sections.iter_mut().find(|b| b.name == s.name) {
                Some(base) => {
                    for (_, k, v) in &s.entries {
                        base.set(k, v);
                    }
                }
                None => self.sections.push(s.clone()),
            }
        }
    }

    /// Sets `key` in section `name`, creating the section when absent.
    pub fn set(&mut self, name: &str, key: &str, value: &str) {
        match self.sections.iter_mut().find(|s| s.name == name) {
            Some(s) => s.set(key, value),
            None => self.sections.push(Section { name: name.into(), line: 0, entries: vec![(0, key.into(), value.into())] }),
        }
    }
}
