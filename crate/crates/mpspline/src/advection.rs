//! Backward semi-Lagrangian advection on a 2D multipatch layout.
//!
//! Each step reconstructs the interface derivatives, builds the local splines
//! and evaluates them at the feet of the characteristics ending on the value
//! points. The advection fields here are stationary, so the feet are traced
//! once when the [`Advector`] is built.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::domain2d::{Domain2D, PatchField};
use crate::error::{Error, Result};
use crate::mapping::Mapping;
use crate::reconstruct::{ReconstructOptions, Reconstructor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdvectionField {
    /// Rotation along the θ lines at angular speed ω: A = J_F (0, ω)ᵀ.
    MeshRotation { omega: f64 },
    /// Constant velocity in logical coordinates, pushed forward by the map.
    ConstantLogical { vr: f64, vth: f64 },
}

impl AdvectionField {
    /// Physical velocity at a physical point.
    pub fn velocity(&self, mapping: &Mapping, x: f64, y: f64) -> Result<(f64, f64)> {
        match *self {
            AdvectionField::MeshRotation { omega } => {
                let (tx, ty) = mapping.theta_tangent(x, y)?;
                Ok((omega * tx, omega * ty))
            }
            AdvectionField::ConstantLogical { vr, vth } => {
                let (r, th) = mapping.inverse(x, y)?;
                let j = mapping.jacobian(r, th);
                Ok((j[0][0] * vr + j[0][1] * vth, j[1][0] * vr + j[1][1] * vth))
            }
        }
    }

    /// Exact logical displacement over `t`.
    pub fn logical_shift(&self, t: f64) -> (f64, f64) {
        match *self {
            AdvectionField::MeshRotation { omega } => (0.0, omega * t),
            AdvectionField::ConstantLogical { vr, vth } => (vr * t, vth * t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tracer {
    /// Third-order Runge–Kutta in physical coordinates.
    Rk3,
    /// Exact logical characteristics (test aid).
    ExactLogical,
}

/// Treatment of feet beyond the r range by more than [`BslConfig::r_tolerance`].
/// Closer feet are always clamped: a rotation traced with RK3 drifts off the
/// outer circle by its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutOfDomain {
    #[default]
    Error,
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BslConfig {
    pub dt: f64,
    pub t_final: f64,
    pub tracer: Tracer,
    pub plan: ReconstructOptions,
    pub out_of_domain: OutOfDomain,
    /// Distance in r beyond the domain still clamped silently.
    pub r_tolerance: f64,
}

impl BslConfig {
    pub fn new(dt: f64, t_final: f64, tracer: Tracer, plan: ReconstructOptions) -> Self {
        BslConfig { dt, t_final, tracer, plan, out_of_domain: OutOfDomain::Error, r_tolerance: 1e-6 }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Folds a logical point with negative radius through the pole.
fn fold(mapping: &Mapping, r: f64, th: f64) -> (f64, f64) {
    if r < 0.0 && mapping.has_pole() {
        (-r, th + PI)
    } else {
        (r, th)
    }
}

/// Logical foot of the characteristic that reaches `(r, θ)` after `dt`.
pub fn trace_foot(
    field: &AdvectionField,
    mapping: &Mapping,
    r: f64,
    th: f64,
    dt: f64,
    tracer: Tracer,
) -> Result<(f64, f64)> {
    match tracer {
        Tracer::ExactLogical => {
            let (dr, dth) = field.logical_shift(dt);
            Ok(fold(mapping, r - dr, th - dth))
        }
        Tracer::Rk3 => {
            let h = -dt;
            let (x, y) = mapping.forward(r, th);
            let k1 = field.velocity(mapping, x, y)?;
            let k2 = field.velocity(mapping, x + 0.5 * h * k1.0, y + 0.5 * h * k1.1)?;
            let k3 = field.velocity(mapping, x + h * (2.0 * k2.0 - k1.0), y + h * (2.0 * k2.1 - k1.1))?;
            let xf = x + h / 6.0 * (k1.0 + 4.0 * k2.0 + k3.0);
            let yf = y + h / 6.0 * (k1.1 + 4.0 * k2.1 + k3.1);
            if let Mapping::Identity = mapping {
                return Ok((xf, yf));
            }
            mapping.inverse(xf, yf)
        }
    }
}

/// Two elliptic bumps centred at `(x0, y0)` with a cos⁴ cutoff at radius `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBump {
    pub x0: f64,
    pub y0: f64,
    pub a: f64,
}

impl TwoBump {
    /// Centred at the image of (0.5, 0) with a = 0.3.
    pub fn standard(mapping: &Mapping) -> Self {
        let (x0, y0) = mapping.forward(0.5, 0.0);
        TwoBump { x0, y0, a: 0.3 }
    }

    fn g(&self, r: f64) -> f64 {
        if r <= self.a {
            (PI * r / (2.0 * self.a)).cos().powi(4)
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.x0, y - self.y0);
        let r1 = (dx * dx + 8.0 * dy * dy).sqrt();
        let r2 = (8.0 * dx * dx + dy * dy).sqrt();
        0.5 * (self.g(r1) + self.g(r2))
    }
}

#[derive(Debug, Clone, Copy)]
struct Foot {
    b: usize,
    j: usize,
    r: f64,
    th: f64,
}

#[derive(Debug, Clone)]
pub struct Advector {
    rec: Reconstructor,
    mapping: Mapping,
    config: BslConfig,
    feet: Vec<Vec<Array2<Foot>>>,
    pole: bool,
}

impl Advector {
    pub fn new(domain: Domain2D, mapping: Mapping, field: AdvectionField, config: BslConfig) -> Result<Self> {
        if !(config.dt > 0.0) {
            return Err(Error::Invalid("time step must be positive".into()));
        }
        let (r0, r1) = domain.r_range();
        let mut feet = Vec::with_capacity(domain.n_bands());
        for b in 0..domain.n_bands() {
            let mut row = Vec::new();
            for j in 0..domain.bands()[b].theta.len() {
                let it = domain.interpolator(b, j);
                let (rp, tp) = (it.r.points(), it.th.points());
                let mut arr = Array2::from_elem((rp.len(), tp.len()), Foot { b: 0, j: 0, r: 0.0, th: 0.0 });
                for (i, &r) in rp.iter().enumerate() {
                    for (k, &th) in tp.iter().enumerate() {
                        let (mut fr, fth) = trace_foot(&field, &mapping, r, th, config.dt, config.tracer)?;
                        let near = fr >= r0 - config.r_tolerance && fr <= r1 + config.r_tolerance;
                        if near || config.out_of_domain == OutOfDomain::Clamp {
                            fr = fr.clamp(r0, r1);
                        }
                        let (fb, fj, fr, fth) = domain.locate_logical(fr, fth)?;
                        arr[[i, k]] = Foot { b: fb, j: fj, r: fr, th: fth };
                    }
                }
                row.push(arr);
            }
            feet.push(row);
        }
        let pole = mapping.has_pole() && r0 == 0.0;
        let rec = Reconstructor::new(domain, config.plan)?;
        Ok(Advector { rec, mapping, config, feet, pole })
    }

    pub fn domain(&self) -> &Domain2D {
        self.rec.domain()
    }

    pub fn config(&self) -> &BslConfig {
        &self.config
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    /// Samples a physical-space function on every value point.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> PatchField {
        let m = self.mapping;
        self.domain().sample(|r, th| {
            let (x, y) = m.forward(r, th);
            f(x, y)
        })
    }

    pub fn step(&self, field: &mut PatchField) -> Result<()> {
        let domain = self.domain();
        let mut work = field.clone();
        self.rec.reconstruct(&mut work)?;
        let splines = domain.build_local_splines(&work)?;
        for (b, row) in self.feet.iter().enumerate() {
            for (j, feet) in row.iter().enumerate() {
                let vals = &mut field.values[b][j];
                for ((i, k), ft) in feet.indexed_iter() {
                    vals[[i, k]] = splines[ft.b][ft.j].eval(ft.r, ft.th)?;
                }
            }
        }
        domain.sync_shared(field);
        if self.pole {
            let cols = &domain.band_theta(0).columns;
            let mean = cols
                .iter()
                .map(|c| {
                    let (j, k) = c.owners[0];
                    field.values[0][j][[0, k]]
                })
                .sum::<f64>()
                / cols.len() as f64;
            for v in field.values[0].iter_mut() {
                v.row_mut(0).fill(mean);
            }
        }
        field.time += self.config.dt;
        Ok(())
    }
}

/// Exact solution of a stationary advection: the initial condition pulled back
/// along the exact logical characteristics.
pub fn exact_solution(
    domain: &Domain2D,
    mapping: &Mapping,
    adv: &AdvectionField,
    init: impl Fn(f64, f64) -> f64,
    t: f64,
) -> PatchField {
    let (dr, dth) = adv.logical_shift(t);
    let mut f = domain.sample(|r, th| {
        let (r0, th0) = fold(mapping, r - dr, th - dth);
        let (x, y) = mapping.forward(r0, th0);
        init(x, y)
    });
    f.time = t;
    f
}
