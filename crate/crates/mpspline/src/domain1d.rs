//! One-dimensional multipatch domains.

use crate::error::{Error, Result};
use crate::line::{LineEnd, LinePlan, LineShape, PlanMode};
use crate::spline::{BreakPoints, SplineCoeffs1D};
use crate::spline2d::{Axis, EndKind, Row, Side};

/// Outer boundary treatment of a domain dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    HermiteKnown,
    GrevilleExtra,
    Periodic,
}

/// Tolerance used when matching coordinates of neighbouring patches.
pub const GEOMETRY_TOL: f64 = 1e-12;

/// Patches laid end to end on a line.
#[derive(Debug, Clone)]
pub struct Domain1D {
    patches: Vec<BreakPoints>,
    boundary: Boundary,
    nodes: Vec<f64>,
    offsets: Vec<usize>,
}

pub(crate) fn same_coord(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= GEOMETRY_TOL * scale.max(1.0)
}

impl Domain1D {
    pub fn new(patches: Vec<BreakPoints>, boundary: Boundary) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::Layout("no patches".into()));
        }
        let scale = patches
            .last()
            .unwrap()
            .last()
            .abs()
            .max(patches[0].first().abs());
        let mut nodes = vec![patches[0].first()];
        let mut offsets = Vec::with_capacity(patches.len());
        for (p, b) in patches.iter().enumerate() {
            if !same_coord(b.first(), *nodes.last().unwrap(), scale) {
                return Err(Error::Layout(format!(
                    "patch {p} starts at {} but the previous one ends at {}",
                    b.first(),
                    nodes.last().unwrap()
                )));
            }
            offsets.push(nodes.len() - 1);
            nodes.extend_from_slice(&b.points()[1..]);
        }
        Ok(Domain1D {
            patches,
            boundary,
            nodes,
            offsets,
        })
    }

    pub fn patches(&self) -> &[BreakPoints] {
        &self.patches
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Merged node coordinates.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Global index of the first node of each patch.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn n_interfaces(&self) -> usize {
        match (self.boundary, self.patches.len()) {
            (Boundary::Periodic, 1) => 0,
            (Boundary::Periodic, p) => p,
            (_, p) => p - 1,
        }
    }

    /// Local interpolation axis of patch `p`.
    pub fn axis(&self, p: usize) -> Result<Axis> {
        let np = self.patches.len();
        if self.boundary == Boundary::Periodic && np == 1 {
            return Axis::periodic(&self.patches[0]);
        }
        let outer = if self.boundary == Boundary::GrevilleExtra {
            EndKind::Extra
        } else {
            EndKind::Slope
        };
        let lo = if p == 0 { outer } else { EndKind::Slope };
        let hi = if p + 1 == np { outer } else { EndKind::Slope };
        let (lo, hi) = if self.boundary == Boundary::Periodic {
            (EndKind::Slope, EndKind::Slope)
        } else {
            (lo, hi)
        };
        Axis::with_ends(&self.patches[p], lo, hi)
    }

    fn shape(&self) -> LineShape {
        match self.boundary {
            Boundary::Periodic => LineShape::Periodic,
            Boundary::HermiteKnown => LineShape::Open([LineEnd::Hermite; 2]),
            Boundary::GrevilleExtra => LineShape::Open([LineEnd::Greville; 2]),
        }
    }

    /// Split nodes in interface order: interface `p` joins patch `p` and `p+1`
    /// (the periodic wrap interface comes last).
    fn interface_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.offsets[1..].to_vec();
        if self.n_interfaces() == self.patches.len() {
            v.push(0);
        }
        v
    }

    /// Merges per-patch values (laid out as [`Domain1D::axis`] points) into
    /// node values plus the two extra values.
    pub fn merge_values(&self, values: &[Vec<f64>]) -> Result<(Vec<f64>, [f64; 2])> {
        if values.len() != self.patches.len() {
            return Err(Error::ValueCount {
                expected: self.patches.len(),
                got: values.len(),
            });
        }
        let mut nodes: Vec<f64> = Vec::with_capacity(self.nodes.len());
        let mut extras = [0.0; 2];
        let np = self.patches.len();
        for (p, v) in values.iter().enumerate() {
            let axis = self.axis(p)?;
            if v.len() != axis.points().len() {
                return Err(Error::ValueCount {
                    expected: axis.points().len(),
                    got: v.len(),
                });
            }
            let mut node_vals: Vec<f64> = Vec::with_capacity(v.len());
            for (i, &x) in v.iter().enumerate() {
                let is_extra = match axis.ends() {
                    Some([lo, hi]) => {
                        (lo == EndKind::Extra && i == 1)
                            || (hi == EndKind::Extra && i + 2 == v.len())
                    }
                    None => false,
                };
                if is_extra {
                    extras[if i == 1 { 0 } else { 1 }] = x;
                } else {
                    node_vals.push(x);
                }
            }
            if p > 0 {
                let last = *nodes.last().unwrap();
                if (last - node_vals[0]).abs() > 1e-10 * (1.0f64).max(last.abs()) {
                    return Err(Error::Invalid(format!(
                        "shared value mismatch at interface {}: {last} vs {}",
                        p - 1,
                        node_vals[0]
                    )));
                }
                nodes.extend_from_slice(&node_vals[1..]);
            } else {
                nodes.extend_from_slice(&node_vals);
            }
            if p + 1 == np && self.boundary == Boundary::Periodic && np > 1 {
                let wrap = nodes.pop().unwrap();
                if (wrap - nodes[0]).abs() > 1e-10 * (1.0f64).max(wrap.abs()) {
                    return Err(Error::Invalid(
                        "shared value mismatch at the periodic wrap".into(),
                    ));
                }
            }
        }
        Ok((nodes, extras))
    }
}

/// Interface system of a 1D domain, factored once.
#[derive(Debug, Clone)]
pub struct DerivativePlan {
    domain: Domain1D,
    line: Option<LinePlan>,
    order: Vec<usize>,
}

impl DerivativePlan {
    pub fn domain(&self) -> &Domain1D {
        &self.domain
    }

    pub fn line(&self) -> Option<&LinePlan> {
        self.line.as_ref()
    }

    pub fn mode(&self) -> Option<PlanMode> {
        self.line.as_ref().map(|l| l.mode())
    }
}

pub fn assemble_plan(domain: &Domain1D, mode: PlanMode) -> Result<DerivativePlan> {
    let iface = domain.interface_nodes();
    if iface.is_empty() {
        return Ok(DerivativePlan {
            domain: domain.clone(),
            line: None,
            order: vec![],
        });
    }
    let mut splits = iface.clone();
    splits.sort_unstable();
    let order = iface
        .iter()
        .map(|n| splits.binary_search(n).unwrap())
        .collect();
    let line = LinePlan::new(domain.nodes(), domain.shape(), &splits, mode)?;
    Ok(DerivativePlan {
        domain: domain.clone(),
        line: Some(line),
        order,
    })
}

/// Derivative at every interface (see [`Domain1D`] for the ordering).
pub fn solve_interface_derivs_1d(
    plan: &DerivativePlan,
    values: &[Vec<f64>],
    boundary_derivs: Option<[f64; 2]>,
) -> Result<Vec<f64>> {
    let Some(line) = &plan.line else {
        return Ok(vec![]);
    };
    let (nodes, extras) = plan.domain.merge_values(values)?;
    if plan.domain.boundary == Boundary::HermiteKnown && boundary_derivs.is_none() {
        return Err(Error::MissingData(
            "boundary derivatives of a Hermite domain".into(),
        ));
    }
    let d = line.solve(&nodes, extras, boundary_derivs.unwrap_or([0.0; 2]))?;
    Ok(plan.order.iter().map(|&q| d[q]).collect())
}

/// Patch splines from values, interface derivatives and outer derivatives.
pub fn build_local_splines_1d(
    domain: &Domain1D,
    values: &[Vec<f64>],
    interface_derivs: &[f64],
    boundary_derivs: Option<[f64; 2]>,
) -> Result<Vec<SplineCoeffs1D>> {
    let np = domain.patches.len();
    if interface_derivs.len() != domain.n_interfaces() {
        return Err(Error::ValueCount {
            expected: domain.n_interfaces(),
            got: interface_derivs.len(),
        });
    }
    let periodic = domain.boundary == Boundary::Periodic;
    let mut out = Vec::with_capacity(np);
    for p in 0..np {
        let axis = domain.axis(p)?;
        let slope = |side: Side| -> Result<f64> {
            match side {
                Side::Lo if p > 0 => Ok(interface_derivs[p - 1]),
                Side::Hi if p + 1 < np => Ok(interface_derivs[p]),
                Side::Lo if periodic => Ok(interface_derivs[np - 1]),
                Side::Hi if periodic => Ok(interface_derivs[np - 1]),
                _ => boundary_derivs
                    .map(|d| d[side.index()])
                    .ok_or_else(|| Error::MissingData("outer boundary derivative".into())),
            }
        };
        let data = axis
            .rows()
            .iter()
            .map(|r| match *r {
                Row::Value(i) => Ok(values[p][i]),
                Row::Slope(s) => slope(s),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(axis.collocation().solve(&data)?);
    }
    Ok(out)
}

/// Single spline on the merged grid with the domain's outer closure.
pub fn equivalent_global_spline_1d(
    domain: &Domain1D,
    values: &[Vec<f64>],
    boundary_derivs: Option<[f64; 2]>,
) -> Result<SplineCoeffs1D> {
    let (nodes, extras) = domain.merge_values(values)?;
    let breaks = BreakPoints::new(domain.nodes.clone())?;
    let axis = match domain.boundary {
        Boundary::Periodic => Axis::periodic(&breaks)?,
        Boundary::HermiteKnown => Axis::with_ends(&breaks, EndKind::Slope, EndKind::Slope)?,
        Boundary::GrevilleExtra => Axis::with_ends(&breaks, EndKind::Extra, EndKind::Extra)?,
    };
    let n = breaks.cells();
    let data = axis
        .rows()
        .iter()
        .map(|r| match *r {
            Row::Value(i) => match domain.boundary {
                Boundary::GrevilleExtra if i == 1 => Ok(extras[0]),
                Boundary::GrevilleExtra if i == n + 1 => Ok(extras[1]),
                Boundary::GrevilleExtra if i == 0 => Ok(nodes[0]),
                Boundary::GrevilleExtra if i == n + 2 => Ok(nodes[n]),
                Boundary::GrevilleExtra => Ok(nodes[i - 1]),
                _ => Ok(nodes[i]),
            },
            Row::Slope(s) => boundary_derivs
                .map(|d| d[s.index()])
                .ok_or_else(|| Error::MissingData("outer boundary derivative".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    axis.collocation().solve(&data)
}

/// Evaluates a set of patch splines at `x`; nodes on an interface go to the right patch.
pub fn eval_piecewise(
    domain: &Domain1D,
    splines: &[SplineCoeffs1D],
    x: f64,
    deriv: bool,
) -> Result<f64> {
    let np = domain.patches.len();
    let mut xw = x;
    if domain.boundary == Boundary::Periodic {
        let (a, b) = (domain.nodes[0], *domain.nodes.last().unwrap());
        xw = a + (x - a).rem_euclid(b - a);
    }
    let p = (0..np)
        .rev()
        .find(|&p| xw >= domain.patches[p].first())
        .unwrap_or(0);
    if deriv {
        splines[p].eval_deriv(xw)
    } else {
        splines[p].eval(xw)
    }
}
