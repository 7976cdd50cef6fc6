//! Tensor-product splines with Hermite edges and corners.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spline::{build_knots, BreakPoints, Collocation, Condition, KnotKind, KnotVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lo,
    Hi,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Lo => 0,
            Side::Hi => 1,
        }
    }
}

/// How one end of a non-periodic axis is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndKind {
    /// The derivative at the end point is a condition.
    Slope,
    /// An extra value point one third of a cell inside the end.
    Extra,
}

/// Row of a collocation system expressed against stored field data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Row {
    Value(usize),
    Slope(Side),
}

/// Closure kinds for a 2D axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisClosure {
    Hermite,
    Periodic,
    GrevillePoints,
}

/// A factored 1D axis: value points, the row layout and the collocation solver.
#[derive(Debug, Clone)]
pub struct Axis {
    points: Vec<f64>,
    rows: Vec<Row>,
    ends: Option<[EndKind; 2]>,
    colloc: Collocation,
}

impl Axis {
    pub fn periodic(breaks: &BreakPoints) -> Result<Self> {
        let n = breaks.cells();
        let points = breaks.points()[..n].to_vec();
        let conds = points.iter().map(|&x| Condition::Value(x)).collect();
        let colloc = Collocation::new(build_knots(breaks, KnotKind::Periodic), conds)?;
        Ok(Axis {
            rows: (0..n).map(Row::Value).collect(),
            points,
            ends: None,
            colloc,
        })
    }

    /// Open knots on the break points, each end closed by a slope or an extra point.
    pub fn with_ends(breaks: &BreakPoints, lo: EndKind, hi: EndKind) -> Result<Self> {
        let x = breaks.points();
        let n = breaks.cells();
        let mut points = Vec::with_capacity(n + 3);
        let mut rows = Vec::with_capacity(n + 3);
        let mut conds = Vec::with_capacity(n + 3);
        let push_value =
            |p: f64, points: &mut Vec<f64>, rows: &mut Vec<Row>, conds: &mut Vec<Condition>| {
                rows.push(Row::Value(points.len()));
                points.push(p);
                conds.push(Condition::Value(p));
            };
        push_value(x[0], &mut points, &mut rows, &mut conds);
        match lo {
            EndKind::Slope => {
                rows.push(Row::Slope(Side::Lo));
                conds.push(Condition::Slope(x[0]));
            }
            EndKind::Extra => push_value(
                x[0] + (x[1] - x[0]) / 3.0,
                &mut points,
                &mut rows,
                &mut conds,
            ),
        }
        for &xi in &x[1..n] {
            push_value(xi, &mut points, &mut rows, &mut conds);
        }
        match hi {
            EndKind::Slope => {
                rows.push(Row::Slope(Side::Hi));
                conds.push(Condition::Slope(x[n]));
            }
            EndKind::Extra => push_value(
                x[n] - (x[n] - x[n - 1]) / 3.0,
                &mut points,
                &mut rows,
                &mut conds,
            ),
        }
        push_value(x[n], &mut points, &mut rows, &mut conds);
        let colloc = Collocation::new(build_knots(breaks, KnotKind::Open), conds)?;
        Ok(Axis {
            points,
            rows,
            ends: Some([lo, hi]),
            colloc,
        })
    }

    /// Values at the Greville abscissae of the open knot vector.
    pub fn greville(breaks: &BreakPoints) -> Result<Self> {
        let knots = build_knots(breaks, KnotKind::Open);
        let points = knots.greville_points()?;
        let conds = points.iter().map(|&x| Condition::Value(x)).collect();
        let colloc = Collocation::new(knots, conds)?;
        let rows = (0..points.len()).map(Row::Value).collect();
        Ok(Axis {
            points,
            rows,
            ends: None,
            colloc,
        })
    }

    pub fn from_closure(breaks: &BreakPoints, c: AxisClosure) -> Result<Self> {
        match c {
            AxisClosure::Hermite => Self::with_ends(breaks, EndKind::Slope, EndKind::Slope),
            AxisClosure::Periodic => Self::periodic(breaks),
            AxisClosure::GrevillePoints => Self::greville(breaks),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn ends(&self) -> Option<[EndKind; 2]> {
        self.ends
    }

    pub fn knots(&self) -> &KnotVector {
        self.colloc.knots()
    }

    pub fn collocation(&self) -> &Collocation {
        &self.colloc
    }

    pub fn is_periodic(&self) -> bool {
        self.knots().is_periodic()
    }

    pub fn has_slope(&self, side: Side) -> bool {
        self.rows.iter().any(|r| *r == Row::Slope(side))
    }
}

/// Edge derivatives and corner cross-derivatives that complete the data of a patch.
///
/// `dr[s]` runs along the θ value points at the r-end `s`; `dth[s]` runs along the
/// r value points at the θ-end `s`; `cross[sr][sθ]` sits at the corner.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeData {
    pub dr: [Vec<f64>; 2],
    pub dth: [Vec<f64>; 2],
    pub cross: [[f64; 2]; 2],
}

/// Cubic tensor-product spline.
#[derive(Debug, Clone)]
pub struct Spline2D {
    pub coeffs: Array2<f64>,
    pub knots_r: KnotVector,
    pub knots_th: KnotVector,
}

impl Spline2D {
    fn combine(&self, r: f64, th: f64, dr: bool, dth: bool) -> Result<f64> {
        let (cr, vr, dvr) = self.knots_r.eval_both(r)?;
        let (ct, vt, dvt) = self.knots_th.eval_both(th)?;
        let wr = if dr { dvr } else { vr };
        let wt = if dth { dvt } else { vt };
        let mut s = 0.0;
        for i in 0..4 {
            let ri = self.knots_r.coeff_index(cr, i);
            let mut row = 0.0;
            for j in 0..4 {
                row += wt[j] * self.coeffs[[ri, self.knots_th.coeff_index(ct, j)]];
            }
            s += wr[i] * row;
        }
        Ok(s)
    }

    pub fn eval(&self, r: f64, th: f64) -> Result<f64> {
        self.combine(r, th, false, false)
    }

    pub fn eval_dr(&self, r: f64, th: f64) -> Result<f64> {
        self.combine(r, th, true, false)
    }

    pub fn eval_dth(&self, r: f64, th: f64) -> Result<f64> {
        self.combine(r, th, false, true)
    }

    pub fn eval_drth(&self, r: f64, th: f64) -> Result<f64> {
        self.combine(r, th, true, true)
    }
}

/// Two factored axes; solves `C = A_r^{-1} D A_θ^{-T}` for a data matrix `D`.
#[derive(Debug, Clone)]
pub struct TensorInterpolator {
    pub r: Axis,
    pub th: Axis,
}

impl TensorInterpolator {
    pub fn new(r: Axis, th: Axis) -> Self {
        TensorInterpolator { r, th }
    }

    /// Arranges values and edge data into the row/column order of the two systems.
    pub fn data_matrix(&self, values: &Array2<f64>, edges: &EdgeData) -> Result<Array2<f64>> {
        let (nr, nt) = (self.r.points.len(), self.th.points.len());
        if values.dim() != (nr, nt) {
            return Err(Error::Invalid(format!(
                "value matrix is {:?}, axes expect ({nr}, {nt})",
                values.dim()
            )));
        }
        for s in [Side::Lo, Side::Hi] {
            if self.r.has_slope(s) && edges.dr[s.index()].len() != nt {
                return Err(Error::MissingData(format!("r-derivative on {s:?} edge")));
            }
            if self.th.has_slope(s) && edges.dth[s.index()].len() != nr {
                return Err(Error::MissingData(format!("θ-derivative on {s:?} edge")));
            }
        }
        let mut d = Array2::zeros((self.r.rows.len(), self.th.rows.len()));
        for (i, rr) in self.r.rows.iter().enumerate() {
            for (j, rt) in self.th.rows.iter().enumerate() {
                d[[i, j]] = match (*rr, *rt) {
                    (Row::Value(a), Row::Value(b)) => values[[a, b]],
                    (Row::Slope(s), Row::Value(b)) => edges.dr[s.index()][b],
                    (Row::Value(a), Row::Slope(s)) => edges.dth[s.index()][a],
                    (Row::Slope(s), Row::Slope(t)) => edges.cross[s.index()][t.index()],
                };
            }
        }
        Ok(d)
    }

    pub fn solve(&self, mut d: Array2<f64>) -> Result<Spline2D> {
        if let Some(v) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(v));
        }
        let (nr, nt) = d.dim();
        let mut col = vec![0.0; nr];
        for j in 0..nt {
            for i in 0..nr {
                col[i] = d[[i, j]];
            }
            self.r.colloc.solve_in_place(&mut col);
            for i in 0..nr {
                d[[i, j]] = col[i];
            }
        }
        let mut row = vec![0.0; nt];
        for i in 0..nr {
            for j in 0..nt {
                row[j] = d[[i, j]];
            }
            self.th.colloc.solve_in_place(&mut row);
            for j in 0..nt {
                d[[i, j]] = row[j];
            }
        }
        Ok(Spline2D {
            coeffs: d,
            knots_r: self.r.knots().clone(),
            knots_th: self.th.knots().clone(),
        })
    }

    pub fn interpolate(&self, values: &Array2<f64>, edges: &EdgeData) -> Result<Spline2D> {
        let d = self.data_matrix(values, edges)?;
        self.solve(d)
    }
}

/// One-shot 2D interpolation.
///
/// `values` is indexed by (r value point, θ value point); Hermite axes use the
/// break points, Periodic axes the distinct break points, GrevillePoints axes the
/// Greville abscissae. Edge data is read only for Hermite axes.
pub fn interpolate_2d(
    breaks_r: &BreakPoints,
    breaks_th: &BreakPoints,
    closure_r: AxisClosure,
    closure_th: AxisClosure,
    values: &Array2<f64>,
    edges: &EdgeData,
) -> Result<Spline2D> {
    let t = TensorInterpolator::new(
        Axis::from_closure(breaks_r, closure_r)?,
        Axis::from_closure(breaks_th, closure_th)?,
    );
    t.interpolate(values, edges)
}
