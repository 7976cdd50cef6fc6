//! Cubic B-spline bases on arbitrary break points and 1D interpolation.
//!
//! A spline on `N_c` cells has `N_c + 3` basis functions (only `N_c` distinct
//! ones when periodic). Interpolation is phrased as a collocation system: a list
//! of value or slope conditions, one per unknown coefficient.

use crate::error::{Error, Result};
use crate::linalg::{BandedLu, BandedMatrix, CyclicTridiag};

pub const DEGREE: usize = 3;

/// Strictly increasing cell boundaries, at least four cells.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakPoints {
    points: Vec<f64>,
}

impl BreakPoints {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 5 {
            return Err(Error::InvalidBreaks(format!(
                "need at least 4 cells (5 points), got {} points",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidBreaks(format!("point {i} is not finite")));
            }
        }
        for w in points.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidBreaks(format!(
                    "not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(BreakPoints { points })
    }

    pub fn uniform(a: f64, b: f64, cells: usize) -> Result<Self> {
        let h = (b - a) / cells as f64;
        let mut pts: Vec<f64> = (0..=cells).map(|i| a + i as f64 * h).collect();
        if let Some(last) = pts.last_mut() {
            *last = b;
        }
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.last() - self.first()
    }

    pub fn cell_width(&self, i: usize) -> f64 {
        self.points[i + 1] - self.points[i]
    }

    /// Index of the cell containing `x` (right end belongs to the last cell).
    pub fn cell_of(&self, x: f64) -> usize {
        let p = &self.points;
        let n = p.len() - 1;
        if x <= p[0] {
            return 0;
        }
        if x >= p[n] {
            return n - 1;
        }
        p.partition_point(|&v| v <= x) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnotKind {
    UniformExtended,
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    kind: KnotKind,
    breaks: BreakPoints,
}

pub fn build_knots(breaks: &BreakPoints, kind: KnotKind) -> KnotVector {
    let x = breaks.points();
    let nc = breaks.cells();
    let mut knots = Vec::with_capacity(nc + 7);
    match kind {
        KnotKind::UniformExtended => {
            let h = breaks.length() / nc as f64;
            for j in (1..=3).rev() {
                knots.push(x[0] - j as f64 * h);
            }
            knots.extend_from_slice(x);
            for j in 1..=3 {
                knots.push(x[nc] + j as f64 * h);
            }
        }
        KnotKind::Open => {
            knots.extend_from_slice(&[x[0]; 3]);
            knots.extend_from_slice(x);
            knots.extend_from_slice(&[x[nc]; 3]);
        }
        KnotKind::Periodic => {
            let p = breaks.length();
            for j in (1..=3).rev() {
                knots.push(x[nc - j] - p);
            }
            knots.extend_from_slice(x);
            for j in 1..=3 {
                knots.push(x[j] + p);
            }
        }
    }
    KnotVector {
        knots,
        kind,
        breaks: breaks.clone(),
    }
}

impl KnotVector {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn kind(&self) -> KnotKind {
        self.kind
    }

    pub fn breaks(&self) -> &BreakPoints {
        &self.breaks
    }

    pub fn cells(&self) -> usize {
        self.breaks.cells()
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == KnotKind::Periodic
    }

    /// Number of independent coefficients.
    pub fn n_coeffs(&self) -> usize {
        if self.is_periodic() {
            self.cells()
        } else {
            self.cells() + DEGREE
        }
    }

    /// Coefficient index of the `j`-th basis function active on `cell`.
    #[inline]
    pub fn coeff_index(&self, cell: usize, j: usize) -> usize {
        if self.is_periodic() {
            (cell + j) % self.cells()
        } else {
            cell + j
        }
    }

    /// Periodic wrap into `[x_0, x_0 + period)`; identity otherwise.
    pub fn wrap(&self, x: f64) -> f64 {
        if !self.is_periodic() {
            return x;
        }
        let x0 = self.breaks.first();
        let p = self.breaks.length();
        let mut w = x0 + (x - x0).rem_euclid(p);
        if w >= x0 + p {
            w = x0;
        }
        w
    }

    /// Cell index and wrapped coordinate, or an error outside a non-periodic domain.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !x.is_finite() {
            return Err(Error::NonFinite(0));
        }
        let xw = self.wrap(x);
        let (lo, hi) = (self.breaks.first(), self.breaks.last());
        if !self.is_periodic() && (xw < lo || xw > hi) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        Ok((self.breaks.cell_of(xw), xw))
    }

    /// Values of the four basis functions active on `cell` (Cox-de Boor).
    fn basis_in_cell(&self, cell: usize, x: f64, degree: usize) -> [f64; 4] {
        let t = &self.knots;
        let s = cell + DEGREE;
        let mut n = [0.0; 4];
        let mut left = [0.0; 4];
        let mut right = [0.0; 4];
        n[0] = 1.0;
        for j in 1..=degree {
            left[j] = x - t[s + 1 - j];
            right[j] = t[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        n
    }

    /// Basis values and first derivatives on a known cell.
    pub fn eval_in_cell(&self, cell: usize, x: f64) -> ([f64; 4], [f64; 4]) {
        let vals = self.basis_in_cell(cell, x, 3);
        let n2 = self.basis_in_cell(cell, x, 2);
        // n2[r] is the quadratic basis with first knot index cell + 1 + r.
        let t = &self.knots;
        let quad = |k: usize| -> f64 {
            if k >= cell + 1 && k <= cell + 3 {
                n2[k - cell - 1]
            } else {
                0.0
            }
        };
        let mut d = [0.0; 4];
        for (r, dr) in d.iter_mut().enumerate() {
            let k = cell + r;
            let mut v = 0.0;
            let den1 = t[k + 3] - t[k];
            if den1 > 0.0 {
                v += quad(k) / den1;
            }
            let den2 = t[k + 4] - t[k + 1];
            if den2 > 0.0 {
                v -= quad(k + 1) / den2;
            }
            *dr = 3.0 * v;
        }
        (vals, d)
    }

    pub fn eval_basis(&self, x: f64) -> Result<(usize, [f64; 4])> {
        let (cell, xw) = self.locate(x)?;
        Ok((cell, self.basis_in_cell(cell, xw, 3)))
    }

    pub fn eval_basis_deriv(&self, x: f64) -> Result<(usize, [f64; 4])> {
        let (cell, xw) = self.locate(x)?;
        Ok((cell, self.eval_in_cell(cell, xw).1))
    }

    /// Cell, values and derivatives at once.
    pub fn eval_both(&self, x: f64) -> Result<(usize, [f64; 4], [f64; 4])> {
        let (cell, xw) = self.locate(x)?;
        let (v, d) = self.eval_in_cell(cell, xw);
        Ok((cell, v, d))
    }

    pub fn greville_points(&self) -> Result<Vec<f64>> {
        if self.is_periodic() {
            return Err(Error::Invalid(
                "Greville points requested for periodic knots".into(),
            ));
        }
        let t = &self.knots;
        let (a, b) = (self.breaks.first(), self.breaks.last());
        // Averaging three equal end knots can round one ulp outside the domain.
        Ok((0..self.n_coeffs())
            .map(|i| ((t[i + 1] + t[i + 2] + t[i + 3]) / 3.0).clamp(a, b))
            .collect())
    }
}

/// One interpolation condition of a collocation system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    Value(f64),
    Slope(f64),
}

impl Condition {
    pub fn x(&self) -> f64 {
        match *self {
            Condition::Value(x) | Condition::Slope(x) => x,
        }
    }
}

#[derive(Debug, Clone)]
enum Solver {
    Banded(BandedLu),
    /// Unknown j of the cyclic system is coefficient (j + 1) mod N.
    Cyclic(CyclicTridiag),
}

/// A factored collocation system: maps condition data to spline coefficients.
#[derive(Debug, Clone)]
pub struct Collocation {
    knots: KnotVector,
    conditions: Vec<Condition>,
    solver: Solver,
}

impl Collocation {
    /// Non-periodic knots need one condition per coefficient. Periodic knots
    /// take value conditions at the `N_c` distinct break points, in order.
    pub fn new(knots: KnotVector, conditions: Vec<Condition>) -> Result<Self> {
        let n = knots.n_coeffs();
        if conditions.len() != n {
            return Err(Error::ValueCount {
                expected: n,
                got: conditions.len(),
            });
        }
        let solver = if knots.is_periodic() {
            let x = knots.breaks().points().to_vec();
            let mut sub = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut sup = vec![0.0; n];
            for (i, c) in conditions.iter().enumerate() {
                match *c {
                    Condition::Value(xc) if xc == x[i] => {}
                    _ => {
                        return Err(Error::Invalid(
                            "periodic collocation takes values at the break points".into(),
                        ))
                    }
                }
                let (vals, _) = knots.eval_in_cell(i, x[i]);
                sub[i] = vals[0];
                diag[i] = vals[1];
                sup[i] = vals[2];
            }
            Solver::Cyclic(CyclicTridiag::factor(&sub, &diag, &sup)?)
        } else {
            let mut rows = Vec::with_capacity(n);
            let (mut kl, mut ku) = (0usize, 0usize);
            for (r, c) in conditions.iter().enumerate() {
                let (cell, v, d) = knots.eval_both(c.x())?;
                let w = match c {
                    Condition::Value(_) => v,
                    Condition::Slope(_) => d,
                };
                for (j, &wj) in w.iter().enumerate() {
                    if wj != 0.0 {
                        let col = cell + j;
                        if col > r {
                            ku = ku.max(col - r);
                        } else {
                            kl = kl.max(r - col);
                        }
                    }
                }
                rows.push((cell, w));
            }
            let mut m = BandedMatrix::zeros(n, kl, ku);
            for (r, (cell, w)) in rows.iter().enumerate() {
                for (j, &wj) in w.iter().enumerate() {
                    if wj != 0.0 {
                        m.set(r, cell + j, wj);
                    }
                }
            }
            Solver::Banded(m.factor()?)
        };
        Ok(Collocation {
            knots,
            conditions,
            solver,
        })
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    /// Replaces condition data by coefficients, in place.
    pub fn solve_in_place(&self, data: &mut [f64]) {
        match &self.solver {
            Solver::Banded(lu) => lu.solve_in_place(data),
            Solver::Cyclic(cy) => {
                cy.solve_in_place(data);
                data.rotate_right(1);
            }
        }
    }

    pub fn solve(&self, data: &[f64]) -> Result<SplineCoeffs1D> {
        if data.len() != self.len() {
            return Err(Error::ValueCount {
                expected: self.len(),
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut c = data.to_vec();
        self.solve_in_place(&mut c);
        Ok(SplineCoeffs1D {
            coeffs: c,
            knots: self.knots.clone(),
        })
    }
}

/// Boundary closure of a 1D interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    Hermite(f64, f64),
    Periodic,
    GrevillePoints,
}

/// Conditions for a Hermite-closed spline on break points, ordered to keep the band narrow.
pub fn hermite_conditions(breaks: &BreakPoints) -> Vec<Condition> {
    let x = breaks.points();
    let n = breaks.cells();
    let mut c = Vec::with_capacity(n + 3);
    c.push(Condition::Value(x[0]));
    c.push(Condition::Slope(x[0]));
    for &xi in &x[1..n] {
        c.push(Condition::Value(xi));
    }
    c.push(Condition::Slope(x[n]));
    c.push(Condition::Value(x[n]));
    c
}

/// Builds the collocation system matching a [`Closure`] on open (or periodic) knots.
pub fn collocation_for(breaks: &BreakPoints, closure: Closure) -> Result<Collocation> {
    match closure {
        Closure::Periodic => {
            let knots = build_knots(breaks, KnotKind::Periodic);
            let conds = breaks.points()[..breaks.cells()]
                .iter()
                .map(|&x| Condition::Value(x))
                .collect();
            Collocation::new(knots, conds)
        }
        Closure::Hermite(..) => Collocation::new(
            build_knots(breaks, KnotKind::Open),
            hermite_conditions(breaks),
        ),
        Closure::GrevillePoints => {
            let knots = build_knots(breaks, KnotKind::Open);
            let conds = knots
                .greville_points()?
                .into_iter()
                .map(Condition::Value)
                .collect();
            Collocation::new(knots, conds)
        }
    }
}

/// Interpolates `values` under `closure`.
///
/// Hermite takes the `N_c + 1` break-point values, Periodic the `N_c` distinct
/// ones (a duplicated endpoint is rejected), GrevillePoints the `N_c + 3`
/// values at the Greville abscissae.
pub fn interpolate_1d(
    breaks: &BreakPoints,
    values: &[f64],
    closure: Closure,
) -> Result<SplineCoeffs1D> {
    let n = breaks.cells();
    let expected = match closure {
        Closure::Hermite(..) => n + 1,
        Closure::Periodic => n,
        Closure::GrevillePoints => n + 3,
    };
    if values.len() != expected {
        return Err(Error::ValueCount {
            expected,
            got: values.len(),
        });
    }
    let col = collocation_for(breaks, closure)?;
    let data = match closure {
        Closure::Hermite(dl, dr) => {
            let mut d = Vec::with_capacity(n + 3);
            d.push(values[0]);
            d.push(dl);
            d.extend_from_slice(&values[1..n]);
            d.push(dr);
            d.push(values[n]);
            d
        }
        _ => values.to_vec(),
    };
    col.solve(&data)
}

/// Coefficients of a 1D spline together with its knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCoeffs1D {
    pub coeffs: Vec<f64>,
    pub knots: KnotVector,
}

impl SplineCoeffs1D {
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (cell, v) = self.knots.eval_basis(x)?;
        Ok((0..4)
            .map(|j| v[j] * self.coeffs[self.knots.coeff_index(cell, j)])
            .sum())
    }

    pub fn eval_deriv(&self, x: f64) -> Result<f64> {
        let (cell, d) = self.knots.eval_basis_deriv(x)?;
        Ok((0..4)
            .map(|j| d[j] * self.coeffs[self.knots.coeff_index(cell, j)])
            .sum())
    }
}
