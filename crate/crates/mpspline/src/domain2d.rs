//! Two-dimensional multipatch layouts on a logical (r, θ) rectangle.
//!
//! The domain is cut into radial bands. Each band carries its own r grid and is
//! cut along θ into patches with their own θ grids. Neighbouring bands may have
//! different θ grids (non-conforming interfaces) or different θ cuts (T-joints).

use ndarray::Array2;

use crate::domain1d::{same_coord, Boundary};
use crate::error::{Error, Result};
use crate::line::{LineEnd, LineShape};
use crate::spline::{BreakPoints, SplineCoeffs1D};
use crate::spline2d::{Axis, AxisClosure, EdgeData, EndKind, Row, Side, Spline2D, TensorInterpolator};

#[derive(Debug, Clone)]
pub struct Band {
    pub r: BreakPoints,
    pub theta: Vec<BreakPoints>,
}

/// A θ value point of a band, possibly shared by two patches.
#[derive(Debug, Clone)]
pub struct Column {
    pub theta: f64,
    /// (patch, local θ index) pairs holding this point.
    pub owners: Vec<(usize, usize)>,
}

/// Precomputed per-band θ structure.
#[derive(Debug, Clone)]
pub struct BandTheta {
    pub columns: Vec<Column>,
    /// Merged θ break points (for periodic domains the last one closes the period).
    pub nodes: Vec<f64>,
    /// Column of each θ-line node (periodic: the last node is not listed).
    pub node_col: Vec<usize>,
    pub extra_col: [Option<usize>; 2],
    /// θ-line node index of each patch joint.
    pub splits: Vec<usize>,
    /// For each split: (left patch, right patch).
    pub split_patches: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct BandR {
    pub axis: Axis,
    pub node_rows: Vec<usize>,
    pub extra_rows: [Option<usize>; 2],
}

#[derive(Debug, Clone)]
pub struct Domain2D {
    bands: Vec<Band>,
    r_boundary: Boundary,
    th_boundary: Boundary,
    band_r: Vec<BandR>,
    band_th: Vec<BandTheta>,
    interps: Vec<Vec<TensorInterpolator>>,
    th0: f64,
    th1: f64,
}

/// Values and Hermite data on every patch, indexed `[band][patch]`.
#[derive(Debug, Clone)]
pub struct PatchField {
    pub values: Vec<Vec<Array2<f64>>>,
    pub edges: Vec<Vec<EdgeData>>,
    pub time: f64,
}

impl Domain2D {
    pub fn new(bands: Vec<Band>, r_boundary: Boundary, th_boundary: Boundary) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::Layout("no bands".into()));
        }
        if r_boundary == Boundary::Periodic {
            return Err(Error::Layout("the r direction cannot be periodic".into()));
        }
        let th0 = bands[0].theta.first().ok_or_else(|| Error::Layout("band without patches".into()))?.first();
        let th1 = bands[0].theta.last().unwrap().last();
        let r_scale = bands.last().unwrap().r.last().abs().max(1.0);
        let t_scale = th1.abs().max(th0.abs()).max(1.0);
        for (b, band) in bands.iter().enumerate() {
            if band.theta.is_empty() {
                return Err(Error::Layout(format!("band {b} has no patches")));
            }
            if b > 0 && !same_coord(bands[b - 1].r.last(), band.r.first(), r_scale) {
                return Err(Error::Layout(format!("band {b} does not start where band {} ends", b - 1)));
            }
            if !same_coord(band.theta[0].first(), th0, t_scale)
                || !same_coord(band.theta.last().unwrap().last(), th1, t_scale)
            {
                return Err(Error::Layout(format!("band {b} does not span the common θ range")));
            }
            for w in band.theta.windows(2) {
                if !same_coord(w[0].last(), w[1].first(), t_scale) {
                    return Err(Error::Layout(format!("θ patches of band {b} are not contiguous")));
                }
            }
        }
        let nb = bands.len();
        let mut band_r = Vec::with_capacity(nb);
        let mut band_th = Vec::with_capacity(nb);
        let mut interps = Vec::with_capacity(nb);
        let outer_r = if r_boundary == Boundary::GrevilleExtra { EndKind::Extra } else { EndKind::Slope };
        for (b, band) in bands.iter().enumerate() {
            let lo = if b == 0 { outer_r } else { EndKind::Slope };
            let hi = if b + 1 == nb { outer_r } else { EndKind::Slope };
            let axis = Axis::with_ends(&band.r, lo, hi)?;
            let n = band.r.cells();
            let mut node_rows: Vec<usize> = (0..=n).collect();
            let mut extra_rows = [None, None];
            if lo == EndKind::Extra {
                extra_rows[0] = Some(1);
                for r in node_rows.iter_mut().skip(1) {
                    *r += 1;
                }
            }
            if hi == EndKind::Extra {
                let last = node_rows[n];
                extra_rows[1] = Some(last);
                node_rows[n] = last + 1;
            }
            band_r.push(BandR { axis: axis.clone(), node_rows, extra_rows });

            let th_axes = Self::theta_axes(band, th_boundary)?;
            band_th.push(Self::build_band_theta(band, &th_axes, th_boundary, th1 - th0, t_scale)?);
            interps.push(th_axes.into_iter().map(|t| TensorInterpolator::new(axis.clone(), t)).collect());
        }
        Ok(Domain2D { bands, r_boundary, th_boundary, band_r, band_th, interps, th0, th1 })
    }

    /// Tensor layout: one band per r-range, all bands sharing the same θ patches.
    pub fn tensor(r: Vec<BreakPoints>, theta: Vec<BreakPoints>, r_boundary: Boundary, th_boundary: Boundary) -> Result<Self> {
        let bands = r.into_iter().map(|r| Band { r, theta: theta.clone() }).collect();
        Self::new(bands, r_boundary, th_boundary)
    }

    fn theta_axes(band: &Band, th_boundary: Boundary) -> Result<Vec<Axis>> {
        let np = band.theta.len();
        match th_boundary {
            Boundary::Periodic if np == 1 => Ok(vec![Axis::from_closure(&band.theta[0], AxisClosure::Periodic)?]),
            Boundary::Periodic => band
                .theta
                .iter()
                .map(|t| Axis::with_ends(t, EndKind::Slope, EndKind::Slope))
                .collect(),
            Boundary::GrevilleExtra => band
                .theta
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    let lo = if j == 0 { EndKind::Extra } else { EndKind::Slope };
                    let hi = if j + 1 == np { EndKind::Extra } else { EndKind::Slope };
                    Axis::with_ends(t, lo, hi)
                })
                .collect(),
            _ => Err(Error::Layout("θ boundary must be Periodic or GrevilleExtra".into())),
        }
    }

    fn build_band_theta(band: &Band, axes: &[Axis], th_boundary: Boundary, period: f64, scale: f64) -> Result<BandTheta> {
        let periodic = th_boundary == Boundary::Periodic;
        let th0 = band.theta[0].first();
        let mut pts: Vec<(f64, usize, usize)> = Vec::new();
        for (j, a) in axes.iter().enumerate() {
            for (i, &t) in a.points().iter().enumerate() {
                let t = if periodic && same_coord(t, th0 + period, scale) { th0 } else { t };
                pts.push((t, j, i));
            }
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut columns: Vec<Column> = Vec::new();
        for (t, j, i) in pts {
            match columns.last_mut() {
                Some(c) if same_coord(c.theta, t, scale) => c.owners.push((j, i)),
                _ => columns.push(Column { theta: t, owners: vec![(j, i)] }),
            }
        }
        let mut nodes = vec![th0];
        for t in &band.theta {
            nodes.extend_from_slice(&t.points()[1..]);
        }
        let find = |t: f64| columns.iter().position(|c| same_coord(c.theta, t, scale));
        let m = nodes.len() - 1;
        let count = if periodic { m } else { m + 1 };
        let node_col = (0..count)
            .map(|k| find(nodes[k]).ok_or_else(|| Error::Layout("θ node without column".into())))
            .collect::<Result<Vec<_>>>()?;
        let mut extra_col = [None, None];
        if th_boundary == Boundary::GrevilleExtra {
            let first = &band.theta[0];
            let last = band.theta.last().unwrap();
            extra_col[0] = find(first.first() + first.cell_width(0) / 3.0);
            extra_col[1] = find(last.last() - last.cell_width(last.cells() - 1) / 3.0);
        }
        let np = band.theta.len();
        let mut splits = Vec::new();
        let mut split_patches = Vec::new();
        if periodic && np > 1 {
            splits.push(0);
            split_patches.push((np - 1, 0));
        }
        let mut off = 0;
        for j in 0..np - 1 {
            off += band.theta[j].cells();
            splits.push(off);
            split_patches.push((j, j + 1));
        }
        Ok(BandTheta { columns, nodes, node_col, extra_col, splits, split_patches })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn n_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn r_boundary(&self) -> Boundary {
        self.r_boundary
    }

    pub fn th_boundary(&self) -> Boundary {
        self.th_boundary
    }

    pub fn band_r(&self, b: usize) -> &BandR {
        &self.band_r[b]
    }

    pub fn band_theta(&self, b: usize) -> &BandTheta {
        &self.band_th[b]
    }

    pub fn interpolator(&self, b: usize, j: usize) -> &TensorInterpolator {
        &self.interps[b][j]
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.th0, self.th1)
    }

    pub fn r_range(&self) -> (f64, f64) {
        (self.bands[0].r.first(), self.bands.last().unwrap().r.last())
    }

    pub fn theta_shape(&self) -> LineShape {
        match self.th_boundary {
            Boundary::Periodic => LineShape::Periodic,
            _ => LineShape::Open([LineEnd::Greville; 2]),
        }
    }

    pub fn r_end(&self) -> LineEnd {
        match self.r_boundary {
            Boundary::GrevilleExtra => LineEnd::Greville,
            _ => LineEnd::Hermite,
        }
    }

    /// True when every band has the same θ patches.
    pub fn is_tensor(&self) -> bool {
        let t0 = &self.bands[0].theta;
        self.bands.iter().all(|b| {
            b.theta.len() == t0.len()
                && b.theta.iter().zip(t0).all(|(x, y)| {
                    x.cells() == y.cells() && x.points().iter().zip(y.points()).all(|(p, q)| same_coord(*p, *q, 1.0))
                })
        })
    }

    /// True when neighbouring bands share all θ value points.
    pub fn is_conforming(&self) -> bool {
        (0..self.bands.len() - 1).all(|b| {
            let (lo, hi) = (&self.band_th[b].columns, &self.band_th[b + 1].columns);
            lo.len() == hi.len() && lo.iter().zip(hi).all(|(x, y)| same_coord(x.theta, y.theta, 1.0))
        })
    }

    pub fn total_cells(&self) -> (usize, usize) {
        let nr = self.bands.iter().map(|b| b.r.cells()).sum();
        let nt = self.bands.iter().map(|b| b.theta.iter().map(|t| t.cells()).sum::<usize>()).max().unwrap();
        (nr, nt)
    }

    /// Wraps θ into the domain range (periodic) or checks it.
    pub fn wrap_theta(&self, th: f64) -> Result<f64> {
        if self.th_boundary == Boundary::Periodic {
            let p = self.th1 - self.th0;
            let mut t = self.th0 + (th - self.th0).rem_euclid(p);
            if t >= self.th1 {
                t = self.th0;
            }
            Ok(t)
        } else if th < self.th0 - 1e-12 || th > self.th1 + 1e-12 {
            Err(Error::OutOfDomain { x: th, lo: self.th0, hi: self.th1 })
        } else {
            Ok(th.clamp(self.th0, self.th1))
        }
    }

    /// Patch holding a logical point; points on an interface go to the outer/right patch.
    pub fn locate_logical(&self, r: f64, th: f64) -> Result<(usize, usize, f64, f64)> {
        let (r0, r1) = self.r_range();
        if r < r0 - 1e-12 || r > r1 + 1e-12 {
            return Err(Error::OutOfDomain { x: r, lo: r0, hi: r1 });
        }
        let r = r.clamp(r0, r1);
        let th = self.wrap_theta(th)?;
        let b = (0..self.bands.len()).rev().find(|&b| r >= self.bands[b].r.first()).unwrap_or(0);
        let pats = &self.bands[b].theta;
        let j = (0..pats.len()).rev().find(|&j| th >= pats[j].first()).unwrap_or(0);
        Ok((b, j, r, th))
    }

    /// Allocates a field with values sampled from `f` and zeroed Hermite data.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> PatchField {
        let mut values = Vec::with_capacity(self.bands.len());
        let mut edges = Vec::with_capacity(self.bands.len());
        for row in &self.interps {
            let mut vb = Vec::with_capacity(row.len());
            let mut eb = Vec::with_capacity(row.len());
            for t in row {
                let (rp, tp) = (t.r.points(), t.th.points());
                let v = Array2::from_shape_fn((rp.len(), tp.len()), |(i, k)| f(rp[i], tp[k]));
                vb.push(v);
                eb.push(EdgeData {
                    dr: [vec![0.0; tp.len()], vec![0.0; tp.len()]],
                    dth: [vec![0.0; rp.len()], vec![0.0; rp.len()]],
                    cross: [[0.0; 2]; 2],
                });
            }
            values.push(vb);
            edges.push(eb);
        }
        PatchField { values, edges, time: 0.0 }
    }

    /// Writes `g(r, θ)` as the r-derivative on the outer r boundaries.
    pub fn set_r_boundary_slopes(&self, field: &mut PatchField, g: impl Fn(f64, f64) -> f64) {
        let nb = self.bands.len();
        for (b, side) in [(0, Side::Lo), (nb - 1, Side::Hi)] {
            let r = if side == Side::Lo { self.bands[b].r.first() } else { self.bands[b].r.last() };
            for (j, t) in self.interps[b].iter().enumerate() {
                for (k, &th) in t.th.points().iter().enumerate() {
                    field.edges[b][j].dr[side.index()][k] = g(r, th);
                }
            }
        }
    }

    /// Copies values of points shared by several patches from their first owner.
    pub fn sync_shared(&self, field: &mut PatchField) {
        for (b, bt) in self.band_th.iter().enumerate() {
            let rows = self.band_r[b].axis.points().len();
            for c in &bt.columns {
                let (j0, k0) = c.owners[0];
                for &(j, k) in &c.owners[1..] {
                    for i in 0..rows {
                        field.values[b][j][[i, k]] = field.values[b][j0][[i, k0]];
                    }
                }
            }
        }
        for b in 1..self.bands.len() {
            let top = self.band_r[b - 1].axis.points().len() - 1;
            for c in &self.band_th[b].columns {
                if let Some(cl) = self.find_column(b - 1, c.theta) {
                    let (jl, kl) = self.band_th[b - 1].columns[cl].owners[0];
                    let v = field.values[b - 1][jl][[top, kl]];
                    for &(j, k) in &c.owners {
                        field.values[b][j][[0, k]] = v;
                    }
                }
            }
        }
    }

    pub fn find_column(&self, b: usize, theta: f64) -> Option<usize> {
        let cols = &self.band_th[b].columns;
        let i = cols.partition_point(|c| c.theta < theta - 1e-12 * theta.abs().max(1.0));
        (i < cols.len() && same_coord(cols[i].theta, theta, 1.0)).then_some(i)
    }

    pub fn build_local_splines(&self, field: &PatchField) -> Result<Vec<Vec<Spline2D>>> {
        self.interps
            .iter()
            .enumerate()
            .map(|(b, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, t)| t.interpolate(&field.values[b][j], &field.edges[b][j]))
                    .collect()
            })
            .collect()
    }

    /// The single spline on the merged grid of a conforming layout.
    pub fn equivalent_global_spline(&self, field: &PatchField) -> Result<Spline2D> {
        if !self.is_conforming() {
            return Err(Error::Layout("the equivalent global spline needs a conforming layout".into()));
        }
        let mut rb = vec![self.bands[0].r.first()];
        for b in &self.bands {
            rb.extend_from_slice(&b.r.points()[1..]);
        }
        let bt0 = &self.band_th[0];
        let r_breaks = BreakPoints::new(rb)?;
        let th_breaks = BreakPoints::new(bt0.nodes.clone())?;
        let outer = if self.r_boundary == Boundary::GrevilleExtra { EndKind::Extra } else { EndKind::Slope };
        let r_axis = Axis::with_ends(&r_breaks, outer, outer)?;
        let th_axis = match self.th_boundary {
            Boundary::Periodic => Axis::periodic(&th_breaks)?,
            _ => Axis::with_ends(&th_breaks, EndKind::Extra, EndKind::Extra)?,
        };
        let interp = TensorInterpolator::new(r_axis, th_axis);
        // global r value point -> (band, local row)
        let mut rmap = Vec::new();
        for (b, br) in self.band_r.iter().enumerate() {
            let n = br.axis.points().len();
            let start = if b == 0 { 0 } else { 1 };
            for i in start..n {
                rmap.push((b, i));
            }
        }
        let tpts = interp.th.points().to_vec();
        let nb = self.bands.len();
        let values = Array2::from_shape_fn((rmap.len(), tpts.len()), |(i, k)| {
            let (b, row) = rmap[i];
            let c = self.find_column(b, tpts[k]).expect("conforming column");
            let (j, kk) = self.band_th[b].columns[c].owners[0];
            field.values[b][j][[row, kk]]
        });
        let mut edges = EdgeData { dr: [vec![0.0; tpts.len()], vec![0.0; tpts.len()]], ..Default::default() };
        if self.r_boundary == Boundary::HermiteKnown {
            for (s, b) in [(0usize, 0usize), (1, nb - 1)] {
                for (k, &t) in tpts.iter().enumerate() {
                    let c = self.find_column(b, t).expect("conforming column");
                    let (j, kk) = self.band_th[b].columns[c].owners[0];
                    edges.dr[s][k] = field.edges[b][j].dr[s][kk];
                }
            }
        }
        interp.interpolate(&values, &edges)
    }

    /// Column of r value points of band `b`, one θ column `c`.
    pub fn column_values(&self, field: &PatchField, b: usize, c: usize) -> Vec<f64> {
        let (j, k) = self.band_th[b].columns[c].owners[0];
        field.values[b][j].column(k).to_vec()
    }
}

/// Set of local splines with piecewise evaluation.
#[derive(Debug, Clone)]
pub struct LocalSplines<'a> {
    pub domain: &'a Domain2D,
    pub splines: Vec<Vec<Spline2D>>,
}

impl<'a> LocalSplines<'a> {
    pub fn new(domain: &'a Domain2D, field: &PatchField) -> Result<Self> {
        Ok(LocalSplines { domain, splines: domain.build_local_splines(field)? })
    }

    pub fn eval(&self, r: f64, th: f64) -> Result<f64> {
        let (b, j, r, th) = self.domain.locate_logical(r, th)?;
        self.splines[b][j].eval(r, th)
    }

    pub fn eval_dr(&self, r: f64, th: f64) -> Result<f64> {
        let (b, j, r, th) = self.domain.locate_logical(r, th)?;
        self.splines[b][j].eval_dr(r, th)
    }

    pub fn eval_dth(&self, r: f64, th: f64) -> Result<f64> {
        let (b, j, r, th) = self.domain.locate_logical(r, th)?;
        self.splines[b][j].eval_dth(r, th)
    }
}

/// Interpolates a trace along θ on one patch from values at its θ points and
/// slopes at its ends.
pub(crate) fn theta_trace(axis: &Axis, values: &[f64], slopes: [f64; 2]) -> Result<SplineCoeffs1D> {
    let data: Vec<f64> = axis
        .rows()
        .iter()
        .map(|r| match *r {
            Row::Value(i) => values[i],
            Row::Slope(s) => slopes[s.index()],
        })
        .collect();
    axis.collocation().solve(&data)
}
