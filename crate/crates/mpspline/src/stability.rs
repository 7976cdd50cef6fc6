//! Von Neumann analysis of one backward semi-Lagrangian step for a constant
//! advection on a periodic line split into equal patches.
//!
//! With only C⁰ coupling each patch interpolates its own `N_c + 3` Greville
//! values and the update of patch `p` reads patches `p`, `p+1` and `p+2`. The
//! one-step matrix is block circulant, so its spectrum is the union of the
//! spectra of the Fourier symbols `Â_k`. The C¹ variant replaces the local
//! interpolation by Hermite splines whose interface derivatives come from the
//! exact interface plan.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::line::{LinePlan, LineShape, PlanMode};
use crate::linalg::DenseLu;
use crate::spline::DEGREE;

/// Block-circulant one-step operator. `blocks[j]` couples patch `p` to patch
/// `p + j`; blocks beyond the stored ones are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchOperator {
    pub n_p: usize,
    pub n_c: usize,
    /// Displacement |vΔt| in cell units.
    pub shift: f64,
    pub blocks: Vec<Array2<f64>>,
}

/// `Â_k = Σ_j e^{−2iπkj/N_p} A_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSymbol {
    pub k: usize,
    pub matrix: Array2<Complex64>,
}

/// Greville abscissae of the open cubic knot vector on `n_c` cells of width `h`.
pub fn greville_abscissae(n_c: usize, h: f64) -> Vec<f64> {
    let mut t = vec![0.0; DEGREE];
    t.extend((0..=n_c).map(|i| i as f64));
    t.extend(std::iter::repeat(n_c as f64).take(DEGREE));
    (0..n_c + DEGREE).map(|i| h * (t[i + 1] + t[i + 2] + t[i + 3]) / 3.0).collect()
}

/// Piecewise cubic on `n_c` cells of width `h`, written in the monomial form
/// of each cell and fixed by C² continuity at interior nodes plus `n_c + 3`
/// point conditions.
#[derive(Debug, Clone)]
pub struct DenseLocalSpline {
    n_c: usize,
    h: f64,
    /// Row `4j + m` maps the condition data to the coefficient of `t^m` on
    /// cell `j`, with `t = x/h − j`.
    coeff_map: Array2<f64>,
}

impl DenseLocalSpline {
    /// `conditions` holds `(x, order)` pairs: order 0 fixes a value, order 1 a slope.
    pub fn new(n_c: usize, h: f64, conditions: &[(f64, usize)]) -> Result<Self> {
        if n_c == 0 || !(h > 0.0) {
            return Err(Error::Invalid("need at least one cell of positive width".into()));
        }
        if conditions.len() != n_c + DEGREE {
            return Err(Error::ValueCount { expected: n_c + DEGREE, got: conditions.len() });
        }
        let n = 4 * n_c;
        let mut a = vec![0.0; n * n];
        let mut row = 0;
        for j in 1..n_c {
            // Value, first and second derivative of cell j−1 at t = 1 equal those of cell j at t = 0.
            for d in 0..3 {
                for m in d..4 {
                    a[row * n + 4 * (j - 1) + m] = falling(m, d);
                }
                a[row * n + 4 * j + d] -= falling(d, d);
                row += 1;
            }
        }
        let first = row;
        for &(x, d) in conditions {
            let (j, t) = Self::cell_of(n_c, x / h);
            for m in d..4 {
                a[row * n + 4 * j + m] = falling(m, d) * t.powi((m - d) as i32) / h.powi(d as i32);
            }
            row += 1;
        }
        let inv = DenseLu::factor(n, a)?.inverse();
        let coeff_map = Array2::from_shape_fn((n, n_c + DEGREE), |(r, c)| inv[r * n + first + c]);
        Ok(DenseLocalSpline { n_c, h, coeff_map })
    }

    /// Interpolation at the Greville abscissae (the C⁰ patch closure).
    pub fn greville(n_c: usize, h: f64) -> Result<Self> {
        let c: Vec<_> = greville_abscissae(n_c, h).into_iter().map(|x| (x, 0)).collect();
        Self::new(n_c, h, &c)
    }

    /// Hermite closure: value and slope at both ends, values at interior nodes,
    /// in the order value, slope, interior values, slope, value.
    pub fn hermite(n_c: usize, h: f64) -> Result<Self> {
        let len = n_c as f64 * h;
        let mut c = vec![(0.0, 0), (0.0, 1)];
        c.extend((1..n_c).map(|i| (i as f64 * h, 0)));
        c.extend([(len, 1), (len, 0)]);
        Self::new(n_c, h, &c)
    }

    fn cell_of(n_c: usize, u: f64) -> (usize, f64) {
        let j = (u.floor().max(0.0) as usize).min(n_c - 1);
        (j, u - j as f64)
    }

    /// Weights on the condition data giving the spline at `x`.
    pub fn eval_weights(&self, x: f64) -> Result<Vec<f64>> {
        let len = self.n_c as f64 * self.h;
        if !(x >= -1e-12 * len && x <= len * (1.0 + 1e-12)) {
            return Err(Error::OutOfDomain { x, lo: 0.0, hi: len });
        }
        let (j, t) = Self::cell_of(self.n_c, x / self.h);
        let mut w = vec![0.0; self.n_c + DEGREE];
        for m in 0..4 {
            let tm = t.powi(m as i32);
            for (c, wc) in w.iter_mut().enumerate() {
                *wc += tm * self.coeff_map[[4 * j + m, c]];
            }
        }
        Ok(w)
    }
}

/// m!/(m−d)!.
fn falling(m: usize, d: usize) -> f64 {
    ((m - d + 1)..=m).product::<usize>() as f64
}

/// C⁰ blocks `A_0, A_1, A_2` on cells of unit width.
pub fn build_c0_blocks(n_c: usize, shift: f64) -> Result<PatchOperator> {
    build_c0_blocks_scaled(n_c, shift, 1.0)
}

/// As [`build_c0_blocks`] on cells of width `h`; `shift` stays in cell units.
pub fn build_c0_blocks_scaled(n_c: usize, shift: f64, h: f64) -> Result<PatchOperator> {
    if !(shift >= 0.0 && shift < n_c as f64) {
        return Err(Error::Invalid(format!("shift {shift} must lie in [0, {n_c}) cells")));
    }
    let interp = DenseLocalSpline::greville(n_c, h)?;
    let nodes = greville_abscissae(n_c, h);
    let len = n_c as f64 * h;
    let m = n_c + 2;
    let mut blocks = vec![Array2::zeros((m, m)); 3];
    for (i, &x) in nodes[..m].iter().enumerate() {
        // The characteristic ending on x starts at x + shift (v < 0).
        let y = x + shift * h;
        let (src, local) = if y <= len { (0, y) } else { (1, y - len) };
        let w = interp.eval_weights(local)?;
        for (c, wc) in w[..m].iter().enumerate() {
            blocks[src][[i, c]] += wc;
        }
        blocks[src + 1][[i, 0]] += w[m];
    }
    Ok(PatchOperator { n_p: 0, n_c, shift, blocks })
}

/// One-step operator with C¹ coupling on cells of unit width: Hermite local
/// splines on the break points, with interface derivatives from the exact
/// plan of the periodic line. Each patch stores its first `n_c` node values.
pub fn build_c1_operator(n_p: usize, n_c: usize, shift: f64) -> Result<PatchOperator> {
    if n_p < 2 || n_c == 0 {
        return Err(Error::Invalid("need at least two patches of one cell".into()));
    }
    if !(shift >= 0.0 && shift < n_c as f64) {
        return Err(Error::Invalid(format!("shift {shift} must lie in [0, {n_c}) cells")));
    }
    let n = n_p * n_c;
    let nodes: Vec<f64> = (0..=n).map(|i| i as f64).collect();
    let splits: Vec<usize> = (0..n_p).map(|p| p * n_c).collect();
    let plan = LinePlan::new(&nodes, LineShape::Periodic, &splits, PlanMode::Exact)?;
    let local = DenseLocalSpline::hermite(n_c, 1.0)?;
    let mut blocks = vec![Array2::zeros((n_c, n_c)); n_p];
    for col in 0..n {
        let values: Vec<f64> = (0..n).map(|i| if i == col { 1.0 } else { 0.0 }).collect();
        let d = plan.solve(&values, [0.0; 2], [0.0; 2])?;
        for i in 0..n_c {
            let y = i as f64 + shift;
            let q = (y / n_c as f64).floor() as usize;
            let w = local.eval_weights(y - (q * n_c) as f64)?;
            let base = q * n_c;
            let mut data = vec![values[base % n], d[q % n_p]];
            data.extend((1..n_c).map(|m| values[(base + m) % n]));
            data.extend([d[(q + 1) % n_p], values[(base + n_c) % n]]);
            blocks[col / n_c][[i, col % n_c]] = w.iter().zip(&data).map(|(a, b)| a * b).sum();
        }
    }
    Ok(PatchOperator { n_p, n_c, shift, blocks })
}

impl PatchOperator {
    /// Sets the patch count used by the Fourier transform.
    pub fn with_patches(mut self, n_p: usize) -> Self {
        self.n_p = n_p;
        self
    }

    pub fn symbol(&self, k: usize) -> Result<FourierSymbol> {
        fourier_symbol(&self.blocks, k, self.n_p)
    }

    /// Largest spectral radius over all modes, with the mode attaining it.
    pub fn max_radius(&self) -> Result<(f64, usize)> {
        let mut best = (f64::NEG_INFINITY, 0);
        for k in 0..self.n_p {
            let r = spectral_radius(&self.symbol(k)?.matrix)?;
            if r > best.0 {
                best = (r, k);
            }
        }
        Ok(best)
    }

    /// The full `N_p` × `N_p` block matrix.
    pub fn dense(&self) -> Array2<f64> {
        let m = self.blocks[0].nrows();
        let n = self.n_p * m;
        let mut a = Array2::zeros((n, n));
        for p in 0..self.n_p {
            for (j, b) in self.blocks.iter().enumerate() {
                let q = (p + j) % self.n_p;
                for r in 0..m {
                    for c in 0..m {
                        a[[p * m + r, q * m + c]] += b[[r, c]];
                    }
                }
            }
        }
        a
    }
}

pub fn fourier_symbol(blocks: &[Array2<f64>], k: usize, n_p: usize) -> Result<FourierSymbol> {
    if k >= n_p {
        return Err(Error::Invalid(format!("mode {k} out of range for {n_p} patches")));
    }
    let m = blocks.first().map_or(0, |b| b.nrows());
    let mut matrix = Array2::zeros((m, m));
    for (j, b) in blocks.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -2.0 * PI * ((k * j) % n_p) as f64 / n_p as f64);
        matrix.zip_mut_with(b, |s, &v| *s += phase * v);
    }
    Ok(FourierSymbol { k, matrix })
}

pub fn spectral_radius(a: &Array2<Complex64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Eigenvalues of a small dense complex matrix: Householder reduction to
/// Hessenberg form followed by single-shift QR with deflation.
pub fn eigenvalues(a: &Array2<Complex64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Invalid("eigenvalues of a non-square matrix".into()));
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eig);
    }
    let mut hi = n - 1;
    let mut iter = 0;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[[l - 1, l - 1]].norm() + h[[l, l]].norm();
            if h[[l, l - 1]].norm() <= f64::EPSILON * s.max(f64::MIN_POSITIVE) {
                h[[l, l - 1]] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[[hi, hi]];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 60 * n {
            return Err(Error::NoConvergence);
        }
        let mu = if iter % 11 == 0 {
            // Exceptional shift to break cycles.
            h[[hi, hi]] + Complex64::new(h[[hi, hi - 1]].norm(), 0.0)
        } else {
            wilkinson(h[[hi - 1, hi - 1]], h[[hi - 1, hi]], h[[hi, hi - 1]], h[[hi, hi]])
        };
        qr_step(&mut h, l, hi, mu);
    }
    eig[0] = h[[0, 0]];
    Ok(eig)
}

fn hessenberg(h: &mut Array2<Complex64>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| h[[i, k]].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[[k + 1, k]];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[[i, k]]).collect();
        v[0] += phase * norm;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if vn == 0.0 {
            continue;
        }
        // H ← (I − 2vvᴴ/vᴴv) H (I − 2vvᴴ/vᴴv)
        for c in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * h[[k + 1 + i, c]]).sum();
            let f = dot * 2.0 / vn;
            for (i, vi) in v.iter().enumerate() {
                h[[k + 1 + i, c]] -= vi * f;
            }
        }
        for r in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(i, vi)| h[[r, k + 1 + i]] * vi).sum();
            let f = dot * 2.0 / vn;
            for (i, vi) in v.iter().enumerate() {
                h[[r, k + 1 + i]] -= f * vi.conj();
            }
        }
        for i in k + 2..n {
            h[[i, k]] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Eigenvalue of [[a, b], [c, d]] closest to `d`.
fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit shifted QR sweep on the active block `lo..=hi` of a Hessenberg matrix.
fn qr_step(h: &mut Array2<Complex64>, lo: usize, hi: usize, mu: Complex64) {
    for i in lo..=hi {
        h[[i, i]] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (a, b) = (h[[k, k]], h[[k + 1, k]]);
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 { (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)) } else { (a / r, b / r) };
        // Rows k, k+1 ← G [row k; row k+1] with G = [[c̄, s̄], [−s, c]].
        for col in k..=hi {
            let (x, y) = (h[[k, col]], h[[k + 1, col]]);
            h[[k, col]] = c.conj() * x + s.conj() * y;
            h[[k + 1, col]] = -s * x + c * y;
        }
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        // Columns k, k+1 ← [col k, col k+1] Gᴴ.
        for row in lo..=(k + 1).min(hi) {
            let (x, y) = (h[[row, k]], h[[row, k + 1]]);
            h[[row, k]] = x * c + y * s;
            h[[row, k + 1]] = -x * s.conj() + y * c.conj();
        }
    }
    for i in lo..=hi {
        h[[i, i]] += mu;
    }
}

/// Radius of every (shift, mode) pair of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub shift: f64,
    pub k: usize,
    pub radius: f64,
}

/// Scans shifts for the C⁰ operator (`c1 = false`) or its C¹ contrast.
pub fn scan(n_p: usize, n_c: usize, shifts: &[f64], c1: bool) -> Result<Vec<ScanPoint>> {
    let mut out = Vec::with_capacity(shifts.len() * n_p);
    for &shift in shifts {
        let op = if c1 { build_c1_operator(n_p, n_c, shift)? } else { build_c0_blocks(n_c, shift)?.with_patches(n_p) };
        for k in 0..n_p {
            out.push(ScanPoint { shift, k, radius: spectral_radius(&op.symbol(k)?.matrix)? });
        }
    }
    Ok(out)
}
