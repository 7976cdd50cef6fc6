//! Coefficient calculus linking the derivative of a cubic spline at one node to
//! function values and to derivatives further away.
//!
//! Everything here is pure arithmetic on cell widths. The three-point relation
//! `s'_i = γ_i·f + α_i s'_{i+1} + β_i s'_{i-1}` comes from matching second
//! derivatives of the two Hermite cubics meeting at `x_i`. Chaining it node by
//! node (forward, then backward) yields
//! `s'_i = Σ_k ω_k f_{i+k} + a s'_{i+n} + b s'_{i-m}`.

use crate::error::{Error, Result};

/// Cubic Hermite basis on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteBasisEval {
    pub h0: f64,
    pub h1: f64,
    pub k0: f64,
    pub k1: f64,
}

pub fn hermite_basis(t: f64) -> HermiteBasisEval {
    let u = 1.0 - t;
    HermiteBasisEval {
        h0: u * u * (1.0 + 2.0 * t),
        h1: t * t * (3.0 - 2.0 * t),
        k0: u * u * t,
        k1: t * t * (t - 1.0),
    }
}

/// α, β and the γ weights on (f_{i-1}, f_i, f_{i+1}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePointCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_weights: [f64; 3],
}

pub fn three_point(dx_left: f64, dx_right: f64) -> Result<ThreePointCoeffs> {
    if !(dx_left > 0.0 && dx_right > 0.0) || !dx_left.is_finite() || !dx_right.is_finite() {
        return Err(Error::Geometry(format!(
            "cell lengths must be positive, got {dx_left} and {dx_right}"
        )));
    }
    let (l, r) = (dx_left, dx_right);
    let s = l + r;
    let g = 1.5 / s;
    Ok(ThreePointCoeffs {
        alpha: -0.5 * l / s,
        beta: -0.5 * r / s,
        gamma_weights: [-g * r / l, g * (r / l - l / r), g * l / r],
    })
}

/// Which boundary cell carries the extra interpolation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureSide {
    /// Extra point in `[x_{i-1}, x_i]`; `s'_{i-1}` is eliminated.
    Left,
    /// Extra point in `[x_i, x_{i+1}]`; `s'_{i+1}` is eliminated.
    Right,
}

/// Three-point relation with the derivative beyond the domain eliminated.
///
/// Left variant weights apply to (f_{i-1}, f_*, f_i, f_{i+1}); right variant
/// weights to (f_{i-1}, f_i, f_*, f_{i+1}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrevilleClosureCoeffs {
    pub side: ClosureSide,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub gamma_star_weights: [f64; 4],
}

pub fn greville_closure(
    side: ClosureSide,
    tp: &ThreePointCoeffs,
    t_star: f64,
    dx: f64,
) -> Result<GrevilleClosureCoeffs> {
    if !(t_star > 0.0 && t_star < 1.0) || !(dx > 0.0) {
        return Err(Error::Geometry(format!(
            "extra point parameter {t_star} not in (0,1)"
        )));
    }
    let hb = hermite_basis(t_star);
    let [gm, g0, gp] = tp.gamma_weights;
    match side {
        ClosureSide::Left => {
            let den = 1.0 + tp.beta * hb.k1 / hb.k0;
            assert!(den.abs() > 1e-14, "degenerate left closure");
            let q = tp.beta / (dx * hb.k0);
            Ok(GrevilleClosureCoeffs {
                side,
                alpha_star: tp.alpha / den,
                beta_star: 0.0,
                gamma_star_weights: [
                    (gm - q * hb.h0) / den,
                    q / den,
                    (g0 - q * hb.h1) / den,
                    gp / den,
                ],
            })
        }
        ClosureSide::Right => {
            let den = 1.0 + tp.alpha * hb.k0 / hb.k1;
            assert!(den.abs() > 1e-14, "degenerate right closure");
            let q = tp.alpha / (dx * hb.k1);
            Ok(GrevilleClosureCoeffs {
                side,
                alpha_star: 0.0,
                beta_star: tp.beta / den,
                gamma_star_weights: [
                    gm / den,
                    (g0 - q * hb.h0) / den,
                    q / den,
                    (gp - q * hb.h1) / den,
                ],
            })
        }
    }
}

/// Sparse-by-range weight vector over node offsets plus the two extra points
/// (slot 0 near the left domain end, slot 1 near the right one).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Weights {
    lo: isize,
    w: Vec<f64>,
    pub extra: [f64; 2],
}

impl Weights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lo(&self) -> isize {
        self.lo
    }

    pub fn hi(&self) -> isize {
        self.lo + self.w.len() as isize - 1
    }

    pub fn get(&self, k: isize) -> f64 {
        if k < self.lo || k > self.hi() {
            0.0
        } else {
            self.w[(k - self.lo) as usize]
        }
    }

    pub fn add(&mut self, k: isize, v: f64) {
        if self.w.is_empty() {
            self.lo = k;
            self.w.push(v);
            return;
        }
        if k < self.lo {
            let grow = (self.lo - k) as usize;
            let mut nw = vec![0.0; grow];
            nw.extend_from_slice(&self.w);
            self.w = nw;
            self.lo = k;
        } else if k > self.hi() {
            let grow = (k - self.hi()) as usize;
            self.w.extend(std::iter::repeat(0.0).take(grow));
        }
        let ix = (k - self.lo) as usize;
        self.w[ix] += v;
    }

    /// self += s * other
    pub fn axpy(&mut self, s: f64, other: &Weights) {
        if s == 0.0 {
            return;
        }
        for (j, &v) in other.w.iter().enumerate() {
            self.add(other.lo + j as isize, s * v);
        }
        self.extra[0] += s * other.extra[0];
        self.extra[1] += s * other.extra[1];
    }

    pub fn scale(&mut self, s: f64) {
        self.w.iter_mut().for_each(|v| *v *= s);
        self.extra[0] *= s;
        self.extra[1] *= s;
    }

    /// Dense copy over `lo..=hi` (zero padded).
    pub fn dense(&self, lo: isize, hi: isize) -> Vec<f64> {
        (lo..=hi).map(|k| self.get(k)).collect()
    }
}

/// Relation at one node: `s'_j = w·f + alpha s'_{j+1} + beta s'_{j-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRelation {
    pub alpha: f64,
    pub beta: f64,
    pub w: Weights,
}

impl NodeRelation {
    /// Plain three-point relation at offset `j`.
    pub fn interior(j: isize, dx_left: f64, dx_right: f64) -> Result<Self> {
        let tp = three_point(dx_left, dx_right)?;
        let mut w = Weights::new();
        for (q, g) in tp.gamma_weights.iter().enumerate() {
            w.add(j - 1 + q as isize, *g);
        }
        Ok(NodeRelation {
            alpha: tp.alpha,
            beta: tp.beta,
            w,
        })
    }

    /// Relation at offset `j` next to a domain end closed by an extra point.
    pub fn closure(
        j: isize,
        dx_left: f64,
        dx_right: f64,
        side: ClosureSide,
        t_star: f64,
    ) -> Result<Self> {
        let tp = three_point(dx_left, dx_right)?;
        let dx = match side {
            ClosureSide::Left => dx_left,
            ClosureSide::Right => dx_right,
        };
        let g = greville_closure(side, &tp, t_star, dx)?;
        let mut w = Weights::new();
        match side {
            ClosureSide::Left => {
                w.add(j - 1, g.gamma_star_weights[0]);
                w.extra[0] = g.gamma_star_weights[1];
                w.add(j, g.gamma_star_weights[2]);
                w.add(j + 1, g.gamma_star_weights[3]);
            }
            ClosureSide::Right => {
                w.add(j - 1, g.gamma_star_weights[0]);
                w.add(j, g.gamma_star_weights[1]);
                w.extra[1] = g.gamma_star_weights[2];
                w.add(j + 1, g.gamma_star_weights[3]);
            }
        }
        Ok(NodeRelation {
            alpha: g.alpha_star,
            beta: g.beta_star,
            w,
        })
    }
}

/// `s'_i = c·f + a s'_{i+n} + b s'_{i-m}` during the recursions.
#[derive(Debug, Clone, PartialEq)]
pub struct Extended {
    pub c: Weights,
    pub a: f64,
    pub b: f64,
}

fn guard(den: f64) -> Result<f64> {
    if den.abs() < 1e-300 || !den.is_finite() {
        return Err(Error::Geometry("recursion denominator vanished".into()));
    }
    Ok(den)
}

/// Chains the relations at offsets 0..n-1 (in order) into the span (1, n).
///
/// The ratio `a_n / a_{n-1}` is carried directly so that long spans do not
/// divide two underflowing numbers.
pub fn extend_forward(rels: &[NodeRelation]) -> Result<Extended> {
    let first = rels
        .first()
        .ok_or_else(|| Error::Invalid("empty relation list".into()))?;
    let mut prev = Extended {
        c: Weights::new(),
        a: 1.0,
        b: 0.0,
    };
    let mut cur = Extended {
        c: first.w.clone(),
        a: first.alpha,
        b: first.beta,
    };
    let mut rho = first.alpha;
    for r in &rels[1..] {
        let den = guard(1.0 - r.beta * rho)?;
        let k = r.beta * rho;
        let mut c = cur.c.clone();
        c.axpy(cur.a, &r.w);
        c.axpy(-k, &prev.c);
        c.scale(1.0 / den);
        let next = Extended {
            c,
            a: cur.a * r.alpha / den,
            b: (cur.b - k * prev.b) / den,
        };
        rho = r.alpha / den;
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(cur)
}

/// Extends a forward result with relations at offsets -1, -2, ..., -(m-1).
pub fn extend_backward(fwd: Extended, rels: &[NodeRelation]) -> Result<Extended> {
    let mut prev = Extended {
        c: Weights::new(),
        a: 0.0,
        b: 1.0,
    };
    let mut sigma = fwd.b;
    let mut cur = fwd;
    for r in rels {
        let den = guard(1.0 - r.alpha * sigma)?;
        let k = r.alpha * sigma;
        let mut c = cur.c.clone();
        c.axpy(cur.b, &r.w);
        c.axpy(-k, &prev.c);
        c.scale(1.0 / den);
        let next = Extended {
            c,
            a: (cur.a - k * prev.a) / den,
            b: cur.b * r.beta / den,
        };
        sigma = r.beta / den;
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Exact,
    Truncated,
    ExplicitUniform,
}

/// Extended relation around one interface node.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceStencil {
    pub a: f64,
    pub b: f64,
    /// Weights for offsets `-n_left..=n_right`, index `k + n_left`.
    pub omega: Vec<f64>,
    /// Weights of the left and right domain extra points (zero when unused).
    pub extra: [f64; 2],
    pub n_left: usize,
    pub n_right: usize,
    pub flavor: Flavor,
}

impl InterfaceStencil {
    pub fn weight(&self, k: isize) -> f64 {
        let ix = k + self.n_left as isize;
        if ix < 0 || ix as usize >= self.omega.len() {
            0.0
        } else {
            self.omega[ix as usize]
        }
    }

    /// Drops the coupling to the neighbouring derivatives.
    pub fn truncated(mut self) -> Self {
        self.a = 0.0;
        self.b = 0.0;
        self.flavor = Flavor::Truncated;
        self
    }

    pub fn omega_sum(&self) -> f64 {
        self.omega.iter().sum::<f64>() + self.extra[0] + self.extra[1]
    }

    /// `Σ ω_k x_{i+k} + ω_* x_* + a + b`, which is 1 for exact relations.
    pub fn linear_response(&self, x: &[f64], x_extra: [f64; 2]) -> f64 {
        let mut s = self.a + self.b + self.extra[0] * x_extra[0] + self.extra[1] * x_extra[1];
        for (k, &w) in self.omega.iter().enumerate() {
            s += w * x[k];
        }
        s
    }
}

/// Closure at an end of a stencil window: the window end is a domain end whose
/// outer cell holds an extra point at relative position `t_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowClosure {
    pub t_star: f64,
}

/// Exact extended relation for an arbitrary window.
///
/// `cells` lists the widths of cells `i-m .. i+n-1` left to right, where `m`
/// is `n_left`. A closure on one side replaces the relation at the node next to
/// that end by its extra-point variant, which makes `b` (left) or `a` (right)
/// vanish.
pub fn recursive_stencil(
    cells: &[f64],
    n_left: usize,
    left: Option<WindowClosure>,
    right: Option<WindowClosure>,
) -> Result<InterfaceStencil> {
    let m = n_left as isize;
    let n = cells.len() as isize - m;
    if m < 1 || n < 1 {
        return Err(Error::Geometry(format!(
            "window needs cells on both sides (m={m}, n={n})"
        )));
    }
    if m + n < 3 && (left.is_some() || right.is_some()) {
        return Err(Error::Geometry(
            "closure window needs at least 3 cells".into(),
        ));
    }
    let width = |c: isize| cells[(c + m) as usize];
    let rel = |j: isize| -> Result<NodeRelation> {
        let (dl, dr) = (width(j - 1), width(j));
        match (left, right) {
            (Some(cl), _) if j == -m + 1 => {
                NodeRelation::closure(j, dl, dr, ClosureSide::Left, cl.t_star)
            }
            (_, Some(cr)) if j == n - 1 => {
                NodeRelation::closure(j, dl, dr, ClosureSide::Right, cr.t_star)
            }
            _ => NodeRelation::interior(j, dl, dr),
        }
    };
    if let (Some(_), Some(_)) = (left, right) {
        if -m + 1 == n - 1 {
            return Err(Error::Geometry("both closures act on the same node".into()));
        }
    }
    let fwd_rels = (0..n).map(rel).collect::<Result<Vec<_>>>()?;
    let back_rels = (1..m).map(|q| rel(-q)).collect::<Result<Vec<_>>>()?;
    let e = extend_backward(extend_forward(&fwd_rels)?, &back_rels)?;
    Ok(InterfaceStencil {
        a: e.a,
        b: e.b,
        omega: e.c.dense(-m, n),
        extra: e.c.extra,
        n_left: m as usize,
        n_right: n as usize,
        flavor: Flavor::Exact,
    })
}

/// Memoized `u_0 = 0, u_1 = 1, u_{k+1} = 4 u_k - u_{k-1}`.
///
/// This normalization differs from `(2+√3)^k - (2-√3)^k` by the constant factor
/// `2√3`; every formula using it is homogeneous of degree zero in `u`.
#[derive(Debug, Clone)]
pub struct USeq {
    values: Vec<f64>,
}

impl USeq {
    pub fn new(max_k: usize) -> Result<Self> {
        let mut values: Vec<f64> = vec![0.0, 1.0];
        for k in 2..=max_k.max(1) {
            let v = 4.0 * values[k - 1] - values[k - 2];
            if !v.is_finite() {
                return Err(Error::Overflow(k));
            }
            values.push(v);
        }
        values.truncate(max_k.max(1) + 1);
        Ok(USeq { values })
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }
}

pub fn u_seq(k: usize) -> Result<f64> {
    Ok(USeq::new(k)?.get(k))
}

/// Closed-form extended relation when each side is uniform.
pub fn explicit_uniform(
    m: usize,
    n: usize,
    dx_left: f64,
    dx_right: f64,
) -> Result<InterfaceStencil> {
    if m < 1 || n < 1 {
        return Err(Error::Geometry("explicit formula needs m, n >= 1".into()));
    }
    let tp = three_point(dx_left, dx_right)?;
    let (a11, b11) = (tp.alpha, tp.beta);
    let u = USeq::new(m.max(n) + 1)?;
    let (um, un) = (u.get(m), u.get(n));
    let d = um * un + um * u.get(n - 1) * a11 + un * u.get(m - 1) * b11;
    if !d.is_finite() || d == 0.0 {
        return Err(Error::Overflow(m + n));
    }
    let sign = |p: isize| if p.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let (ni, mi) = (n as isize, m as isize);
    let a = sign(ni - 1) * a11 * um / d;
    let b = sign(mi - 1) * b11 * un / d;
    let ar = a11 / dx_right;
    let bl = b11 / dx_left;
    let mut omega = vec![0.0; m + n + 1];
    for k in -mi..=ni {
        let w = if k == ni {
            3.0 * sign(k) * ar * um / d
        } else if k > 0 {
            let j = (ni - k) as usize;
            3.0 * sign(k) * ar * um * (u.get(j + 1) - u.get(j - 1)) / d
        } else if k == 0 {
            3.0 * (ar * um * (un - u.get(n - 1)) - bl * un * (um - u.get(m - 1))) / d
        } else if k > -mi {
            let j = (mi + k) as usize;
            3.0 * sign(k + 1) * bl * un * (u.get(j + 1) - u.get(j - 1)) / d
        } else {
            3.0 * sign(k + 1) * bl * un / d
        };
        omega[(k + mi) as usize] = w;
    }
    if omega.iter().any(|w| !w.is_finite()) {
        return Err(Error::Overflow(m + n));
    }
    Ok(InterfaceStencil {
        a,
        b,
        omega,
        extra: [0.0; 2],
        n_left: m,
        n_right: n,
        flavor: Flavor::ExplicitUniform,
    })
}

/// Truncated stencil on `m` uniform cells of width `dx_left` and `n` of width `dx_right`.
pub fn truncated_stencil(
    m: usize,
    n: usize,
    dx_left: f64,
    dx_right: f64,
) -> Result<InterfaceStencil> {
    let mut cells = vec![dx_left; m];
    cells.extend(std::iter::repeat(dx_right).take(n));
    Ok(recursive_stencil(&cells, m, None, None)?.truncated())
}

/// Coupling magnitude `|a_{N,N}| + |b_{N,N}|` dropped by an `N`-cell truncation.
pub fn truncation_bound(n_cells: usize, dx_left: f64, dx_right: f64) -> Result<f64> {
    let s = explicit_uniform(n_cells, n_cells, dx_left, dx_right)?;
    Ok(s.a.abs() + s.b.abs())
}

/// Smallest window on the ladder 5, 10, 15, ... whose dropped coupling is below `target`.
pub fn select_truncation(
    target: f64,
    dx_left: f64,
    dx_right: f64,
    max_cells: usize,
) -> Result<usize> {
    let mut n = 5;
    while n <= max_cells {
        if truncation_bound(n, dx_left, dx_right)? < target {
            return Ok(n);
        }
        n += 5;
    }
    Err(Error::Invalid(format!(
        "precision {target:e} needs more than {max_cells} cells per side"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_values() {
        let h = hermite_basis(0.5);
        assert_eq!((h.h0, h.h1, h.k0, h.k1), (0.5, 0.5, 0.125, -0.125));
        let h = hermite_basis(0.0);
        assert_eq!((h.h0, h.h1, h.k0, h.k1), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn three_point_examples() {
        let t = three_point(1.0, 1.0).unwrap();
        assert_eq!((t.alpha, t.beta), (-0.25, -0.25));
        assert_eq!(t.gamma_weights, [-0.75, 0.0, 0.75]);
        let t = three_point(1.0, 2.0).unwrap();
        assert!((t.alpha + 1.0 / 6.0).abs() < 1e-15 && (t.beta + 1.0 / 3.0).abs() < 1e-15);
        let e = [-1.0, 0.75, 0.25];
        for q in 0..3 {
            assert!((t.gamma_weights[q] - e[q]).abs() < 1e-15);
        }
        assert!(three_point(0.0, 1.0).is_err());
    }

    #[test]
    fn forward_two_steps_uniform() {
        let rels = vec![
            NodeRelation::interior(0, 1.0, 1.0).unwrap(),
            NodeRelation::interior(1, 1.0, 1.0).unwrap(),
        ];
        let e = extend_forward(&rels).unwrap();
        assert!((e.a - 1.0 / 15.0).abs() < 1e-15);
        assert!((e.b + 4.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn closure_is_exact_on_a_cubic() {
        let p = |x: f64| 0.3 - 1.2 * x + 0.7 * x * x - 0.9 * x * x * x;
        let dp = |x: f64| -1.2 + 1.4 * x - 2.7 * x * x;
        let (xm, x0, xp) = (0.0, 0.4, 1.1);
        let tp = three_point(x0 - xm, xp - x0).unwrap();
        let g = greville_closure(ClosureSide::Left, &tp, 0.3, x0 - xm).unwrap();
        let xs = xm + 0.3 * (x0 - xm);
        let w = g.gamma_star_weights;
        let s = w[0] * p(xm) + w[1] * p(xs) + w[2] * p(x0) + w[3] * p(xp) + g.alpha_star * dp(xp);
        assert_eq!(g.beta_star, 0.0);
        assert!((s - dp(x0)).abs() < 1e-13);

        let g = greville_closure(ClosureSide::Right, &tp, 0.6, xp - x0).unwrap();
        let xs = x0 + 0.6 * (xp - x0);
        let w = g.gamma_star_weights;
        let s = w[0] * p(xm) + w[1] * p(x0) + w[2] * p(xs) + w[3] * p(xp) + g.beta_star * dp(xm);
        assert_eq!(g.alpha_star, 0.0);
        assert!((s - dp(x0)).abs() < 1e-13);
        assert!(w.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn u_values() {
        let r = 3f64.sqrt();
        let closed = ((2.0 + r).powi(20) - (2.0 - r).powi(20)) / (2.0 * r);
        assert!((u_seq(20).unwrap() / closed - 1.0).abs() < 1e-12);
        assert_eq!(u_seq(2).unwrap(), 4.0);
        assert_eq!(u_seq(3).unwrap(), 15.0);
    }
}
