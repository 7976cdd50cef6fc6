//! Small direct solvers: banded LU with partial pivoting, Thomas and
//! cyclic Thomas for tridiagonal systems, and a dense LU for tiny matrices.

use crate::error::{Error, Result};

/// Banded matrix with `kl` sub-diagonals and `ku` super-diagonals.
///
/// Storage reserves `kl` extra super-diagonals for the fill-in created by
/// row interchanges during factorization.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let w = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            w,
            data: vec![0.0; n * w],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.w + (j + self.kl - i)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i},{j}) outside the declared band"
        );
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    /// y = A x for the unfactored matrix.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                *yi += self.get(i, j) * x[j];
            }
        }
        y
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = kl + self.ku;
        let mut piv = vec![0usize; n];
        let mut lower = vec![0.0; n * kl.max(1)];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let a = self.idx(k, c);
                    let b = self.idx(p, c);
                    self.data.swap(a, b);
                }
            }
            let d = self.get(k, k);
            for r in k + 1..=last_row {
                let m = self.get(r, k) / d;
                lower[k * kl + (r - k - 1)] = m;
                if m != 0.0 {
                    for c in k + 1..=last_col {
                        let ukc = self.get(k, c);
                        let ix = self.idx(r, c);
                        self.data[ix] -= m * ukc;
                    }
                }
            }
        }
        Ok(BandedLu {
            m: self,
            lower,
            piv,
        })
    }
}

/// LU factors of a [`BandedMatrix`]; immutable and reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    lower: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.m.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.m.n;
        let kl = self.m.kl;
        let reach = kl + self.m.ku;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    b[r] -= self.lower[k * kl + (r - k - 1)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + reach).min(n - 1) {
                s -= self.m.get(k, c) * b[c];
            }
            b[k] = s / self.m.get(k, k);
        }
    }
}

/// Thomas factorization of a tridiagonal matrix (no pivoting; intended for
/// diagonally dominant or totally positive systems).
#[derive(Debug, Clone)]
pub struct Tridiag {
    sub: Vec<f64>,
    inv_piv: Vec<f64>,
    cprime: Vec<f64>,
}

impl Tridiag {
    /// `sub[i]` multiplies x[i-1] in row i (sub[0] unused), `sup[i]` multiplies x[i+1].
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut inv_piv = vec![0.0; n];
        let mut cprime = vec![0.0; n];
        for i in 0..n {
            let d = if i == 0 {
                diag[0]
            } else {
                diag[i] - sub[i] * cprime[i - 1]
            };
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular(i));
            }
            inv_piv[i] = 1.0 / d;
            cprime[i] = if i + 1 < n { sup[i] / d } else { 0.0 };
        }
        Ok(Tridiag {
            sub: sub.to_vec(),
            inv_piv,
            cprime,
        })
    }

    pub fn n(&self) -> usize {
        self.inv_piv.len()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let prev = if i == 0 { 0.0 } else { self.sub[i] * x[i - 1] };
            x[i] = (x[i] - prev) * self.inv_piv[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.cprime[i] * x[i + 1];
        }
    }
}

/// Cyclic tridiagonal system solved by Thomas plus a Sherman-Morrison
/// correction for the two corner entries. Requires n >= 3.
#[derive(Debug, Clone)]
pub struct CyclicTridiag {
    inner: Tridiag,
    z: Vec<f64>,
    corner_top: f64,
    gamma: f64,
}

impl CyclicTridiag {
    /// Row i reads `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1]` with indices mod n.
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n < 3 {
            return Err(Error::Invalid(format!(
                "cyclic system needs n >= 3, got {n}"
            )));
        }
        let corner_top = sub[0];
        let corner_bottom = sup[n - 1];
        let gamma = -diag[0];
        let mut d = diag.to_vec();
        d[0] -= gamma;
        d[n - 1] -= corner_top * corner_bottom / gamma;
        let inner = Tridiag::factor(sub, &d, sup)?;
        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = corner_bottom;
        inner.solve_in_place(&mut z);
        let denom = 1.0 + z[0] + corner_top * z[n - 1] / gamma;
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Singular(n - 1));
        }
        Ok(CyclicTridiag {
            inner,
            z,
            corner_top,
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n();
        self.inner.solve_in_place(x);
        let z = &self.z;
        let fact = (x[0] + self.corner_top * x[n - 1] / self.gamma)
            / (1.0 + z[0] + self.corner_top * z[n - 1] / self.gamma);
        for i in 0..n {
            x[i] -= fact * z[i];
        }
    }
}

/// Dense LU with partial pivoting, row-major. Meant for matrices of a few dozen rows.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv = (0..n).collect::<Vec<_>>();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|r| (r, a[r * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            let d = a[k * n + k];
            for r in k + 1..n {
                let m = a[r * n + k] / d;
                a[r * n + k] = m;
                if m != 0.0 {
                    for c in k + 1..n {
                        a[r * n + c] -= m * a[k * n + c];
                    }
                }
            }
        }
        Ok(DenseLu { n, a, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.a[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.a[i * n + j] * x[j];
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }

    /// Inverse, row-major.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        inv
    }
}
