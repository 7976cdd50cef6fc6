//! Interface-derivative solves along one grid line.
//!
//! A line is a 1D merged grid `x_0 < ... < x_M` cut at some interior nodes
//! (the splits). Every local spline between two cuts needs the derivative at
//! the cuts; a [`LinePlan`] turns node values into those derivatives. Both the
//! 1D multipatch domains and every r- or θ-line of a 2D layout go through here.

use crate::error::{Error, Result};
use crate::interface::{recursive_stencil, InterfaceStencil, WindowClosure};
use crate::linalg::{CyclicTridiag, DenseLu, Tridiag};

/// Closure at one end of an open line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineEnd {
    /// The end derivative is supplied with the data.
    Hermite,
    /// An extra value sits one third of a cell inside the end.
    Greville,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineShape {
    Open([LineEnd; 2]),
    /// `x_M` is the image of `x_0` one period later.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanMode {
    /// Solve the coupled interface system; reproduces the global spline.
    Exact,
    /// Local stencils on at most `N` cells per side, coupling dropped.
    Truncated(usize),
}

/// Relation for one split: `s'_node - next s'_{next split} - prev s'_{prev split}
/// = Σ w f + extra·f_extra + known·(end derivatives)`.
#[derive(Debug, Clone)]
pub struct SplitRow {
    pub node: usize,
    pub weights: Vec<(usize, f64)>,
    pub extra: [f64; 2],
    pub next: f64,
    pub prev: f64,
    pub known: [f64; 2],
    pub stencil: InterfaceStencil,
}

#[derive(Debug, Clone)]
enum LineSolver {
    Decoupled,
    Tri(Tridiag),
    Cyclic(CyclicTridiag),
    Dense(DenseLu),
}

#[derive(Debug, Clone)]
pub struct LinePlan {
    n_cells: usize,
    shape: LineShape,
    mode: PlanMode,
    rows: Vec<SplitRow>,
    solver: LineSolver,
}

impl LinePlan {
    /// `nodes` holds the `M+1` node coordinates; `splits` the cut node indices
    /// (in `1..M` for open lines and `0..M` for periodic ones).
    pub fn new(nodes: &[f64], shape: LineShape, splits: &[usize], mode: PlanMode) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Geometry("a line needs at least one cell".into()));
        }
        let m_cells = nodes.len() - 1;
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if widths.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Geometry(
                "line nodes must be strictly increasing".into(),
            ));
        }
        if splits.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Geometry(
                "split nodes must be strictly increasing".into(),
            ));
        }
        let periodic = shape == LineShape::Periodic;
        if let (Some(&first), Some(&last)) = (splits.first(), splits.last()) {
            let ok = if periodic {
                last < m_cells
            } else {
                first >= 1 && last < m_cells
            };
            if !ok {
                return Err(Error::Geometry(format!(
                    "split index out of range for {m_cells} cells"
                )));
            }
        }
        if let PlanMode::Truncated(0) = mode {
            return Err(Error::Invalid(
                "truncation needs at least one cell per side".into(),
            ));
        }
        let k = splits.len();
        let mut rows = Vec::with_capacity(k);
        for (q, &s) in splits.iter().enumerate() {
            let row = match shape {
                LineShape::Open(ends) => {
                    let (lo, hi) = match mode {
                        PlanMode::Exact => (
                            if q > 0 { splits[q - 1] } else { 0 },
                            if q + 1 < k { splits[q + 1] } else { m_cells },
                        ),
                        PlanMode::Truncated(n) => (s.saturating_sub(n), (s + n).min(m_cells)),
                    };
                    let lc = (lo == 0 && ends[0] == LineEnd::Greville)
                        .then_some(WindowClosure { t_star: 1.0 / 3.0 });
                    let rc = (hi == m_cells && ends[1] == LineEnd::Greville)
                        .then_some(WindowClosure { t_star: 2.0 / 3.0 });
                    let st = recursive_stencil(&widths[lo..hi], s - lo, lc, rc)?;
                    let mut known = [0.0; 2];
                    let (mut prev, mut next) = (0.0, 0.0);
                    if lo == 0 {
                        if ends[0] == LineEnd::Hermite {
                            known[0] = st.b;
                        }
                    } else if mode == PlanMode::Exact {
                        prev = st.b;
                    }
                    if hi == m_cells {
                        if ends[1] == LineEnd::Hermite {
                            known[1] = st.a;
                        }
                    } else if mode == PlanMode::Exact {
                        next = st.a;
                    }
                    let weights = st
                        .omega
                        .iter()
                        .enumerate()
                        .map(|(j, &w)| (lo + j, w))
                        .collect();
                    SplitRow {
                        node: s,
                        weights,
                        extra: st.extra,
                        next,
                        prev,
                        known,
                        stencil: st,
                    }
                }
                LineShape::Periodic => {
                    let (m, n) = match mode {
                        PlanMode::Exact => {
                            let p = splits[(q + k - 1) % k];
                            let nx = splits[(q + 1) % k];
                            let m = (s + m_cells - p) % m_cells;
                            let n = (nx + m_cells - s) % m_cells;
                            (
                                if m == 0 { m_cells } else { m },
                                if n == 0 { m_cells } else { n },
                            )
                        }
                        PlanMode::Truncated(n) => (n, n),
                    };
                    let start = s + m_cells * (m / m_cells + 1) - m;
                    let cells: Vec<f64> =
                        (0..m + n).map(|c| widths[(start + c) % m_cells]).collect();
                    let st = recursive_stencil(&cells, m, None, None)?;
                    let mut acc = vec![0.0; m_cells];
                    for (j, &w) in st.omega.iter().enumerate() {
                        acc[(start + j) % m_cells] += w;
                    }
                    let weights = acc
                        .into_iter()
                        .enumerate()
                        .filter(|(_, w)| *w != 0.0)
                        .collect();
                    let (prev, next) = if mode == PlanMode::Exact {
                        (st.b, st.a)
                    } else {
                        (0.0, 0.0)
                    };
                    SplitRow {
                        node: s,
                        weights,
                        extra: [0.0; 2],
                        next,
                        prev,
                        known: [0.0; 2],
                        stencil: st,
                    }
                }
            };
            rows.push(row);
        }
        let solver = if mode != PlanMode::Exact || k == 0 {
            LineSolver::Decoupled
        } else if !periodic {
            let sub: Vec<f64> = rows.iter().map(|r| -r.prev).collect();
            let sup: Vec<f64> = rows.iter().map(|r| -r.next).collect();
            LineSolver::Tri(Tridiag::factor(&sub, &vec![1.0; k], &sup)?)
        } else if k >= 3 {
            let sub: Vec<f64> = rows.iter().map(|r| -r.prev).collect();
            let sup: Vec<f64> = rows.iter().map(|r| -r.next).collect();
            LineSolver::Cyclic(CyclicTridiag::factor(&sub, &vec![1.0; k], &sup)?)
        } else if k == 2 {
            let c0 = rows[0].prev + rows[0].next;
            let c1 = rows[1].prev + rows[1].next;
            LineSolver::Dense(DenseLu::factor(2, vec![1.0, -c0, -c1, 1.0])?)
        } else {
            LineSolver::Dense(DenseLu::factor(1, vec![1.0 - rows[0].prev - rows[0].next])?)
        };
        Ok(LinePlan {
            n_cells: m_cells,
            shape,
            mode,
            rows,
            solver,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn shape(&self) -> LineShape {
        self.shape
    }

    pub fn mode(&self) -> PlanMode {
        self.mode
    }

    pub fn rows(&self) -> &[SplitRow] {
        &self.rows
    }

    pub fn splits(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.node).collect()
    }

    /// Number of node values `solve` expects.
    pub fn n_values(&self) -> usize {
        match self.shape {
            LineShape::Periodic => self.n_cells,
            LineShape::Open(_) => self.n_cells + 1,
        }
    }

    /// Derivatives at the splits, in split order.
    ///
    /// `extras` are read only at Greville ends and `end_derivs` only at Hermite ends.
    pub fn solve(
        &self,
        values: &[f64],
        extras: [f64; 2],
        end_derivs: [f64; 2],
    ) -> Result<Vec<f64>> {
        if values.len() != self.n_values() {
            return Err(Error::ValueCount {
                expected: self.n_values(),
                got: values.len(),
            });
        }
        let mut rhs: Vec<f64> = self
            .rows
            .iter()
            .map(|r| {
                let mut s = r.extra[0] * extras[0] + r.extra[1] * extras[1];
                s += r.known[0] * end_derivs[0] + r.known[1] * end_derivs[1];
                for &(j, w) in &r.weights {
                    s += w * values[j];
                }
                s
            })
            .collect();
        match &self.solver {
            LineSolver::Decoupled => {}
            LineSolver::Tri(t) => t.solve_in_place(&mut rhs),
            LineSolver::Cyclic(t) => t.solve_in_place(&mut rhs),
            LineSolver::Dense(d) => rhs = d.solve(&rhs),
        }
        if let Some(i) = rhs.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_data_gives_slope() {
        let nodes: Vec<f64> = (0..=20)
            .map(|i| i as f64 * 0.1 + 0.01 * (i as f64).sin())
            .collect();
        let f: Vec<f64> = nodes.iter().map(|x| 2.0 * x - 1.0).collect();
        for ends in [[LineEnd::Hermite; 2], [LineEnd::Greville; 2]] {
            let p =
                LinePlan::new(&nodes, LineShape::Open(ends), &[5, 9, 15], PlanMode::Exact).unwrap();
            let extras = [
                2.0 * (nodes[0] + (nodes[1] - nodes[0]) / 3.0) - 1.0,
                2.0 * (nodes[20] - (nodes[20] - nodes[19]) / 3.0) - 1.0,
            ];
            for d in p.solve(&f, extras, [2.0, 2.0]).unwrap() {
                assert!((d - 2.0).abs() < 1e-12);
            }
        }
        // Truncation drops a coupling of size |a| + |b|, which for three cells is near 1e-2.
        let p = LinePlan::new(
            &nodes,
            LineShape::Open([LineEnd::Hermite; 2]),
            &[5, 9, 15],
            PlanMode::Truncated(3),
        )
        .unwrap();
        for d in p.solve(&f, [0.0; 2], [2.0, 2.0]).unwrap() {
            assert!((d - 2.0).abs() < 0.1);
        }
    }

    #[test]
    fn periodic_single_split() {
        let nodes: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let f: Vec<f64> = nodes[..16]
            .iter()
            .map(|x| (2.0 * std::f64::consts::PI * x).sin())
            .collect();
        let p = LinePlan::new(&nodes, LineShape::Periodic, &[0], PlanMode::Exact).unwrap();
        let d = p.solve(&f, [0.0; 2], [0.0; 2]).unwrap();
        assert!((d[0] - 2.0 * std::f64::consts::PI).abs() < 1e-3);
    }
}
