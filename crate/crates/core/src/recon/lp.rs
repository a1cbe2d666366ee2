//! Exact solution of `min ‖x‖₁` subject to `l ≤ Φx ≤ u` as a linear program.
//!
//! Split `x = x⁺ - x⁻` and add one box-bounded slack per row, `Φx⁺ - Φx⁻ - s = 0`
//! with `l ≤ s ≤ u`. The all-slack basis is dual feasible (every reduced cost
//! of `x±` is one), so a bounded-variable dual simplex runs without a phase 1.
//! Equality rows are slacks with `l = u`; they leave the basis once and never
//! re-enter.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const REFACTOR_EVERY: usize = 64;
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub pivots: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Problem<'a> {
    a: &'a DMatrix<f64>,
    lower: &'a [f64],
    upper: &'a [f64],
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.a.ncols()
    }

    fn m(&self) -> usize {
        self.a.nrows()
    }

    fn bounds(&self, j: usize) -> (f64, f64) {
        let n = self.n();
        if j < 2 * n {
            (0.0, f64::INFINITY)
        } else {
            (self.lower[j - 2 * n], self.upper[j - 2 * n])
        }
    }

    fn cost(&self, j: usize) -> f64 {
        if j < 2 * self.n() {
            1.0
        } else {
            0.0
        }
    }

    fn column(&self, j: usize) -> DVector<f64> {
        let n = self.n();
        if j < n {
            self.a.column(j).into_owned()
        } else if j < 2 * n {
            -self.a.column(j - n)
        } else {
            let mut e = DVector::zeros(self.m());
            e[j - 2 * n] = -1.0;
            e
        }
    }

    /// `vᵀ a_j` for every variable, from one product `Φᵀv`.
    fn row_products(&self, v: &DVector<f64>) -> Vec<f64> {
        let g = self.a.tr_mul(v);
        let mut out = Vec::with_capacity(2 * self.n() + self.m());
        out.extend(g.iter().copied());
        out.extend(g.iter().map(|x| -x));
        out.extend(v.iter().map(|x| -x));
        out
    }
}

pub fn l1_box_lp(a: &DMatrix<f64>, lower: &[f64], upper: &[f64], max_pivots: usize) -> Result<LpSolution> {
    let (m, n) = a.shape();
    if lower.len() != m || upper.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: lower.len().min(upper.len()) });
    }
    let p = Problem { a, lower, upper };
    let total = 2 * n + m;
    let scale = 1.0 + lower.iter().chain(upper).filter(|v| v.is_finite()).fold(0.0f64, |acc, v| acc.max(v.abs()));
    let feas = 1e-12 * scale;

    let mut basis: Vec<usize> = (2 * n..total).collect();
    let mut status: Vec<Status> = (0..total).map(|j| if j >= 2 * n { Status::Basic(j - 2 * n) } else { Status::AtLower }).collect();
    let mut binv = -DMatrix::<f64>::identity(m, m);
    let mut pivots = 0;
    let mut since_refactor = 0;

    loop {
        // basic values x_B = B⁻¹ w, w_i = value of nonbasic slack i
        let mut w = DVector::zeros(m);
        for i in 0..m {
            let j = 2 * n + i;
            match status[j] {
                Status::AtLower => w[i] = lower[i],
                Status::AtUpper => w[i] = upper[i],
                Status::Basic(_) => {}
            }
        }
        let xb = &binv * &w;

        let mut leave: Option<(usize, f64, bool)> = None;
        for (r, &j) in basis.iter().enumerate() {
            let (l, u) = p.bounds(j);
            let (viol, below) = if xb[r] < l { (l - xb[r], true) } else if xb[r] > u { (xb[r] - u, false) } else { (0.0, false) };
            if viol > feas && leave.is_none_or(|(_, best, _)| viol > best) {
                leave = Some((r, viol, below));
            }
        }
        let Some((r, _, below)) = leave else {
            let mut x = DVector::zeros(n);
            for (k, &j) in basis.iter().enumerate() {
                if j < n {
                    x[j] += xb[k];
                } else if j < 2 * n {
                    x[j - n] -= xb[k];
                }
            }
            return Ok(LpSolution { x, pivots });
        };
        if pivots == max_pivots {
            return Err(Error::NotConverged { what: "l1 linear program", iterations: pivots });
        }

        let cb = DVector::from_iterator(m, basis.iter().map(|&j| p.cost(j)));
        let pi = binv.tr_mul(&cb);
        let pa = p.row_products(&pi);
        let rho: DVector<f64> = binv.row(r).transpose();
        let alpha = p.row_products(&rho);

        // entering variable by the dual ratio test
        let mut enter: Option<(usize, f64, f64)> = None;
        for j in 0..total {
            let (lo, hi) = p.bounds(j);
            let st = status[j];
            if matches!(st, Status::Basic(_)) || lo == hi {
                continue;
            }
            let aj = alpha[j];
            if aj.abs() <= PIVOT_TOL {
                continue;
            }
            // raising x_j changes x_Br by -α_j
            let eligible = match (st, below) {
                (Status::AtLower, true) => aj < 0.0,
                (Status::AtUpper, true) => aj > 0.0,
                (Status::AtLower, false) => aj > 0.0,
                (Status::AtUpper, false) => aj < 0.0,
                (Status::Basic(_), _) => false,
            };
            if !eligible {
                continue;
            }
            let d = (p.cost(j) - pa[j]).abs();
            let ratio = d / aj.abs();
            let better = match enter {
                None => true,
                Some((_, best, best_a)) => ratio < best - 1e-14 || (ratio <= best + 1e-14 && aj.abs() > best_a),
            };
            if better {
                enter = Some((j, ratio, aj.abs()));
            }
        }
        let Some((q, _, _)) = enter else {
            return Err(Error::Solver("the measurement box is not reachable by Φx".into()));
        };

        let leaving = basis[r];
        let (l, u) = p.bounds(leaving);
        status[leaving] = if below { Status::AtLower } else { Status::AtUpper };
        if l == u {
            status[leaving] = Status::AtLower;
        }
        status[q] = Status::Basic(r);
        basis[r] = q;
        pivots += 1;
        since_refactor += 1;

        if since_refactor == REFACTOR_EVERY {
            since_refactor = 0;
            let b = DMatrix::from_columns(&basis.iter().map(|&j| p.column(j)).collect::<Vec<_>>());
            binv = b.try_inverse().ok_or_else(|| Error::Solver("singular simplex basis".into()))?;
        } else {
            let mut col = &binv * p.column(q);
            let piv = col[r];
            let row_r: DVector<f64> = binv.row(r).transpose() / piv;
            col[r] = 0.0;
            binv.ger(-1.0, &col, &row_r, 1.0);
            binv.set_row(r, &row_r.transpose());
        }
    }
}
