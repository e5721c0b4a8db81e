//! Row-compressed sparse least squares, solved matrix-free by Jacobi
//! preconditioned conjugate gradients on the normal equations.

use crate::error::{Error, Result};

/// Residual rows `r_i(x) = a_i · x − b_i`, stored row-compressed.
#[derive(Debug, Clone, Default)]
pub struct SparseRows {
    pub cols: usize,
    row_ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
    rhs: Vec<f64>,
}

impl SparseRows {
    pub fn new(cols: usize) -> Self {
        SparseRows {
            cols,
            row_ptr: vec![0],
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// Appends one row; duplicate columns are merged and zeros dropped.
    pub fn push(&mut self, mut terms: Vec<(usize, f64)>, rhs: f64) {
        terms.sort_by_key(|t| t.0);
        let mut last: Option<usize> = None;
        for (c, v) in terms {
            assert!(c < self.cols, "column {c} out of range");
            if last == Some(c) {
                *self.val.last_mut().unwrap() += v;
            } else {
                self.idx.push(c);
                self.val.push(v);
                last = Some(c);
            }
        }
        // drop exact cancellations
        let start = *self.row_ptr.last().unwrap();
        let mut w = start;
        for r in start..self.idx.len() {
            if self.val[r] != 0.0 {
                self.idx[w] = self.idx[r];
                self.val[w] = self.val[r];
                w += 1;
            }
        }
        self.idx.truncate(w);
        self.val.truncate(w);
        self.row_ptr.push(w);
        self.rhs.push(rhs);
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64], f64) {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.idx[s..e], &self.val[s..e], self.rhs[r])
    }

    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|r| {
                let (idx, val, b) = self.row(r);
                idx.iter().zip(val).map(|(&c, &v)| v * x[c]).sum::<f64>() - b
            })
            .collect()
    }

    /// `Σ r_i²`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.residuals(x).iter().map(|r| r * r).sum()
    }

    /// `∇ Σ r_i² = 2 Aᵀ(Ax − b)`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = self.residuals(x);
        let mut g = self.transpose_mul(&r);
        g.iter_mut().for_each(|v| *v *= 2.0);
        g
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *o = self.idx[s..e]
                .iter()
                .zip(&self.val[s..e])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    fn transpose_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            for (&c, &v) in self.idx[s..e].iter().zip(&self.val[s..e]) {
                out[c] += v * yr;
            }
        }
        out
    }

    /// Diagonal of `AᵀA`.
    fn normal_diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.cols];
        for (&c, &v) in self.idx.iter().zip(&self.val) {
            d[c] += v * v;
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgParams {
    /// Stop once `‖Aᵀ(b − Ax)‖ ≤ tolerance · ‖Aᵀb‖`.
    pub tolerance: f64,
    /// `None` means ten times the unknown count.
    pub max_iterations: Option<usize>,
}

impl Default for CgParams {
    fn default() -> Self {
        CgParams {
            tolerance: 1e-10,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `‖Ax − b‖²` from the starting point `x0`.
pub fn solve_least_squares(rows: &SparseRows, x0: &[f64], params: &CgParams) -> Result<CgOutcome> {
    let n = rows.cols;
    assert_eq!(x0.len(), n);
    let max_iter = params.max_iterations.unwrap_or(10 * n.max(1));
    let atb = rows.transpose_mul(&rows.rhs);
    let norm_atb = dot(&atb, &atb).sqrt();

    let mut x = x0.to_vec();
    let mut ax = vec![0.0; rows.len()];
    rows.mul(&x, &mut ax);
    let resid: Vec<f64> = rows.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut r = rows.transpose_mul(&resid);
    let mut rnorm = dot(&r, &r).sqrt();
    let scale = if norm_atb > 0.0 { norm_atb } else { 1.0 };
    if rnorm <= params.tolerance * scale {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            relative_residual: rnorm / scale,
        });
    }

    let inv_diag: Vec<f64> = rows
        .normal_diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap_rows = vec![0.0; rows.len()];

    for it in 1..=max_iter {
        rows.mul(&p, &mut ap_rows);
        let pap = dot(&ap_rows, &ap_rows);
        if pap <= 0.0 {
            break;
        }
        let q = rows.transpose_mul(&ap_rows);
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        // periodic true-residual refresh against drift
        if it % 200 == 0 {
            rows.mul(&x, &mut ax);
            let resid: Vec<f64> = rows.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            r = rows.transpose_mul(&resid);
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= params.tolerance * scale {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: rnorm / scale,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver {
        iterations: max_iter,
        residual: rnorm / scale,
    })
}
