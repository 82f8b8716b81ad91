//! Row-major dense matrices and the handful of kernels the networks need.
//!
//! Every kernel accumulates each output entry in a fixed, sequential order over
//! the reduction index, so results are bit-reproducible and independent of the
//! position of a unit inside a layer.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Rows selected by `idx`, in that order.
    pub fn gather_rows(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(idx.len(), self.cols);
        for (o, &i) in idx.iter().enumerate() {
            out.row_mut(o).copy_from_slice(self.row(i));
        }
        out
    }

    /// Columns `start..start + len` as a new matrix.
    pub fn columns(&self, start: usize, len: usize) -> Mat {
        let mut out = Mat::zeros(self.rows, len);
        for i in 0..self.rows {
            out.row_mut(i)
                .copy_from_slice(&self.row(i)[start..start + len]);
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `out = x · wt + bias`, with `wt` stored `k × n` row-major.
pub fn affine(x: &Mat, wt: &[f64], bias: &[f64], out: &mut Mat) {
    let (k, n) = (x.cols, bias.len());
    debug_assert_eq!(wt.len(), k * n);
    debug_assert_eq!((out.rows, out.cols), (x.rows, n));
    for i in 0..x.rows {
        let xi = &x.data[i * k..(i + 1) * k];
        let oi = &mut out.data[i * n..(i + 1) * n];
        oi.fill(0.0);
        for (kk, &a) in xi.iter().enumerate() {
            if a != 0.0 {
                axpy(oi, a, &wt[kk * n..(kk + 1) * n]);
            }
        }
        for (o, &b) in oi.iter_mut().zip(bias) {
            *o += b;
        }
    }
}

/// `out = g · w` where `w` is `n × k` row-major (the transpose of a `wt`).
pub fn times(g: &Mat, w: &[f64], k: usize, out: &mut Mat) {
    let n = g.cols;
    debug_assert_eq!(w.len(), n * k);
    for i in 0..g.rows {
        let gi = &g.data[i * n..(i + 1) * n];
        let oi = &mut out.data[i * k..(i + 1) * k];
        oi.fill(0.0);
        for (j, &a) in gi.iter().enumerate() {
            if a != 0.0 {
                axpy(oi, a, &w[j * k..(j + 1) * k]);
            }
        }
    }
}

/// `dwt += xᵀ · g` and `db += Σ_i g_i`, with `dwt` stored `k × n`.
pub fn accumulate_grad(x: &Mat, g: &Mat, dwt: &mut [f64], db: &mut [f64]) {
    let (k, n) = (x.cols, g.cols);
    for i in 0..x.rows {
        let xi = &x.data[i * k..(i + 1) * k];
        let gi = &g.data[i * n..(i + 1) * n];
        for (kk, &a) in xi.iter().enumerate() {
            if a != 0.0 {
                axpy(&mut dwt[kk * n..(kk + 1) * n], a, gi);
            }
        }
        axpy(db, 1.0, gi);
    }
}
