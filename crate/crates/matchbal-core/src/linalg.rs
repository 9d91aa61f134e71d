//! Small dense row-major matrix with just the operations the predictors
//! need: products, Gram matrices, Cholesky solves and a conjugate-gradient
//! fallback for numerically singular systems.

#[allow(unused_imports)] // shadowed by std inherent methods in test builds
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(Error::Parameter(format!(
                    "ragged matrix rows: expected {ncols}, got {}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: nrows, cols: ncols, data })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Parameter(format!(
                "matrix data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// C = self * other.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (j, &a_ij) in a_row.iter().enumerate() {
                if a_ij == 0.0 {
                    continue;
                }
                let b_row = other.row(j);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a_ij * b;
                }
            }
        }
        out
    }

    /// C = self^T * other; used for Gram matrices and backprop.
    pub fn at_b(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "at_b dimension mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let b_row = other.row(i);
            for (j, &a_ij) in a_row.iter().enumerate() {
                if a_ij == 0.0 {
                    continue;
                }
                let out_row = out.row_mut(j);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a_ij * b;
                }
            }
        }
        out
    }

    /// C = self * other^T; rows of both operands are dotted directly.
    pub fn a_bt(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "a_bt dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..other.rows {
                out.set(i, j, dot(a_row, other.row(j)));
            }
        }
        out
    }

    /// X^T X, exploiting symmetry.
    pub fn gram(&self) -> Matrix {
        let d = self.cols;
        let mut out = Matrix::zeros(d, d);
        for i in 0..self.rows {
            let r = self.row(i);
            for (j, &xj) in r.iter().enumerate() {
                if xj == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[j * d..(j + 1) * d];
                for k in j..d {
                    out_row[k] += xj * r[k];
                }
            }
        }
        for j in 0..d {
            for k in (j + 1)..d {
                let v = out.get(j, k);
                out.set(k, j, v);
            }
        }
        out
    }

    /// X^T v.
    pub fn xt_v(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "xt_v dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += vi * x;
            }
        }
        out
    }

    /// X v.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn select_cols(&self, keep: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, keep.len());
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = out.row_mut(i);
            for (d, &j) in dst.iter_mut().zip(keep) {
                *d = src[j];
            }
        }
        out
    }

    pub fn select_rows(&self, keep: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(keep.len(), self.cols);
        for (dst, &i) in (0..keep.len()).zip(keep) {
            out.row_mut(dst).copy_from_slice(self.row(i));
        }
        out
    }

    /// Copy with a trailing column of ones (intercept term).
    pub fn with_intercept(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            out.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            out.set(i, self.cols, 1.0);
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix, or None if a pivot is not strictly positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    cholesky_with_tol(a, 0.0)
}

/// Cholesky that also rejects pivots below `rel_tol` times the largest
/// diagonal entry, catching numerically rank-deficient Gram matrices
/// that plain floating-point pivots would sneak through.
pub fn cholesky_with_tol(a: &Matrix, rel_tol: f64) -> Option<Matrix> {
    assert_eq!(a.rows(), a.cols(), "cholesky needs a square matrix");
    let n = a.rows();
    let diag_max = (0..n).fold(0.0f64, |m, i| m.max(a.get(i, i).abs()));
    let floor = rel_tol * diag_max;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= floor || s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l.set(i, j, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Some(l)
}

/// Solve L L^T x = b given the lower factor.
pub fn cholesky_solve_factored(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Solve A x = b for symmetric positive-definite A.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    cholesky(a).map(|l| cholesky_solve_factored(&l, b))
}

/// Inverse of a symmetric positive-definite matrix by column solves.
pub fn spd_inverse(a: &Matrix) -> Option<Matrix> {
    cholesky(a).map(|l| inverse_from_factor(&l))
}

/// Inverse from an existing lower Cholesky factor.
pub fn inverse_from_factor(l: &Matrix) -> Matrix {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = cholesky_solve_factored(l, &e);
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
        e[j] = 0.0;
    }
    inv
}

/// Conjugate gradient on a symmetric positive semi-definite system;
/// fallback for Gram matrices the Cholesky factorization rejects.
pub fn conjugate_gradient(a: &Matrix, b: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs_old = dot(&r, &r);
    if rs_old.sqrt() <= tol {
        return x;
    }
    for _ in 0..max_iter {
        let ap = a.mul_vec(&p);
        let denom = dot(&p, &ap);
        if denom.abs() < f64::MIN_POSITIVE {
            break;
        }
        let alpha = rs_old / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        if rs_new.sqrt() <= tol {
            break;
        }
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    x
}
