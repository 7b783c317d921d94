//! Small dense linear algebra: a row-major matrix, weighted Gram products and
//! a Cholesky factorization. Sized for `p` in the hundreds.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} values for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "row {} has {} entries, expected {}",
                    i,
                    r.len(),
                    cols
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// `X v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    /// `Xᵀ v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vi) in self.row_iter().zip(v) {
            if vi != 0.0 {
                axpy(vi, r, &mut out);
            }
        }
        out
    }

    /// `Xᵀ diag(w) X`, symmetric `cols × cols`.
    pub fn weighted_gram(&self, w: &[f64]) -> Matrix {
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        // rank-4 updates of the upper triangle: one pass over `g` per four rows
        let mut chunks = self.data.chunks_exact(4 * p.max(1)).zip(w.chunks_exact(4));
        for (rows, wc) in chunks.by_ref() {
            let (r0, rest) = rows.split_at(p);
            let (r1, rest) = rest.split_at(p);
            let (r2, r3) = rest.split_at(p);
            for a in 0..p {
                let (s0, s1, s2, s3) = (wc[0] * r0[a], wc[1] * r1[a], wc[2] * r2[a], wc[3] * r3[a]);
                let dst = &mut g.data[a * p + a..(a + 1) * p];
                for (k, d) in dst.iter_mut().enumerate() {
                    let b = a + k;
                    *d += s0 * r0[b] + s1 * r1[b] + s2 * r2[b] + s3 * r3[b];
                }
            }
        }
        let done = (self.rows / 4) * 4;
        for (r, &wi) in self.data[done * p..].chunks_exact(p.max(1)).zip(&w[done..]) {
            for a in 0..p {
                let s = wi * r[a];
                axpy(s, &r[a..], &mut g.data[a * p + a..(a + 1) * p]);
            }
        }
        g.mirror_upper();
        g
    }

    fn mirror_upper(&mut self) {
        let p = self.cols;
        for a in 0..p {
            for b in 0..a {
                self.data[a * p + b] = self.data[b * p + a];
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|a| (0..a).all(|b| (self[(a, b)] - self[(b, a)]).abs() <= tol * (1.0 + self[(a, b)].abs())))
    }

    /// Rows selected by index, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Scales column `j` by `c` in place.
    pub fn scale_column(&mut self, j: usize, c: f64) {
        for i in 0..self.rows {
            self[(i, j)] *= c;
        }
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators so the loop vectorizes
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Fails with [`Error::SingularHessian`] when `a` is not numerically
    /// positive definite.
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch("Cholesky of a non-square matrix".into()));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let lj = &l.data[j * n..j * n + j];
            let d = a[(j, j)] - dot(lj, lj);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SingularHessian);
            }
            let djj = libm::sqrt(d);
            l[(j, j)] = djj;
            for i in j + 1..n {
                let s = dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
                l[(i, j)] = (a[(i, j)] - s) / djj;
            }
        }
        Ok(Cholesky { l })
    }

    /// Cholesky of `a`, retrying once with `a + ridge·tr(a)/p·I` if the plain
    /// factorization fails.
    pub fn with_ridge_fallback(a: &Matrix, ridge: f64) -> Result<Self> {
        match Cholesky::new(a) {
            Ok(c) => Ok(c),
            Err(_) => {
                let p = a.rows();
                let bump = ridge * a.trace() / p.max(1) as f64;
                let mut b = a.clone();
                for i in 0..p {
                    b[(i, i)] += bump;
                }
                Cholesky::new(&b)
            }
        }
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `L z = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let s = dot(&self.l.data[i * n..i * n + i], &b[..i]);
            b[i] = (b[i] - s) / self.l.data[i * n + i];
        }
    }

    /// Solves `Lᵀ x = z` in place.
    pub fn backward_in_place(&self, z: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let xi = z[i] / self.l.data[i * n + i];
            z[i] = xi;
            // subtract column contribution: row i of L times xi
            let row = &self.l.data[i * n..i * n + i];
            for (zk, lk) in z[..i].iter_mut().zip(row) {
                *zk -= lk * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        x
    }

    /// `bᵀ A⁻¹ b = ‖L⁻¹ b‖²`.
    pub fn inv_quad_form(&self, b: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend_from_slice(b);
        self.forward_in_place(scratch);
        dot(scratch, scratch)
    }

    /// Diagonal of `A⁻¹`.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let n = self.dim();
        // columns of L⁻¹: (A⁻¹)_jj = Σ_k (L⁻¹)_kj²
        let mut out = vec![0.0; n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            // forward solve only touches entries j.. since e is zero above j
            for i in j..n {
                let s = dot(&self.l.data[i * n + j..i * n + i], &e[j..i]);
                e[i] = (e[i] - s) / self.l.data[i * n + i];
            }
            out[j] = dot(&e[j..], &e[j..]);
        }
        out
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let x = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = x[i];
            }
        }
        inv
    }
}
