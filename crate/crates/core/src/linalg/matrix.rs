use std::fmt;
use std::ops::{Index, IndexMut};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Products below this many multiply-adds run on the calling thread.
const PAR_THRESHOLD: usize = 1 << 18;
/// Inner-dimension block length for [`DenseMatrix::matmul`].
const K_BLOCK: usize = 128;

/// Dense row-major matrix of `f64`.
#[derive(Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row = self.row(i);
            let shown: Vec<String> = row.iter().take(8).map(|v| format!("{v:.6e}")).collect();
            let tail = if self.cols > 8 { ", ..." } else { "" };
            writeln!(f, "  [{}{}]", shown.join(", "), tail)?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Wraps a row-major buffer. Fails if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(
                "DenseMatrix::from_vec",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; panics on ragged input. Meant for literals.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Matrix whose columns are the given equal-length vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            m.set_column(j, c);
        }
        m
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = v;
        }
    }

    /// Copy of the leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        assert!(k <= self.cols);
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    /// Appends one column on the right.
    pub fn with_column(&self, values: &[f64]) -> Self {
        assert_eq!(values.len(), self.rows);
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.push(values[i]);
        }
        Self { rows: self.rows, cols, data }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entrywise sum of absolute values.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.shape(), other.shape());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += alpha * b);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Multiplies column `j` by `d[j]`.
    pub fn scale_columns(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.cols);
        for row in self.data.chunks_mut(self.cols.max(1)) {
            row.iter_mut().zip(d).for_each(|(v, s)| *v *= s);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy_slice(&mut y, xi, self.row(i));
            }
        }
        y
    }

    /// `self · b`, blocked over the inner dimension; rows of the output are
    /// computed independently so threading never changes the result.
    pub fn matmul(&self, b: &Self) -> Self {
        assert_eq!(self.cols, b.rows, "matmul shape mismatch");
        let (m, k, n) = (self.rows, self.cols, b.cols);
        let mut c = Self::zeros(m, n);
        if m == 0 || n == 0 || k == 0 {
            return c;
        }
        let kernel = |(i, out): (usize, &mut [f64])| {
            let a_row = self.row(i);
            for kb in (0..k).step_by(K_BLOCK) {
                let end = (kb + K_BLOCK).min(k);
                for p in kb..end {
                    let a = a_row[p];
                    if a != 0.0 {
                        axpy_slice(out, a, b.row(p));
                    }
                }
            }
        };
        if m * n * k >= PAR_THRESHOLD {
            c.data.par_chunks_mut(n).enumerate().for_each(kernel);
        } else {
            c.data.chunks_mut(n).enumerate().for_each(kernel);
        }
        c
    }

    /// `selfᵀ · b` without forming the transpose.
    pub fn matmul_tn(&self, b: &Self) -> Self {
        assert_eq!(self.rows, b.rows, "matmul_tn shape mismatch");
        let (k, m, n) = (self.rows, self.cols, b.cols);
        let mut c = Self::zeros(m, n);
        if m == 0 || n == 0 || k == 0 {
            return c;
        }
        let kernel = |(i, out): (usize, &mut [f64])| {
            for p in 0..k {
                let a = self.data[p * m + i];
                if a != 0.0 {
                    axpy_slice(out, a, b.row(p));
                }
            }
        };
        if m * n * k >= PAR_THRESHOLD {
            c.data.par_chunks_mut(n).enumerate().for_each(kernel);
        } else {
            c.data.chunks_mut(n).enumerate().for_each(kernel);
        }
        c
    }

    /// `self · bᵀ` without forming the transpose.
    pub fn matmul_nt(&self, b: &Self) -> Self {
        assert_eq!(self.cols, b.cols, "matmul_nt shape mismatch");
        let (m, n) = (self.rows, b.rows);
        let mut c = Self::zeros(m, n);
        if m == 0 || n == 0 {
            return c;
        }
        let kernel = |(i, out): (usize, &mut [f64])| {
            let a_row = self.row(i);
            for (j, o) in out.iter_mut().enumerate() {
                *o = dot(a_row, b.row(j));
            }
        };
        if m * n * self.cols >= PAR_THRESHOLD {
            c.data.par_chunks_mut(n).enumerate().for_each(kernel);
        } else {
            c.data.chunks_mut(n).enumerate().for_each(kernel);
        }
        c
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy_slice(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|p| a[(i, p)] * b[(p, j)]).sum())
    }

    fn pseudo(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut s = seed;
        DenseMatrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn products_agree_with_naive_triple_loop() {
        for &(m, k, n) in &[(3, 4, 5), (70, 130, 90), (1, 200, 1), (200, 40, 200)] {
            let a = pseudo(m, k, 1);
            let b = pseudo(k, n, 2);
            let reference = naive(&a, &b);
            assert!(a.matmul(&b).sub(&reference).max_abs() < 1e-12);
            assert!(a.transpose().matmul_tn(&b).sub(&reference).max_abs() < 1e-12);
            assert!(a.matmul_nt(&b.transpose()).sub(&reference).max_abs() < 1e-12);
        }
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(DenseMatrix::from_vec(2, 3, vec![0.0; 5]).is_err());
        assert!(DenseMatrix::from_vec(2, 3, vec![0.0; 6]).is_ok());
    }

    #[test]
    fn with_column_appends() {
        let a = DenseMatrix::from_rows(&[[1.0], [2.0]]);
        let b = a.with_column(&[3.0, 4.0]);
        assert_eq!(b, DenseMatrix::from_rows(&[[1.0, 3.0], [2.0, 4.0]]));
    }
}
