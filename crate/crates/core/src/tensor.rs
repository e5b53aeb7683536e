//! Dense row-major real matrices.
//!
//! Quaternion data is carried in the same type: a matrix of `rows` quaternion
//! vectors of length `d` has `4 * d` columns laid out as `[r | i | j | k]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::quaternion::{QuaternionMatrix, QuaternionVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn scalar(value: f64) -> Self {
        Self { rows: 1, cols: 1, data: vec![value] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch { left: rows * cols, right: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    /// Value of a `1 x 1` tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.len(), 1);
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Number of quaternions per row.
    pub fn quat_dim(&self) -> usize {
        debug_assert_eq!(self.cols % 4, 0);
        self.cols / 4
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn transpose(&self) -> Tensor {
        Tensor::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// `self · other`: `(n x p) · (p x q)`.
    pub fn matmul(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let (n, p, q) = (self.rows, self.cols, other.cols);
        let mut out = Tensor::zeros(n, q);
        for r in 0..n {
            let dst = &mut out.data[r * q..(r + 1) * q];
            for (t, &a) in self.row(r).iter().enumerate().take(p) {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in dst.iter_mut().zip(other.row(t)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · otherᵀ`: `(n x p) · (q x p)ᵀ`.
    pub fn matmul_nt(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.cols, other.cols, "matmul_nt inner dimension mismatch");
        // Row-times-row dot products do not vectorize; transposing once keeps the
        // inner loop a contiguous axpy.
        self.matmul(&other.transpose())
    }

    /// `selfᵀ · other`: `(p x n)ᵀ · (p x q)`.
    pub fn matmul_tn(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.rows, other.rows, "matmul_tn inner dimension mismatch");
        let (n, q) = (self.cols, other.cols);
        let mut out = Tensor::zeros(n, q);
        for t in 0..self.rows {
            let b = other.row(t);
            for (r, &a) in self.row(t).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &y) in out.data[r * q..(r + 1) * q].iter_mut().zip(b) {
                    *o += a * y;
                }
            }
        }
        out
    }

    /// One quaternion-row tensor per [`QuaternionVector`].
    pub fn from_quaternion_rows(rows: &[QuaternionVector]) -> Result<Self> {
        let d = rows.first().map(|v| v.len()).ok_or(Error::Empty)?;
        let mut data = Vec::with_capacity(rows.len() * 4 * d);
        for v in rows {
            if v.len() != d {
                return Err(Error::LengthMismatch { left: d, right: v.len() });
            }
            data.extend(v.to_blocks());
        }
        Tensor::from_vec(rows.len(), 4 * d, data)
    }

    pub fn quaternion_row(&self, r: usize) -> QuaternionVector {
        QuaternionVector::from_blocks(self.row(r)).expect("quaternion row layout")
    }

    /// `m x n` quaternion matrix as an `m x 4n` tensor.
    pub fn from_quaternion_matrix(w: &QuaternionMatrix) -> Self {
        let (m, n) = (w.rows(), w.cols());
        let comps = w.components();
        Tensor::from_fn(m, 4 * n, |r, c| comps[c / n][r * n + c % n])
    }

    pub fn to_quaternion_matrix(&self) -> QuaternionMatrix {
        let n = self.quat_dim();
        let m = self.rows;
        let comp =
            |q: usize| -> Vec<f64> { (0..m).flat_map(|r| self.row(r)[q * n..(q + 1) * n].iter().copied()).collect() };
        QuaternionMatrix::from_components(m, n, comp(0), comp(1), comp(2), comp(3))
            .expect("consistent component lengths")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent partial sums let the loop vectorize.
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
