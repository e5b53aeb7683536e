//! Compressed sparse row matrices for graph adjacency.

use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` entries. Entries must be
    /// unique per position; they are sorted by row then column.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0; n + 1];
        for &(r, _, _) in &entries {
            assert!(r < n, "row {r} out of range for {n}x{n} matrix");
            indptr[r + 1] += 1;
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        let indices = entries.iter().map(|e| e.1).collect();
        let values = entries.iter().map(|e| e.2).collect();
        Self { n, indptr, indices, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(col, _)| col == c).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Tensor {
        let mut out = Tensor::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                out.set(r, c, v);
            }
        }
        out
    }

    /// `self · x` for a dense `n x d` matrix.
    pub fn matmul(&self, x: &Tensor) -> Tensor {
        assert_eq!(x.rows(), self.n, "sparse matmul dimension mismatch");
        let d = x.cols();
        let mut out = Tensor::zeros(self.n, d);
        for r in 0..self.n {
            let dst = out.row_mut(r);
            for (c, v) in self.row(r) {
                for (o, &y) in dst.iter_mut().zip(x.row(c)) {
                    *o += v * y;
                }
            }
        }
        out
    }

    /// `selfᵀ · x`.
    pub fn matmul_transposed(&self, x: &Tensor) -> Tensor {
        assert_eq!(x.rows(), self.n, "sparse matmul dimension mismatch");
        let d = x.cols();
        let mut out = Tensor::zeros(self.n, d);
        for r in 0..self.n {
            let src = x.row(r).to_vec();
            for (c, v) in self.row(r) {
                for (o, y) in out.row_mut(c).iter_mut().zip(&src) {
                    *o += v * y;
                }
            }
        }
        debug_assert_eq!(out.cols(), d);
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }
}
