//! Quaternion algebra over scalars, vectors and matrices.
//!
//! Vectors and matrices are stored structure-of-arrays: one real array per
//! component. The Hamilton product of a matrix and a vector is then four real
//! matrix-vector passes per output component, which is the same arithmetic as
//! the real 4x4-block form
//!
//! ```text
//! | Wr -Wi -Wj -Wk |   | pr |
//! | Wi  Wr -Wk  Wj | * | pi |
//! | Wj  Wk  Wr -Wi |   | pj |
//! | Wk -Wj  Wi  Wr |   | pk |
//! ```

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg};

use crate::{Error, Result};

/// A single quaternion `r + i·i + j·j + k·k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub r: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(r: f64, i: f64, j: f64, k: f64) -> Self {
        Self { r, i, j, k }
    }

    pub fn scale(self, lambda: f64) -> Self {
        Self::new(lambda * self.r, lambda * self.i, lambda * self.j, lambda * self.k)
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.r, -self.i, -self.j, -self.k)
    }

    pub fn norm_squared(self) -> f64 {
        self.r * self.r + self.i * self.i + self.j * self.j + self.k * self.k
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_squared())
    }

    /// Unit quaternion in the direction of `self`.
    pub fn normalize(self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm { index: 0 });
        }
        Ok(self.scale(1.0 / n))
    }

    /// Hamilton product `self ⊗ p`.
    pub fn hamilton(self, p: Self) -> Self {
        let q = self;
        Self::new(
            q.r * p.r - q.i * p.i - q.j * p.j - q.k * p.k,
            q.i * p.r + q.r * p.i - q.k * p.j + q.j * p.k,
            q.j * p.r + q.k * p.i + q.r * p.j - q.i * p.k,
            q.k * p.r - q.j * p.i + q.i * p.j + q.r * p.k,
        )
    }

    pub fn dot(self, p: Self) -> f64 {
        self.r * p.r + self.i * p.i + self.j * p.j + self.k * p.k
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.i.is_finite() && self.j.is_finite() && self.k.is_finite()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.r, self.i, self.j, self.k]
    }
}

impl Add for Quaternion {
    type Output = Self;

    fn add(self, p: Self) -> Self {
        Self::new(self.r + p.r, self.i + p.i, self.j + p.j, self.k + p.k)
    }
}

impl Neg for Quaternion {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// `q * p` is the Hamilton product.
impl Mul for Quaternion {
    type Output = Self;

    fn mul(self, p: Self) -> Self {
        self.hamilton(p)
    }
}

/// `n` quaternions held as four real component vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionVector {
    r: Vec<f64>,
    i: Vec<f64>,
    j: Vec<f64>,
    k: Vec<f64>,
}

impl QuaternionVector {
    pub fn from_components(r: Vec<f64>, i: Vec<f64>, j: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        let n = r.len();
        for other in [i.len(), j.len(), k.len()] {
            if other != n {
                return Err(Error::LengthMismatch { left: n, right: other });
            }
        }
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Self { r, i, j, k })
    }

    pub fn from_quaternions(qs: &[Quaternion]) -> Result<Self> {
        Self::from_components(
            qs.iter().map(|q| q.r).collect(),
            qs.iter().map(|q| q.i).collect(),
            qs.iter().map(|q| q.j).collect(),
            qs.iter().map(|q| q.k).collect(),
        )
    }

    /// Reads the `[r.. | i.. | j.. | k..]` block layout used by [`crate::tensor::Tensor`] rows.
    pub fn from_blocks(row: &[f64]) -> Result<Self> {
        if !row.len().is_multiple_of(4) {
            return Err(Error::LengthMismatch { left: row.len(), right: 4 * (row.len() / 4) });
        }
        let n = row.len() / 4;
        Self::from_components(
            row[..n].to_vec(),
            row[n..2 * n].to_vec(),
            row[2 * n..3 * n].to_vec(),
            row[3 * n..].to_vec(),
        )
    }

    pub fn to_blocks(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.len());
        for c in self.components() {
            out.extend_from_slice(c);
        }
        out
    }

    /// All entries equal to `q`.
    pub fn splat(q: Quaternion, n: usize) -> Result<Self> {
        Self::from_components(vec![q.r; n], vec![q.i; n], vec![q.j; n], vec![q.k; n])
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn get(&self, t: usize) -> Quaternion {
        Quaternion::new(self.r[t], self.i[t], self.j[t], self.k[t])
    }

    pub fn components(&self) -> [&[f64]; 4] {
        [&self.r, &self.i, &self.j, &self.k]
    }

    pub fn iter(&self) -> impl Iterator<Item = Quaternion> + '_ {
        (0..self.len()).map(|t| self.get(t))
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(())
    }

    fn zip_components(&self, other: &Self, f: impl Fn(&[f64], &[f64]) -> Vec<f64>) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self { r: f(&self.r, &other.r), i: f(&self.i, &other.i), j: f(&self.j, &other.j), k: f(&self.k, &other.k) })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_components(other, |a, b| a.iter().zip(b).map(|(x, y)| x + y).collect())
    }

    pub fn scale(&self, lambda: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| lambda * x).collect();
        Self { r: s(&self.r), i: s(&self.i), j: s(&self.j), k: s(&self.k) }
    }

    pub fn conjugate(&self) -> Self {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect();
        Self { r: self.r.clone(), i: neg(&self.i), j: neg(&self.j), k: neg(&self.k) }
    }

    /// Entry-wise Hamilton product `self ⊗ p`.
    pub fn hamilton(&self, p: &Self) -> Result<Self> {
        self.check_len(p)?;
        let n = self.len();
        let mut out = Self { r: vec![0.0; n], i: vec![0.0; n], j: vec![0.0; n], k: vec![0.0; n] };
        for t in 0..n {
            let h = self.get(t).hamilton(p.get(t));
            out.r[t] = h.r;
            out.i[t] = h.i;
            out.j[t] = h.j;
            out.k[t] = h.k;
        }
        Ok(out)
    }

    /// Quaternion inner product: the sum of the four component dot products.
    pub fn inner(&self, p: &Self) -> Result<f64> {
        self.check_len(p)?;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        Ok(dot(&self.r, &p.r) + dot(&self.i, &p.i) + dot(&self.j, &p.j) + dot(&self.k, &p.k))
    }

    /// Component-wise product `(r∘r', i∘i', j∘j', k∘k')`.
    pub fn elementwise(&self, p: &Self) -> Result<Self> {
        self.zip_components(p, |a, b| a.iter().zip(b).map(|(x, y)| x * y).collect())
    }

    /// Normalizes every entry to a unit quaternion independently.
    pub fn normalize_entries(&self) -> Result<Self> {
        let mut qs = Vec::with_capacity(self.len());
        for (index, q) in self.iter().enumerate() {
            let n = q.norm();
            if n == 0.0 {
                return Err(Error::ZeroNorm { index });
            }
            qs.push(q.scale(1.0 / n));
        }
        Self::from_quaternions(&qs)
    }
}

/// An `m x n` quaternion matrix held as four real row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionMatrix {
    rows: usize,
    cols: usize,
    r: Vec<f64>,
    i: Vec<f64>,
    j: Vec<f64>,
    k: Vec<f64>,
}

impl QuaternionMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let z = vec![0.0; rows * cols];
        Self { rows, cols, r: z.clone(), i: z.clone(), j: z.clone(), k: z }
    }

    /// Quaternion identity: ones on the real diagonal.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for d in 0..n {
            m.r[d * n + d] = 1.0;
        }
        m
    }

    pub fn from_components(
        rows: usize,
        cols: usize,
        r: Vec<f64>,
        i: Vec<f64>,
        j: Vec<f64>,
        k: Vec<f64>,
    ) -> Result<Self> {
        for c in [&r, &i, &j, &k] {
            if c.len() != rows * cols {
                return Err(Error::LengthMismatch { left: rows * cols, right: c.len() });
            }
        }
        Ok(Self { rows, cols, r, i, j, k })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut m = Self::zeros(rows, cols);
        for a in 0..rows {
            for b in 0..cols {
                m.set(a, b, f(a, b));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Quaternion {
        let at = row * self.cols + col;
        Quaternion::new(self.r[at], self.i[at], self.j[at], self.k[at])
    }

    pub fn set(&mut self, row: usize, col: usize, q: Quaternion) {
        let at = row * self.cols + col;
        self.r[at] = q.r;
        self.i[at] = q.i;
        self.j[at] = q.j;
        self.k[at] = q.k;
    }

    pub fn components(&self) -> [&[f64]; 4] {
        [&self.r, &self.i, &self.j, &self.k]
    }

    /// `W ⊗ p` computed as four real matrix-vector passes per output component.
    pub fn matvec_hamilton(&self, p: &QuaternionVector) -> Result<QuaternionVector> {
        if p.len() != self.cols {
            return Err(Error::LengthMismatch { left: self.cols, right: p.len() });
        }
        let (m, n) = (self.rows, self.cols);
        let [pr, pi, pj, pk] = p.components();
        let gemv = |w: &[f64], x: &[f64], out: &mut [f64], sign: f64| {
            for (a, o) in out.iter_mut().enumerate() {
                let row = &w[a * n..(a + 1) * n];
                *o += sign * row.iter().zip(x).map(|(u, v)| u * v).sum::<f64>();
            }
        };
        let (mut yr, mut yi, mut yj, mut yk) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        let (wr, wi, wj, wk) = (&self.r, &self.i, &self.j, &self.k);

        gemv(wr, pr, &mut yr, 1.0);
        gemv(wi, pi, &mut yr, -1.0);
        gemv(wj, pj, &mut yr, -1.0);
        gemv(wk, pk, &mut yr, -1.0);

        gemv(wi, pr, &mut yi, 1.0);
        gemv(wr, pi, &mut yi, 1.0);
        gemv(wk, pj, &mut yi, -1.0);
        gemv(wj, pk, &mut yi, 1.0);

        gemv(wj, pr, &mut yj, 1.0);
        gemv(wk, pi, &mut yj, 1.0);
        gemv(wr, pj, &mut yj, 1.0);
        gemv(wi, pk, &mut yj, -1.0);

        gemv(wk, pr, &mut yk, 1.0);
        gemv(wj, pi, &mut yk, -1.0);
        gemv(wi, pj, &mut yk, 1.0);
        gemv(wr, pk, &mut yk, 1.0);

        QuaternionVector::from_components(yr, yi, yj, yk)
    }

    /// The real `4m x 4n` block matrix representing `p ↦ W ⊗ p`, row-major.
    pub fn to_real_block(&self) -> Vec<f64> {
        let (m, n) = (self.rows, self.cols);
        let mut out = vec![0.0; 16 * m * n];
        let comps = self.components();
        for (a, row) in HAMILTON_BLOCKS.iter().enumerate() {
            for (b, &(c, sign)) in row.iter().enumerate() {
                for x in 0..m {
                    for y in 0..n {
                        out[(a * m + x) * 4 * n + b * n + y] = sign * comps[c][x * n + y];
                    }
                }
            }
        }
        out
    }
}

/// Block `(a, b)` of the real form of `W ⊗ ·` is `sign * W_c`, stored as `(c, sign)`
/// with components ordered `r, i, j, k`.
pub(crate) const HAMILTON_BLOCKS: [[(usize, f64); 4]; 4] = [
    [(0, 1.0), (1, -1.0), (2, -1.0), (3, -1.0)],
    [(1, 1.0), (0, 1.0), (3, -1.0), (2, 1.0)],
    [(2, 1.0), (3, 1.0), (0, 1.0), (1, -1.0)],
    [(3, 1.0), (2, -1.0), (1, 1.0), (0, 1.0)],
];
