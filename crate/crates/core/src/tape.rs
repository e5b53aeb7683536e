//! Reverse-mode differentiation over whole-tensor operations.
//!
//! A [`Tape`] records every operation in execution order together with the
//! forward values it needs. Because nodes can only refer to earlier nodes the
//! record is already topologically sorted, so [`Tape::backward`] is a single
//! reverse sweep that visits each node once.
//!
//! Quaternion operations act on the `[r | i | j | k]` row layout described in
//! [`crate::tensor`]. Gradients are taken with respect to the four real
//! components independently.

use alloc::vec;
use alloc::vec::Vec;

use crate::optim::ParamId;
use crate::quaternion::HAMILTON_BLOCKS;
use crate::sparse::CsrMatrix;
use crate::tensor::{dot, Tensor};
use crate::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<'g> {
    Constant,
    Param(ParamId),
    Gather { src: Var, idx: Vec<usize> },
    Select { sources: Vec<Var>, picks: Vec<(usize, usize)> },
    SpMM { adj: &'g CsrMatrix, x: Var },
    QuatLinear { x: Var, w: Var, block: Tensor },
    Linear { x: Var, w: Var },
    Tanh(Var),
    Relu(Var),
    Sigmoid(Var),
    Mul(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    Sum(Var),
    QuatNormalize { x: Var, norms: Vec<f64> },
    Hamilton(Var, Var),
    RowInner(Var, Var),
    TripleScores { entities: Var, relations: Var, triples: Vec<(usize, usize, usize)> },
    BceWithLogits { scores: Var, labels: Vec<f64> },
}

#[derive(Debug)]
struct Node<'g> {
    value: Tensor,
    op: Op<'g>,
}

/// Operation record for one forward pass. `'g` is the lifetime of the graph
/// adjacencies referenced by sparse products.
#[derive(Debug, Default)]
pub struct Tape<'g> {
    nodes: Vec<Node<'g>>,
}

/// Gradients of a scalar with respect to every node of a tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

impl<'g> Tape<'g> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op<'g>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant)
    }

    /// Leaf whose gradient is reported back to parameter `id`.
    pub fn param(&mut self, id: ParamId, value: Tensor) -> Var {
        self.push(value, Op::Param(id))
    }

    /// Parameter leaves in recording order.
    pub fn params(&self) -> impl Iterator<Item = (ParamId, Var)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(n, node)| match node.op {
            Op::Param(id) => Some((id, Var(n))),
            _ => None,
        })
    }

    pub fn gather_rows(&mut self, src: Var, idx: Vec<usize>) -> Var {
        let s = self.value(src);
        let mut out = Tensor::zeros(idx.len(), s.cols());
        for (dst, &i) in idx.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(s.row(i));
        }
        self.push(out, Op::Gather { src, idx })
    }

    /// Row `n` of the output is row `picks[n].1` of `sources[picks[n].0]`.
    pub fn select_rows(&mut self, sources: &[Var], picks: Vec<(usize, usize)>) -> Var {
        let cols = self.value(sources[0]).cols();
        assert!(sources.iter().all(|&s| self.value(s).cols() == cols), "select_rows column mismatch");
        let mut out = Tensor::zeros(picks.len(), cols);
        for (dst, &(s, r)) in picks.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(self.value(sources[s]).row(r));
        }
        self.push(out, Op::Select { sources: sources.to_vec(), picks })
    }

    pub fn spmm(&mut self, adj: &'g CsrMatrix, x: Var) -> Var {
        let out = adj.matmul(self.value(x));
        self.push(out, Op::SpMM { adj, x })
    }

    /// Row-wise `W ⊗ x_row` for quaternion weights `W` of shape `d_out x 4·d_in`.
    pub fn quat_linear(&mut self, x: Var, w: Var) -> Var {
        let block = quat_block(self.value(w));
        let xv = self.value(x);
        assert_eq!(xv.cols(), block.cols(), "quat_linear input width mismatch");
        let out = xv.matmul_nt(&block);
        self.push(out, Op::QuatLinear { x, w, block })
    }

    /// Row-wise real `W · x_row` for `W` of shape `out x in`.
    pub fn linear(&mut self, x: Var, w: Var) -> Var {
        let out = self.value(x).matmul_nt(self.value(w));
        self.push(out, Op::Linear { x, w })
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.value(x).map(libm::tanh);
        self.push(out, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| v.max(0.0));
        self.push(out, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.value(x).map(sigmoid);
        self.push(out, Op::Sigmoid(x))
    }

    /// Element-wise product of equal-shape tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "mul shape mismatch");
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
        let out = Tensor::from_vec(av.rows(), av.cols(), data).expect("shape");
        self.push(out, Op::Mul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(out, Op::Add(a, b))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let out = self.value(x).map(|v| c * v);
        self.push(out, Op::Scale(x, c))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    /// Scales every quaternion entry of every row to unit norm.
    pub fn quat_normalize(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let d = xv.quat_dim();
        let mut out = xv.clone();
        let mut norms = Vec::with_capacity(xv.rows() * d);
        for r in 0..xv.rows() {
            let row = out.row_mut(r);
            for t in 0..d {
                let n = libm::sqrt((0..4).map(|c| row[c * d + t] * row[c * d + t]).sum());
                if n == 0.0 {
                    return Err(Error::ZeroNorm { index: r * d + t });
                }
                for c in 0..4 {
                    row[c * d + t] /= n;
                }
                norms.push(n);
            }
        }
        Ok(self.push(out, Op::QuatNormalize { x, norms }))
    }

    /// Row-wise, entry-wise Hamilton product `a ⊗ b`.
    pub fn hamilton(&mut self, a: Var, b: Var) -> Var {
        let out = hamilton_rows(self.value(a), self.value(b), false, false);
        self.push(out, Op::Hamilton(a, b))
    }

    /// Per-row quaternion inner product, giving an `n x 1` column.
    pub fn row_inner(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "row_inner shape mismatch");
        let out = Tensor::from_fn(av.rows(), 1, |r, _| dot(av.row(r), bv.row(r)));
        self.push(out, Op::RowInner(a, b))
    }

    /// `(h ⊗ r) · t` for every `(h, r, t)` row triple, as an `n x 1` column.
    ///
    /// Equivalent to gathering the rows, taking their Hamilton product and the
    /// row inner product, without materializing the gathered rows.
    pub fn triple_scores(&mut self, entities: Var, relations: Var, triples: Vec<(usize, usize, usize)>) -> Var {
        let (ev, rv) = (self.value(entities), self.value(relations));
        assert_eq!(ev.cols(), rv.cols(), "triple_scores width mismatch");
        let d = ev.quat_dim();
        let out = Tensor::from_fn(triples.len(), 1, |n, _| {
            let (h, r, t) = triples[n];
            let (hr, tr) = (ev.row(h), ev.row(t));
            let rr = rv.row(r);
            (0..d)
                .map(|q| {
                    let p = hamilton_entry(hr, rr, d, q, 1.0, 1.0);
                    p[0] * tr[q] + p[1] * tr[d + q] + p[2] * tr[2 * d + q] + p[3] * tr[3 * d + q]
                })
                .sum()
        });
        self.push(out, Op::TripleScores { entities, relations, triples })
    }

    /// `Σ_n -[l_n log σ(s_n) + (1 - l_n) log(1 - σ(s_n))]` over a column of logits.
    pub fn bce_with_logits(&mut self, scores: Var, labels: Vec<f64>) -> Var {
        let s = self.value(scores);
        assert_eq!(s.len(), labels.len(), "one label per score");
        let loss = s.data().iter().zip(&labels).map(|(&f, &l)| softplus(f) - l * f).sum();
        self.push(Tensor::scalar(loss), Op::BceWithLogits { scores, labels })
    }

    /// Gradients of the scalar node `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let node = self.nodes.get(loss.0).ok_or(Error::UnknownNode { node: loss.0 })?;
        let (rows, cols) = node.value.shape();
        if rows * cols != 1 {
            return Err(Error::NonScalarLoss { rows, cols });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for n in (0..=loss.0).rev() {
            let Some(g) = grads[n].take() else { continue };
            let node = &self.nodes[n];
            let out = &node.value;
            match &node.op {
                Op::Constant | Op::Param(_) => {}
                Op::Gather { src, idx } => {
                    let mut dx = Tensor::zeros(self.value(*src).rows(), out.cols());
                    for (row, &i) in idx.iter().enumerate() {
                        add_row(dx.row_mut(i), g.row(row));
                    }
                    accumulate(&mut grads, *src, dx);
                }
                Op::Select { sources, picks } => {
                    let mut parts: Vec<Tensor> =
                        sources.iter().map(|&s| Tensor::zeros(self.value(s).rows(), out.cols())).collect();
                    for (row, &(s, i)) in picks.iter().enumerate() {
                        add_row(parts[s].row_mut(i), g.row(row));
                    }
                    for (&s, part) in sources.iter().zip(parts) {
                        accumulate(&mut grads, s, part);
                    }
                }
                Op::SpMM { adj, x } => accumulate(&mut grads, *x, adj.matmul_transposed(&g)),
                Op::QuatLinear { x, w, block } => {
                    let dx = g.matmul(block);
                    let dblock = g.matmul_tn(self.value(*x));
                    let dw = fold_quat_block(&dblock, self.value(*w).shape());
                    accumulate(&mut grads, *x, dx);
                    accumulate(&mut grads, *w, dw);
                }
                Op::Linear { x, w } => {
                    let dx = g.matmul(self.value(*w));
                    let dw = g.matmul_tn(self.value(*x));
                    accumulate(&mut grads, *x, dx);
                    accumulate(&mut grads, *w, dw);
                }
                Op::Tanh(x) => {
                    let dx = zip_map(&g, out, |g, y| g * (1.0 - y * y));
                    accumulate(&mut grads, *x, dx);
                }
                Op::Relu(x) => {
                    let dx = zip_map(&g, out, |g, y| if y > 0.0 { g } else { 0.0 });
                    accumulate(&mut grads, *x, dx);
                }
                Op::Sigmoid(x) => {
                    let dx = zip_map(&g, out, |g, y| g * y * (1.0 - y));
                    accumulate(&mut grads, *x, dx);
                }
                Op::Mul(a, b) => {
                    let da = zip_map(&g, self.value(*b), |g, y| g * y);
                    let db = zip_map(&g, self.value(*a), |g, y| g * y);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g.clone());
                }
                Op::Scale(x, c) => accumulate(&mut grads, *x, g.map(|v| c * v)),
                Op::Sum(x) => {
                    let (r, c) = self.value(*x).shape();
                    accumulate(&mut grads, *x, Tensor::filled(r, c, g.item()));
                }
                Op::QuatNormalize { x, norms } => {
                    let d = out.quat_dim();
                    let mut dx = g.clone();
                    for r in 0..out.rows() {
                        let (u, gr) = (out.row(r), g.row(r));
                        let dst = dx.row_mut(r);
                        for t in 0..d {
                            let proj: f64 = (0..4).map(|c| u[c * d + t] * gr[c * d + t]).sum();
                            let n = norms[r * d + t];
                            for c in 0..4 {
                                let at = c * d + t;
                                dst[at] = (gr[at] - u[at] * proj) / n;
                            }
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Hamilton(a, b) => {
                    // Right multiplication by b is adjoint to right multiplication by b*,
                    // and left multiplication by a to left multiplication by a*.
                    let da = hamilton_rows(&g, self.value(*b), false, true);
                    let db = hamilton_rows(self.value(*a), &g, true, false);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::RowInner(a, b) => {
                    let scale_rows = |t: &Tensor| Tensor::from_fn(t.rows(), t.cols(), |r, c| g.get(r, 0) * t.get(r, c));
                    let da = scale_rows(self.value(*b));
                    let db = scale_rows(self.value(*a));
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::TripleScores { entities, relations, triples } => {
                    // <h ⊗ r, t> = <h, t ⊗ r*> = <r, h* ⊗ t>.
                    let (ev, rv) = (self.value(*entities), self.value(*relations));
                    let d = ev.quat_dim();
                    let mut de = Tensor::zeros(ev.rows(), ev.cols());
                    let mut dr = Tensor::zeros(rv.rows(), rv.cols());
                    for (n, &(h, r, t)) in triples.iter().enumerate() {
                        let gn = g.get(n, 0);
                        if gn == 0.0 {
                            continue;
                        }
                        let (hr, rr, tr) = (ev.row(h), rv.row(r), ev.row(t));
                        for q in 0..d {
                            let at = [q, d + q, 2 * d + q, 3 * d + q];
                            let hxr = hamilton_entry(hr, rr, d, q, 1.0, 1.0);
                            let txr = hamilton_entry(tr, rr, d, q, 1.0, -1.0);
                            let hxt = hamilton_entry(hr, tr, d, q, -1.0, 1.0);
                            for c in 0..4 {
                                de.data_mut()[t * ev.cols() + at[c]] += gn * hxr[c];
                                de.data_mut()[h * ev.cols() + at[c]] += gn * txr[c];
                                dr.data_mut()[r * rv.cols() + at[c]] += gn * hxt[c];
                            }
                        }
                    }
                    accumulate(&mut grads, *entities, de);
                    accumulate(&mut grads, *relations, dr);
                }
                Op::BceWithLogits { scores, labels } => {
                    let s = self.value(*scores);
                    let gl = g.item();
                    let data = s.data().iter().zip(labels).map(|(&f, &l)| gl * (sigmoid(f) - l)).collect();
                    let ds = Tensor::from_vec(s.rows(), s.cols(), data).expect("shape");
                    accumulate(&mut grads, *scores, ds);
                }
            }
            grads[n] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot => *slot = Some(g),
    }
}

fn add_row(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_vec(a.rows(), a.cols(), data).expect("shape")
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

/// Real `4·d_out x 4·d_in` form of quaternion weights stored as `d_out x 4·d_in`.
fn quat_block(w: &Tensor) -> Tensor {
    let (d_out, d_in) = (w.rows(), w.quat_dim());
    let mut out = Tensor::zeros(4 * d_out, 4 * d_in);
    for (a, row) in HAMILTON_BLOCKS.iter().enumerate() {
        for (b, &(c, sign)) in row.iter().enumerate() {
            for o in 0..d_out {
                let src = &w.row(o)[c * d_in..(c + 1) * d_in];
                let dst = &mut out.row_mut(a * d_out + o)[b * d_in..(b + 1) * d_in];
                for (x, y) in dst.iter_mut().zip(src) {
                    *x = sign * y;
                }
            }
        }
    }
    out
}

/// Adjoint of [`quat_block`]: sums block gradients back onto the four weight components.
fn fold_quat_block(dblock: &Tensor, w_shape: (usize, usize)) -> Tensor {
    let (d_out, d_in) = (w_shape.0, w_shape.1 / 4);
    let mut dw = Tensor::zeros(w_shape.0, w_shape.1);
    for (a, row) in HAMILTON_BLOCKS.iter().enumerate() {
        for (b, &(c, sign)) in row.iter().enumerate() {
            for o in 0..d_out {
                let src = &dblock.row(a * d_out + o)[b * d_in..(b + 1) * d_in];
                let dst = &mut dw.row_mut(o)[c * d_in..(c + 1) * d_in];
                for (x, y) in dst.iter_mut().zip(src) {
                    *x += sign * y;
                }
            }
        }
    }
    dw
}

/// Hamilton product of quaternion entry `t` of two rows in the block layout,
/// with the signs of the imaginary parts of each operand scaled by `sa`, `sb`.
#[inline]
fn hamilton_entry(x: &[f64], y: &[f64], d: usize, t: usize, sa: f64, sb: f64) -> [f64; 4] {
    let (qr, qi, qj, qk) = (x[t], sa * x[d + t], sa * x[2 * d + t], sa * x[3 * d + t]);
    let (pr, pi, pj, pk) = (y[t], sb * y[d + t], sb * y[2 * d + t], sb * y[3 * d + t]);
    [
        qr * pr - qi * pi - qj * pj - qk * pk,
        qi * pr + qr * pi - qk * pj + qj * pk,
        qj * pr + qk * pi + qr * pj - qi * pk,
        qk * pr - qj * pi + qi * pj + qr * pk,
    ]
}

/// Row-wise Hamilton product with optional conjugation of either operand.
pub(crate) fn hamilton_rows(a: &Tensor, b: &Tensor, conj_a: bool, conj_b: bool) -> Tensor {
    assert_eq!(a.shape(), b.shape(), "hamilton shape mismatch");
    let d = a.quat_dim();
    let sa = if conj_a { -1.0 } else { 1.0 };
    let sb = if conj_b { -1.0 } else { 1.0 };
    let mut out = Tensor::zeros(a.rows(), a.cols());
    for r in 0..a.rows() {
        let (x, y) = (a.row(r), b.row(r));
        let dst = out.row_mut(r);
        for t in 0..d {
            let p = hamilton_entry(x, y, d, t, sa, sb);
            for (c, v) in p.into_iter().enumerate() {
                dst[c * d + t] = v;
            }
        }
    }
    out
}
