//! Trainable parameters, Glorot initialization and the Adam optimizer.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tape::{Gradients, Tape};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// A parameter value with its gradient accumulator and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub value: Tensor,
    pub grad: Tensor,
    first_moment: Tensor,
    second_moment: Tensor,
}

impl ParamTensor {
    pub fn new(value: Tensor) -> Self {
        let (r, c) = value.shape();
        Self { value, grad: Tensor::zeros(r, c), first_moment: Tensor::zeros(r, c), second_moment: Tensor::zeros(r, c) }
    }

    /// Quaternion tensor of `rows x quat_cols` quaternions, each real component drawn
    /// from `U(-b, b)` with `b = sqrt(6 / (rows + quat_cols))`.
    pub fn glorot(rows: usize, quat_cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(glorot_quaternion(rows, quat_cols, &mut rng))
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }
}

/// Uniform Glorot bound with fans counted in quaternion units.
pub fn glorot_bound(fan_out: usize, fan_in: usize) -> f64 {
    libm::sqrt(6.0 / (fan_in + fan_out) as f64)
}

/// `rows x 4·quat_cols` tensor in the quaternion row layout.
pub fn glorot_quaternion<R: Rng + ?Sized>(rows: usize, quat_cols: usize, rng: &mut R) -> Tensor {
    assert!(rows > 0 && quat_cols > 0, "glorot dimensions must be positive");
    let b = glorot_bound(rows, quat_cols);
    Tensor::from_fn(rows, 4 * quat_cols, |_, _| rng.gen_range(-b..=b))
}

/// Real `rows x cols` Glorot-uniform tensor.
pub fn glorot_real<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    assert!(rows > 0 && cols > 0, "glorot dimensions must be positive");
    let b = glorot_bound(rows, cols);
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-b..=b))
}

/// Named parameters addressed by [`ParamId`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    params: Vec<ParamTensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor) -> ParamId {
        self.names.push(name.to_string());
        self.params.push(ParamTensor::new(value));
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &ParamTensor {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut ParamTensor {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &ParamTensor)> {
        self.names.iter().zip(&self.params).enumerate().map(|(n, (name, p))| (ParamId(n), name.as_str(), p))
    }

    /// Adds the gradient of every parameter leaf on `tape` into its accumulator.
    pub fn accumulate(&mut self, tape: &Tape<'_>, grads: &Gradients) {
        for (id, var) in tape.params() {
            if let Some(g) = grads.wrt(var) {
                self.params[id.0].grad.add_assign(g);
            }
        }
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(ParamTensor::zero_grad);
    }

    /// Replaces the value of parameter `name`, keeping its shape.
    pub fn set_value(&mut self, name: &str, value: Tensor) -> Result<()> {
        let id = self.id(name).ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown parameter `{name}`")))?;
        let p = &mut self.params[id.0];
        if p.value.shape() != value.shape() {
            return Err(Error::ShapeMismatch { expected: p.value.shape(), got: value.shape() });
        }
        p.value = value;
        Ok(())
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self::with_hyper(lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { lr, beta1, beta2, eps, step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update from the accumulated gradients, then clears them.
    ///
    /// Nothing is modified if any gradient entry is non-finite.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        for (name, p) in store.names.iter().zip(&store.params) {
            if let Some(index) = p.grad.data().iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient { param: name.clone(), index });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        for p in &mut store.params {
            let ParamTensor { value, grad, first_moment, second_moment } = p;
            let it = value
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(first_moment.data_mut().iter_mut().zip(second_moment.data_mut()));
            for ((x, &g), (m, v)) in it {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *x -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
            }
            grad.data_mut().fill(0.0);
        }
        Ok(())
    }
}
