//! QuatE scoring on every layer and the weighted cross-entropy objective.
//!
//! Layer `k` scores a triple as `(h_k ⊗ r̂_k) · t_k`, where `r̂_k` has every
//! quaternion entry scaled to unit norm. The final score is `Σ_k α_k f_k` and
//! the training loss is `Σ_k α_k L_k`, with `L_k` the summed binary
//! cross-entropy of the logits `f_k` on a labeled batch.

use alloc::vec::Vec;

use crate::dataset::{LabeledBatch, Triple};
use crate::encoder::{LayerState, LayerVars};
use crate::quaternion::QuaternionVector;
use crate::tape::{softplus, Tape, Var};
use crate::{Error, Result};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Per-layer score weights `α_0..α_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreWeights(Vec<f64>);

impl ScoreWeights {
    /// `α_0` on the input layer, the rest split evenly over `layers` graph layers.
    pub fn from_alpha0(alpha0: f64, layers: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha0) {
            return Err(Error::InvalidConfig(alloc::format!("alpha0 must lie in [0, 1], got {alpha0}")));
        }
        if layers == 0 {
            return Self::new(alloc::vec![alpha0]);
        }
        let rest = (1.0 - alpha0) / layers as f64;
        let mut w = alloc::vec![rest; layers + 1];
        w[0] = alpha0;
        Self::new(w)
    }

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(bad) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidConfig(alloc::format!("score weight {bad} outside [0, 1]")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidConfig(alloc::format!("score weights sum to {sum}, expected 1")));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of graph layers `K`.
    pub fn layers(&self) -> usize {
        self.0.len() - 1
    }
}

/// `(h ⊗ r̂) · t` for one layer.
pub fn score_layer(head: &QuaternionVector, relation: &QuaternionVector, tail: &QuaternionVector) -> Result<f64> {
    head.hamilton(&relation.normalize_entries()?)?.inner(tail)
}

/// Per-layer scores `f_0..f_K` of one triple.
pub fn layer_scores(state: &LayerState, t: Triple) -> Result<Vec<f64>> {
    (0..state.num_layers())
        .map(|k| score_layer(&state.entity(k, t.head), &state.relation(k, t.relation), &state.entity(k, t.tail)))
        .collect()
}

/// Weighted score `Σ_k α_k f_k`.
pub fn score(state: &LayerState, weights: &ScoreWeights, t: Triple) -> Result<f64> {
    check_layers(state.num_layers(), weights)?;
    let f = layer_scores(state, t)?;
    Ok(f.iter().zip(weights.as_slice()).map(|(f, a)| a * f).sum())
}

/// Binary cross-entropy of one logit against a label in `{0, 1}`.
pub fn cross_entropy(logit: f64, label: f64) -> f64 {
    softplus(logit) - label * logit
}

/// `Σ_k α_k Σ_n BCE(f_k(n), l_n)` evaluated directly, without a tape.
pub fn loss(state: &LayerState, weights: &ScoreWeights, batch: &LabeledBatch) -> Result<f64> {
    check_layers(state.num_layers(), weights)?;
    let mut total = 0.0;
    for (n, (&t, &l)) in batch.triples.iter().zip(&batch.labels).enumerate() {
        for (f, a) in layer_scores(state, t)?.into_iter().zip(weights.as_slice()) {
            if !f.is_finite() {
                return Err(Error::NonFiniteScore { index: n });
            }
            total += a * cross_entropy(f, l);
        }
    }
    Ok(total)
}

/// Records the per-layer scores of `triples` as `n x 1` columns.
pub fn record_scores(tape: &mut Tape<'_>, layers: &[LayerVars], triples: &[Triple]) -> Result<Vec<Var>> {
    let rows: Vec<(usize, usize, usize)> =
        triples.iter().map(|t| (t.head as usize, t.relation as usize, t.tail as usize)).collect();
    let mut out = Vec::with_capacity(layers.len());
    for layer in layers {
        let unit = tape.quat_normalize(layer.relations)?;
        let s = tape.triple_scores(layer.entities, unit, rows.clone());
        if let Some(index) = tape.value(s).data().iter().position(|f| !f.is_finite()) {
            return Err(Error::NonFiniteScore { index });
        }
        out.push(s);
    }
    Ok(out)
}

/// Records `Σ_k α_k L_k` on the tape and returns the scalar loss node.
pub fn record_loss(
    tape: &mut Tape<'_>,
    layers: &[LayerVars],
    weights: &ScoreWeights,
    batch: &LabeledBatch,
) -> Result<Var> {
    check_layers(layers.len(), weights)?;
    if batch.is_empty() {
        return Err(Error::Empty);
    }
    let scores = record_scores(tape, layers, &batch.triples)?;
    let mut total: Option<Var> = None;
    for (s, &a) in scores.into_iter().zip(weights.as_slice()) {
        let l = tape.bce_with_logits(s, batch.labels.clone());
        let l = tape.scale(l, a);
        total = Some(match total {
            None => l,
            Some(acc) => tape.add(acc, l),
        });
    }
    Ok(total.expect("at least one layer"))
}

fn check_layers(got: usize, weights: &ScoreWeights) -> Result<()> {
    if got != weights.as_slice().len() {
        return Err(Error::LengthMismatch { left: got, right: weights.as_slice().len() });
    }
    Ok(())
}
