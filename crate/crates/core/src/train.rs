//! Mini-batch training with negative sampling, Adam and best-checkpoint selection.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{FilterIndex, NegativeSampler, Split, TripleStore};
use crate::decoder::{record_loss, ScoreWeights};
use crate::encoder::{Activation, Encoder, EncoderConfig, LayerState, ModelGraphs, Variant};
use crate::eval::{evaluate, LayerScorer, Metrics, RankingReport};
use crate::optim::{Adam, ParamStore};
use crate::tape::Tape;
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Negatives per positive.
    pub negatives: usize,
    /// Fraction of relation pairs kept in the relation-focused view.
    pub beta: f64,
    pub layers: usize,
    pub dim: usize,
    pub alpha0: f64,
    pub seed: u64,
    /// Evaluate on the selection split every this many epochs (0 disables).
    pub eval_every: usize,
    /// Stop after this many evaluations without improvement.
    pub patience: Option<usize>,
    /// Redraw negatives that are training triples.
    pub filter_negatives: bool,
    pub variant: Variant,
    pub activation: Activation,
    pub selection_split: Split,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            batch_size: 1024,
            epochs: 100,
            negatives: 10,
            beta: 0.2,
            layers: 2,
            dim: 32,
            alpha0: 0.6,
            seed: 0,
            eval_every: 1,
            patience: None,
            filter_negatives: true,
            variant: Variant::TwoView,
            activation: Activation::Tanh,
            selection_split: Split::Valid,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr must be a finite non-negative number");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.negatives == 0 {
            return bad("negatives must be positive");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta must lie in (0, 1]");
        }
        if self.patience == Some(0) {
            return bad("patience must be positive");
        }
        self.encoder().validate()?;
        ScoreWeights::from_alpha0(self.alpha0, self.layers)?;
        Ok(())
    }

    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig { layers: self.layers, dim: self.dim, variant: self.variant, activation: self.activation }
    }
}

/// Encoder parameters and score weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub encoder: Encoder,
    pub params: ParamStore,
    pub weights: ScoreWeights,
}

impl Model {
    /// Glorot-initialized model; the same seed gives the same parameters.
    pub fn init(config: &TrainConfig, graphs: &ModelGraphs, num_entities: usize, num_relations: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::init_with(config, graphs, num_entities, num_relations, &mut rng)
    }

    fn init_with(
        config: &TrainConfig,
        graphs: &ModelGraphs,
        num_entities: usize,
        num_relations: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let encoder = Encoder::init(config.encoder(), graphs, num_entities, num_relations, &mut params, rng)?;
        let weights = ScoreWeights::from_alpha0(config.alpha0, config.layers)?;
        Ok(Self { encoder, params, weights })
    }

    pub fn encode(&self, graphs: &ModelGraphs) -> LayerState {
        self.encoder.encode(&self.params, graphs)
    }

    /// Filtered ranking of `triples` against every entity.
    pub fn evaluate(
        &self,
        graphs: &ModelGraphs,
        triples: &[crate::dataset::Triple],
        filter: &FilterIndex,
    ) -> Result<RankingReport> {
        let state = self.encode(graphs);
        let scorer = LayerScorer::new(&state, &self.weights)?;
        evaluate(&scorer, triples, filter)
    }

    /// Replaces every parameter by name; shapes must match.
    pub fn load_params(&mut self, named: &[(alloc::string::String, Tensor)]) -> Result<()> {
        if named.len() != self.params.len() {
            return Err(Error::LengthMismatch { left: named.len(), right: self.params.len() });
        }
        for (name, value) in named {
            self.params.set_value(name, value.clone())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean loss per mini-batch.
    pub loss: f64,
    pub eval: Option<Metrics>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best selection MRR, or the final ones when no evaluation ran.
    pub best: Model,
    pub best_epoch: usize,
    pub best_metrics: Option<Metrics>,
    pub log: Vec<EpochRecord>,
    pub stopped_early: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("training diverged at epoch {epoch}: {cause}")]
    Diverged { epoch: usize, cause: Error, last_good: Box<Model> },
}

/// Trains from a fresh initialization, calling `observe` after every epoch.
pub fn train(
    config: &TrainConfig,
    data: &TripleStore,
    num_entities: usize,
    num_relations: usize,
    graphs: &ModelGraphs,
    filter: &FilterIndex,
    mut observe: impl FnMut(&EpochRecord),
) -> core::result::Result<TrainOutcome, TrainError> {
    config.validate()?;
    if data.train().is_empty() {
        return Err(Error::Empty.into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = Model::init_with(config, graphs, num_entities, num_relations, &mut rng)?;
    let sampler = NegativeSampler::new(num_entities, config.negatives);
    let reject = config.filter_negatives.then(|| data.train_set());
    let selection = data.split(config.selection_split);
    let mut adam = Adam::new(config.lr);

    let mut order: Vec<usize> = (0..data.train().len()).collect();
    let mut best = model.clone();
    let mut best_epoch = 0;
    let mut best_metrics: Option<Metrics> = None;
    let mut since_best = 0;
    let mut log = Vec::with_capacity(config.epochs);
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let positives: Vec<_> = chunk.iter().map(|&i| data.train()[i]).collect();
            let batch = sampler.sample(&positives, reject, &mut rng);
            let step = (|| -> Result<f64> {
                let mut tape = Tape::new();
                let layers = model.encoder.forward(&mut tape, &model.params, graphs);
                let loss = record_loss(&mut tape, &layers, &model.weights, &batch)?;
                let value = tape.value(loss).item();
                if !value.is_finite() {
                    return Err(Error::NonFiniteScore { index: 0 });
                }
                let grads = tape.backward(loss)?;
                model.params.accumulate(&tape, &grads);
                adam.step(&mut model.params)?;
                Ok(value)
            })();
            match step {
                Ok(v) => total += v,
                Err(
                    cause @ (Error::NonFiniteScore { .. } | Error::NonFiniteGradient { .. } | Error::ZeroNorm { .. }),
                ) => {
                    return Err(TrainError::Diverged { epoch, cause, last_good: Box::new(best) });
                }
                Err(e) => return Err(e.into()),
            }
            batches += 1;
        }
        let loss = total / batches as f64;

        let due = config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == config.epochs);
        let eval = if due && !selection.is_empty() {
            let report = model.evaluate(graphs, selection, filter)?;
            Some(report.metrics)
        } else {
            None
        };
        match (eval, best_metrics) {
            (Some(m), Some(b)) if m.mrr <= b.mrr => since_best += 1,
            (Some(m), _) => {
                best = model.clone();
                best_epoch = epoch;
                best_metrics = Some(m);
                since_best = 0;
            }
            (None, None) => {
                best = model.clone();
                best_epoch = epoch;
            }
            (None, Some(_)) => {}
        }
        let record = EpochRecord { epoch, loss, eval };
        observe(&record);
        log.push(record);
        if config.patience.is_some_and(|p| since_best >= p) {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainOutcome { best, best_epoch, best_metrics, log, stopped_early })
}
