//! Coupled multi-view QGNN encoder.
//!
//! Every view runs its own graph convolution per layer,
//! `h'_v = g(Σ_u a_vu · W ⊗ h_u)`, on inputs assembled from the current
//! entity and relation representations. The new representation of an item is
//! the element-wise product of the outputs of all views that contain it; an
//! item absent from every view keeps its previous representation. For the
//! two-view model this gives `h_ef = h'_ef * h'_rf` for entities (with the
//! all-ones stand-in when the entity is not a relation-focused node) and
//! `h_r = h'_rf` for relations.
//!
//! Layer 0 applies the same rule with every view output equal to the shared
//! input embedding.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::Triple;
use crate::graph::{
    build_entity_focused, build_levi, build_relation_focused, extract_rf_constraints, filter_constraints, renormalize,
    NodeKind, RfConstraints, ViewGraph,
};
use crate::optim::{glorot_quaternion, glorot_real, ParamId, ParamStore};
use crate::quaternion::QuaternionVector;
use crate::sparse::CsrMatrix;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    /// Entity-focused and relation-focused QGNNs with coupling.
    TwoView,
    /// Two views with real GCN layers instead of QGNN layers.
    Gcn,
    EfOnly,
    RfOnly,
    /// A single Levi graph of entities and relations.
    Levi,
    /// Two views, but the relation-focused view keeps only relation nodes.
    RfNoPredicates,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::TwoView, Variant::Gcn, Variant::EfOnly, Variant::RfOnly, Variant::Levi, Variant::RfNoPredicates];

    pub const ABLATIONS: [Variant; 5] =
        [Variant::Gcn, Variant::EfOnly, Variant::RfOnly, Variant::Levi, Variant::RfNoPredicates];

    pub fn name(self) -> &'static str {
        match self {
            Variant::TwoView => "two-view",
            Variant::Gcn => "gcn",
            Variant::EfOnly => "ef-only",
            Variant::RfOnly => "rf-only",
            Variant::Levi => "levi",
            Variant::RfNoPredicates => "rf-no-predicates",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    fn uses_relation_view(self) -> bool {
        matches!(self, Variant::TwoView | Variant::Gcn | Variant::RfOnly | Variant::RfNoPredicates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Activation::Tanh, Activation::Relu].into_iter().find(|a| a.name() == name)
    }

    fn apply(self, tape: &mut Tape<'_>, x: Var) -> Var {
        match self {
            Activation::Tanh => tape.tanh(x),
            Activation::Relu => tape.relu(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    /// Number of graph layers `K`.
    pub layers: usize,
    /// Quaternions per representation, shared by the embeddings and all layers.
    pub dim: usize,
    pub variant: Variant,
    pub activation: Activation,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig("layers and dim must be positive".into()));
        }
        Ok(())
    }
}

/// A graph view together with its renormalized adjacency.
#[derive(Debug, Clone)]
pub struct View {
    pub name: &'static str,
    pub graph: ViewGraph,
    pub adjacency: CsrMatrix,
    entity_slots: Vec<Option<usize>>,
    relation_slots: Vec<Option<usize>>,
}

impl View {
    pub fn new(name: &'static str, graph: ViewGraph, num_entities: usize, num_relations: usize) -> Self {
        let adjacency = renormalize(&graph);
        let entity_slots = graph.entity_slots(num_entities);
        let relation_slots = graph.relation_slots(num_relations);
        Self { name, graph, adjacency, entity_slots, relation_slots }
    }

    pub fn is_empty(&self) -> bool {
        self.graph.num_nodes() == 0
    }

    /// `(source, row)` per node: source 0 is the entity table, 1 the relation table.
    pub fn input_picks(&self) -> Vec<(usize, usize)> {
        self.graph
            .nodes()
            .iter()
            .map(|n| match *n {
                NodeKind::Entity(e) => (0, e as usize),
                NodeKind::Relation(r) => (1, r as usize),
            })
            .collect()
    }

    fn is_entity_identity(&self) -> bool {
        self.graph.num_nodes() == self.entity_slots.len()
            && self.entity_slots.iter().enumerate().all(|(e, s)| *s == Some(e))
    }
}

/// The graph views used by one encoder variant.
#[derive(Debug, Clone)]
pub struct ModelGraphs {
    pub variant: Variant,
    pub views: Vec<View>,
    /// All extracted RF constraints and the β-filtered subset, when the variant
    /// has a relation-focused view.
    pub rf: Option<(RfConstraints, RfConstraints)>,
}

impl ModelGraphs {
    pub fn build(
        variant: Variant,
        num_entities: usize,
        num_relations: usize,
        train: &[Triple],
        beta: f64,
    ) -> Result<Self> {
        let mut views = Vec::new();
        let ef = || View::new("ef", build_entity_focused(num_entities, train), num_entities, num_relations);
        let mut rf = None;
        if matches!(variant, Variant::TwoView | Variant::Gcn | Variant::EfOnly | Variant::RfNoPredicates) {
            views.push(ef());
        }
        if variant.uses_relation_view() {
            let all = extract_rf_constraints(train);
            let kept = filter_constraints(&all, beta)?;
            let graph = build_relation_focused(&kept.constraints, variant != Variant::RfNoPredicates);
            views.push(View::new("rf", graph, num_entities, num_relations));
            rf = Some((all, kept));
        }
        if variant == Variant::Levi {
            views.push(View::new("levi", build_levi(num_entities, train), num_entities, num_relations));
        }
        Ok(Self { variant, views, rf })
    }
}

/// Tape handles for one layer of representations.
#[derive(Debug, Clone)]
pub struct LayerVars {
    pub entities: Var,
    pub relations: Var,
    /// Per-view outputs `h'` (the assembled inputs at layer 0), `None` for empty views.
    pub view_outputs: Vec<Option<Var>>,
}

/// Evaluated representations for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerReps {
    pub entities: Tensor,
    pub relations: Tensor,
    pub view_outputs: Vec<Option<Tensor>>,
}

/// Representations for layers `0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub layers: Vec<LayerReps>,
}

impl LayerState {
    pub fn from_tape(tape: &Tape<'_>, vars: &[LayerVars]) -> Self {
        let layers = vars
            .iter()
            .map(|l| LayerReps {
                entities: tape.value(l.entities).clone(),
                relations: tape.value(l.relations).clone(),
                view_outputs: l.view_outputs.iter().map(|v| v.map(|v| tape.value(v).clone())).collect(),
            })
            .collect();
        Self { layers }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn entity(&self, layer: usize, e: u32) -> QuaternionVector {
        self.layers[layer].entities.quaternion_row(e as usize)
    }

    pub fn relation(&self, layer: usize, r: u32) -> QuaternionVector {
        self.layers[layer].relations.quaternion_row(r as usize)
    }
}

/// Parameter handles of an encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub num_entities: usize,
    pub num_relations: usize,
    pub entity_embedding: ParamId,
    pub relation_embedding: ParamId,
    /// `weights[k][v]` transforms layer `k` into `k + 1` on view `v`.
    pub weights: Vec<Vec<ParamId>>,
}

pub const ENTITY_EMBEDDING: &str = "entity_embedding";
pub const RELATION_EMBEDDING: &str = "relation_embedding";

impl Encoder {
    /// Registers Glorot-initialized parameters in `store`.
    pub fn init<R: Rng + ?Sized>(
        config: EncoderConfig,
        graphs: &ModelGraphs,
        num_entities: usize,
        num_relations: usize,
        store: &mut ParamStore,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let entity_embedding = store.insert(ENTITY_EMBEDDING, glorot_quaternion(num_entities, d, rng));
        let relation_embedding = store.insert(RELATION_EMBEDDING, glorot_quaternion(num_relations, d, rng));
        let mut weights = Vec::with_capacity(config.layers);
        for k in 0..config.layers {
            let mut per_view = Vec::with_capacity(graphs.views.len());
            for view in &graphs.views {
                let name = alloc::format!("{}.w{}", view.name, k);
                let w = match graphs.variant {
                    Variant::Gcn => glorot_real(4 * d, 4 * d, rng),
                    _ => glorot_quaternion(d, d, rng),
                };
                per_view.push(store.insert(&name, w));
            }
            weights.push(per_view);
        }
        Ok(Self { config, num_entities, num_relations, entity_embedding, relation_embedding, weights })
    }

    /// Records the forward pass on `tape`, returning layers `0..=K`.
    pub fn forward<'g>(&self, tape: &mut Tape<'g>, store: &ParamStore, graphs: &'g ModelGraphs) -> Vec<LayerVars> {
        let d = self.config.dim;
        let ent0 = tape.param(self.entity_embedding, store.value(self.entity_embedding).clone());
        let rel0 = tape.param(self.relation_embedding, store.value(self.relation_embedding).clone());
        let ones = tape.constant(Tensor::filled(1, 4 * d, 1.0));

        let inputs0: Vec<Option<Var>> = graphs.views.iter().map(|v| assemble(tape, v, ent0, rel0)).collect();
        let mut layers = Vec::with_capacity(self.config.layers + 1);
        layers.push(self.combine(tape, graphs, &inputs0, ent0, rel0, ones));

        for k in 0..self.config.layers {
            let prev = layers.last().expect("layer 0 exists").clone();
            let outs: Vec<Option<Var>> = graphs
                .views
                .iter()
                .zip(&self.weights[k])
                .map(|(view, &w)| {
                    let x = assemble(tape, view, prev.entities, prev.relations)?;
                    let wv = tape.param(w, store.value(w).clone());
                    Some(conv(tape, &view.adjacency, x, wv, graphs.variant, self.config.activation))
                })
                .collect();
            layers.push(self.combine(tape, graphs, &outs, prev.entities, prev.relations, ones));
        }
        layers
    }

    fn combine(
        &self,
        tape: &mut Tape<'_>,
        graphs: &ModelGraphs,
        outs: &[Option<Var>],
        prev_entities: Var,
        prev_relations: Var,
        ones: Var,
    ) -> LayerVars {
        let entity_sources: Vec<(Var, &[Option<usize>], bool)> = graphs
            .views
            .iter()
            .zip(outs)
            .filter_map(|(v, o)| o.map(|o| (o, v.entity_slots.as_slice(), v.is_entity_identity())))
            .collect();
        let relation_sources: Vec<(Var, &[Option<usize>], bool)> = graphs
            .views
            .iter()
            .zip(outs)
            .filter_map(|(v, o)| o.map(|o| (o, v.relation_slots.as_slice(), false)))
            .collect();
        LayerVars {
            entities: product_or_keep(tape, &entity_sources, prev_entities, ones, self.num_entities),
            relations: product_or_keep(tape, &relation_sources, prev_relations, ones, self.num_relations),
            view_outputs: outs.to_vec(),
        }
    }

    /// Forward pass outside of training.
    pub fn encode(&self, store: &ParamStore, graphs: &ModelGraphs) -> LayerState {
        let mut tape = Tape::new();
        let vars = self.forward(&mut tape, store, graphs);
        LayerState::from_tape(&tape, &vars)
    }
}

fn assemble(tape: &mut Tape<'_>, view: &View, entities: Var, relations: Var) -> Option<Var> {
    if view.is_empty() {
        return None;
    }
    if view.is_entity_identity() {
        return Some(entities);
    }
    Some(tape.select_rows(&[entities, relations], view.input_picks()))
}

fn conv<'g>(tape: &mut Tape<'g>, adj: &'g CsrMatrix, x: Var, w: Var, variant: Variant, activation: Activation) -> Var {
    let agg = tape.spmm(adj, x);
    let lin = match variant {
        Variant::Gcn => tape.linear(agg, w),
        _ => tape.quat_linear(agg, w),
    };
    activation.apply(tape, lin)
}

/// Row `i` is the product of `out[slot_i]` over the sources containing `i`,
/// or row `i` of `prev` when no source does.
fn product_or_keep(
    tape: &mut Tape<'_>,
    sources: &[(Var, &[Option<usize>], bool)],
    prev: Var,
    ones: Var,
    count: usize,
) -> Var {
    let mut acc: Option<Var> = None;
    let mut covered = vec![false; count];
    for &(out, slots, identity) in sources {
        if slots.iter().all(Option::is_none) {
            continue;
        }
        let factor = if identity {
            out
        } else {
            let picks = slots.iter().map(|s| s.map_or((1, 0), |n| (0, n))).collect();
            tape.select_rows(&[out, ones], picks)
        };
        for (c, s) in covered.iter_mut().zip(slots) {
            *c |= s.is_some();
        }
        acc = Some(match acc {
            None => factor,
            Some(a) => tape.mul(a, factor),
        });
    }
    match acc {
        None => prev,
        Some(a) if covered.iter().all(|&c| c) => a,
        Some(a) => {
            let picks = covered.iter().enumerate().map(|(i, &c)| if c { (0, i) } else { (1, i) }).collect();
            tape.select_rows(&[a, prev], picks)
        }
    }
}

/// One QGNN layer: `tanh(W ⊗ Σ_u a_vu h_u)` per node.
pub fn qgnn_layer(adj: &CsrMatrix, inputs: &Tensor, weights: &Tensor) -> Result<Tensor> {
    if inputs.rows() != adj.dim() {
        return Err(Error::ShapeMismatch { expected: (adj.dim(), inputs.cols()), got: inputs.shape() });
    }
    if weights.cols() != inputs.cols() {
        return Err(Error::ShapeMismatch { expected: (weights.rows(), inputs.cols()), got: weights.shape() });
    }
    let mut tape = Tape::new();
    let x = tape.constant(inputs.clone());
    let w = tape.constant(weights.clone());
    let y = conv(&mut tape, adj, x, w, Variant::TwoView, Activation::Tanh);
    Ok(tape.value(y).clone())
}

/// One real GCN layer: `g(W · Σ_u a_vu h_u)` per node.
pub fn gcn_layer(adj: &CsrMatrix, inputs: &Tensor, weights: &Tensor, activation: Activation) -> Result<Tensor> {
    if inputs.rows() != adj.dim() || weights.cols() != inputs.cols() {
        return Err(Error::ShapeMismatch { expected: (adj.dim(), weights.cols()), got: inputs.shape() });
    }
    let mut tape = Tape::new();
    let x = tape.constant(inputs.clone());
    let w = tape.constant(weights.clone());
    let y = conv(&mut tape, adj, x, w, Variant::Gcn, activation);
    Ok(tape.value(y).clone())
}

/// Entity coupling `h_ef = h'_ef * h'_rf`; an absent relation-focused side acts as all-ones.
pub fn couple_entity(ef: &QuaternionVector, rf: Option<&QuaternionVector>) -> Result<QuaternionVector> {
    match rf {
        Some(rf) => ef.elementwise(rf),
        None => Ok(ef.clone()),
    }
}

/// Relation-focused inputs: coupled entity rows for entity nodes, relation rows for relation nodes.
pub fn assemble_rf_inputs(view: &ViewGraph, entities: &Tensor, relations: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(view.num_nodes(), entities.cols());
    for (n, kind) in view.nodes().iter().enumerate() {
        let src = match *kind {
            NodeKind::Entity(e) => entities.row(e as usize),
            NodeKind::Relation(r) => relations.row(r as usize),
        };
        out.row_mut(n).copy_from_slice(src);
    }
    out
}
