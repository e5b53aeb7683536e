//! Graph views of a knowledge graph and their renormalized adjacency.
//!
//! - The entity-focused view has one node per entity and an edge `{h, t}` for
//!   every training triple.
//! - The relation-focused view is built from RF constraints
//!   `(r_s, e_p, r_o)`: `e_p` is the tail of some `r_s` fact and the head of
//!   some `r_o` fact. Only constraints whose `(r_s, r_o)` pair is among the
//!   most frequent fraction `β` of pairs are kept, and each kept constraint
//!   contributes the triangle `r_s – e_p – r_o`.
//! - The Levi view has entity and relation nodes with edges `{h, r}` and
//!   `{r, t}` per triple.
//!
//! Adjacency is binary and has no raw self-loops; [`renormalize`] adds the
//! identity and applies `D̃^{-1/2} (A + I) D̃^{-1/2}`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Triple;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Entity(u32),
    Relation(u32),
}

/// An undirected graph over vocabulary items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewGraph {
    nodes: Vec<NodeKind>,
    index: BTreeMap<NodeKind, usize>,
    edges: BTreeSet<(usize, usize)>,
}

impl ViewGraph {
    fn with_nodes(nodes: Vec<NodeKind>) -> Self {
        let index = nodes.iter().enumerate().map(|(n, k)| (*k, n)).collect();
        Self { nodes, index, edges: BTreeSet::new() }
    }

    fn connect(&mut self, a: NodeKind, b: NodeKind) {
        let (u, v) = (self.index[&a], self.index[&b]);
        if u != v {
            self.edges.insert((u.min(v), u.max(v)));
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    /// Local index of a vocabulary item, if it is a node of this view.
    pub fn node_index(&self, kind: NodeKind) -> Option<usize> {
        self.index.get(&kind).copied()
    }

    /// Undirected edges as `(u, v)` local indices with `u < v`.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    /// Edges as vocabulary items, in the same order as [`Self::edges`].
    pub fn edge_kinds(&self) -> impl Iterator<Item = (NodeKind, NodeKind)> + '_ {
        self.edges.iter().map(|&(u, v)| (self.nodes[u], self.nodes[v]))
    }

    pub fn has_edge(&self, a: NodeKind, b: NodeKind) -> bool {
        match (self.node_index(a), self.node_index(b)) {
            (Some(u), Some(v)) => self.edges.contains(&(u.min(v), u.max(v))),
            _ => false,
        }
    }

    /// For each of `count` entity ids, its local index if present.
    pub fn entity_slots(&self, count: usize) -> Vec<Option<usize>> {
        (0..count as u32).map(|e| self.node_index(NodeKind::Entity(e))).collect()
    }

    pub fn relation_slots(&self, count: usize) -> Vec<Option<usize>> {
        (0..count as u32).map(|r| self.node_index(NodeKind::Relation(r))).collect()
    }
}

/// One node per entity (including entities isolated in `train`), one edge per
/// non-reflexive triple.
pub fn build_entity_focused(num_entities: usize, train: &[Triple]) -> ViewGraph {
    let mut g = ViewGraph::with_nodes((0..num_entities as u32).map(NodeKind::Entity).collect());
    for t in train {
        g.connect(NodeKind::Entity(t.head), NodeKind::Entity(t.tail));
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RfConstraint {
    pub subject: u32,
    pub predicate: u32,
    pub object: u32,
}

/// Distinct RF constraints and, per `(subject, object)` relation pair, the
/// number of constraints carrying it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RfConstraints {
    pub constraints: Vec<RfConstraint>,
    pub pair_counts: BTreeMap<(u32, u32), usize>,
}

impl RfConstraints {
    pub fn num_pairs(&self) -> usize {
        self.pair_counts.len()
    }

    /// Pairs by descending count, ties by ascending `(subject, object)`.
    pub fn ranked_pairs(&self) -> Vec<((u32, u32), usize)> {
        let mut pairs: Vec<_> = self.pair_counts.iter().map(|(p, c)| (*p, *c)).collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        pairs
    }
}

pub fn extract_rf_constraints(train: &[Triple]) -> RfConstraints {
    let mut incoming: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    let mut outgoing: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for t in train {
        incoming.entry(t.tail).or_default().insert(t.relation);
        outgoing.entry(t.head).or_default().insert(t.relation);
    }
    let mut constraints = Vec::new();
    let mut pair_counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (&entity, subjects) in &incoming {
        let Some(objects) = outgoing.get(&entity) else { continue };
        for &subject in subjects {
            for &object in objects {
                constraints.push(RfConstraint { subject, predicate: entity, object });
                *pair_counts.entry((subject, object)).or_default() += 1;
            }
        }
    }
    constraints.sort_unstable();
    RfConstraints { constraints, pair_counts }
}

/// Number of pairs kept for fraction `beta` out of `pairs`.
pub fn kept_pair_count(beta: f64, pairs: usize) -> usize {
    // Absorb representation error so that e.g. 0.1 * 30 keeps 3, not 4.
    let raw = libm::ceil(beta * pairs as f64 - 1e-9);
    (raw.max(0.0) as usize).min(pairs)
}

/// Keeps every constraint whose relation pair ranks in the top `⌈β·#pairs⌉`.
pub fn filter_constraints(rf: &RfConstraints, beta: f64) -> Result<RfConstraints> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidConfig(alloc::format!("beta must lie in (0, 1], got {beta}")));
    }
    let keep = kept_pair_count(beta, rf.num_pairs());
    let pair_counts: BTreeMap<(u32, u32), usize> = rf.ranked_pairs().into_iter().take(keep).collect();
    let constraints =
        rf.constraints.iter().filter(|c| pair_counts.contains_key(&(c.subject, c.object))).copied().collect();
    Ok(RfConstraints { constraints, pair_counts })
}

/// Relation nodes (ascending id) then predicate-entity nodes (ascending id),
/// with the triangle `{r_s, e_p}, {e_p, r_o}, {r_s, r_o}` per constraint.
/// With `with_predicates == false` only relation nodes and `{r_s, r_o}` edges
/// are produced.
pub fn build_relation_focused(kept: &[RfConstraint], with_predicates: bool) -> ViewGraph {
    let relations: BTreeSet<u32> = kept.iter().flat_map(|c| [c.subject, c.object]).collect();
    let mut nodes: Vec<NodeKind> = relations.into_iter().map(NodeKind::Relation).collect();
    if with_predicates {
        let preds: BTreeSet<u32> = kept.iter().map(|c| c.predicate).collect();
        nodes.extend(preds.into_iter().map(NodeKind::Entity));
    }
    let mut g = ViewGraph::with_nodes(nodes);
    for c in kept {
        let (s, o) = (NodeKind::Relation(c.subject), NodeKind::Relation(c.object));
        g.connect(s, o);
        if with_predicates {
            let p = NodeKind::Entity(c.predicate);
            g.connect(s, p);
            g.connect(p, o);
        }
    }
    g
}

/// All entities, then every relation that occurs in `train`; edges `{h, r}` and `{r, t}`.
pub fn build_levi(num_entities: usize, train: &[Triple]) -> ViewGraph {
    let relations: BTreeSet<u32> = train.iter().map(|t| t.relation).collect();
    let nodes =
        (0..num_entities as u32).map(NodeKind::Entity).chain(relations.into_iter().map(NodeKind::Relation)).collect();
    let mut g = ViewGraph::with_nodes(nodes);
    for t in train {
        let r = NodeKind::Relation(t.relation);
        g.connect(NodeKind::Entity(t.head), r);
        g.connect(r, NodeKind::Entity(t.tail));
    }
    g
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃` the row sums of `A + I`.
pub fn renormalize(view: &ViewGraph) -> CsrMatrix {
    let n = view.num_nodes();
    let mut degree = vec![1.0f64; n];
    for &(u, v) in view.edges() {
        degree[u] += 1.0;
        degree[v] += 1.0;
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / libm::sqrt(*d)).collect();
    let mut entries = Vec::with_capacity(n + 2 * view.edges().len());
    for (u, s) in inv_sqrt.iter().enumerate() {
        entries.push((u, u, s * s));
    }
    for &(u, v) in view.edges() {
        let a = inv_sqrt[u] * inv_sqrt[v];
        entries.push((u, v, a));
        entries.push((v, u, a));
    }
    CsrMatrix::from_triplets(n, entries)
}
