//! Two-view quaternion graph neural network for knowledge graph completion.
//!
//! A knowledge graph of `(head, relation, tail)` facts is turned into two
//! undirected graphs: an entity-focused view whose nodes are entities, and a
//! relation-focused view built from frequent `(subject relation, predicate
//! entity, object relation)` patterns. Two quaternion GCN stacks run on the
//! views with element-wise coupling of the entity representations, and each
//! layer is scored with a QuatE decoder; the final triple score is a fixed
//! weighted sum across layers.
//!
//! The crate is `no_std` (with `alloc`) so it carries no IO. Loading TSV
//! files, checkpoints and the command-line driver live in the `wge` crate.
//!
//! Module map:
//!
//! - [`quaternion`]: scalar, vector and matrix quaternion algebra.
//! - [`tensor`], [`sparse`]: dense real matrices and CSR adjacency.
//! - [`tape`], [`optim`]: reverse-mode differentiation, Adam, Glorot init.
//! - [`dataset`]: vocabularies, triple stores, negative sampling, filters.
//! - [`graph`]: entity-focused, relation-focused and Levi views.
//! - [`encoder`]: the coupled two-view QGNN stack and its ablations.
//! - [`decoder`], [`train`]: layer-weighted QuatE scoring, loss, training.
//! - [`eval`]: filtered ranking with MRR and Hits@k.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod dataset;
pub mod decoder;
pub mod encoder;
mod error;
pub mod eval;
pub mod graph;
pub mod optim;
pub mod quaternion;
pub mod sparse;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
