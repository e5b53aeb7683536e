//! Plain-text dumps of the vocabulary, graph views and relation-pair statistics.

use std::fmt::Write as _;

use wge_core::dataset::Vocab;
use wge_core::graph::{kept_pair_count, NodeKind, RfConstraints, ViewGraph};

/// `id<TAB>label` per line.
pub fn labels_tsv(labels: &[String]) -> String {
    let mut out = String::new();
    for (id, l) in labels.iter().enumerate() {
        let _ = writeln!(out, "{id}\t{l}");
    }
    out
}

pub fn node_name(kind: NodeKind) -> String {
    match kind {
        NodeKind::Entity(e) => format!("E:{e}"),
        NodeKind::Relation(r) => format!("R:{r}"),
    }
}

/// One undirected edge per line, as node ids `E:<id>` or `R:<id>`.
pub fn edges_tsv(graph: &ViewGraph) -> String {
    let mut out = String::new();
    for (u, v) in graph.edge_kinds() {
        let _ = writeln!(out, "{}\t{}", node_name(u), node_name(v));
    }
    out
}

/// `subject<TAB>object<TAB>constraints<TAB>kept` per relation pair, ranked by count.
pub fn rf_pairs_tsv(all: &RfConstraints, kept: &RfConstraints, vocab: &Vocab) -> String {
    let mut out = String::from("subject\tobject\tconstraints\tkept\n");
    for ((s, o), count) in all.ranked_pairs() {
        let k = kept.pair_counts.contains_key(&(s, o));
        let _ = writeln!(out, "{}\t{}\t{count}\t{k}", vocab.relation_label(s), vocab.relation_label(o));
    }
    out
}

/// Number of pairs retained for `beta`, for reporting.
pub fn pairs_kept(beta: f64, all: &RfConstraints) -> usize {
    kept_pair_count(beta, all.num_pairs())
}
