use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wge_core::dataset::Triple;
use wge_core::graph::{
    build_entity_focused, build_levi, build_relation_focused, extract_rf_constraints, filter_constraints, renormalize,
    NodeKind, RfConstraint, ViewGraph,
};

use crate::{check, Status};

type Edge = (NodeKind, NodeKind);

fn edge(a: NodeKind, b: NodeKind) -> Edge {
    (a.min(b), a.max(b))
}

/// Hand-picked shapes plus random KGs with 1 to 10 triples.
fn fixture_suite() -> Vec<(usize, usize, Vec<Triple>)> {
    let t = |h, r, t| Triple::new(h, r, t);
    let mut suite = vec![
        (1, 1, vec![t(0, 0, 0)]),
        (2, 1, vec![t(0, 0, 1)]),
        (3, 2, vec![t(0, 0, 1), t(1, 1, 2)]),
        (3, 1, vec![t(0, 0, 1), t(1, 0, 2), t(2, 0, 0)]),
        (4, 3, vec![t(0, 0, 3), t(1, 1, 3), t(2, 2, 3), t(3, 0, 0), t(3, 1, 1)]),
        (5, 2, vec![t(0, 0, 1), t(0, 0, 1), t(1, 1, 0), t(1, 1, 2), t(2, 0, 3), t(3, 1, 4)]),
        (6, 4, (0..10).map(|n| t(n % 6, n % 4, (n * 5 + 1) % 6)).collect()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let (ne, nr) = (rng.gen_range(1..=6usize), rng.gen_range(1..=4usize));
        let n = rng.gen_range(1..=10);
        let triples = (0..n)
            .map(|_| t(rng.gen_range(0..ne) as u32, rng.gen_range(0..nr) as u32, rng.gen_range(0..ne) as u32))
            .collect();
        suite.push((ne, nr, triples));
    }
    suite
}

fn edges_of(g: &ViewGraph) -> BTreeSet<Edge> {
    g.edge_kinds().map(|(a, b)| edge(a, b)).collect()
}

fn oracle_entity_edges(ne: usize, kg: &[Triple]) -> BTreeSet<Edge> {
    let mut out = BTreeSet::new();
    for a in 0..ne as u32 {
        for b in a + 1..ne as u32 {
            if kg.iter().any(|t| (t.head, t.tail) == (a, b) || (t.head, t.tail) == (b, a)) {
                out.insert(edge(NodeKind::Entity(a), NodeKind::Entity(b)));
            }
        }
    }
    out
}

fn oracle_constraints(ne: usize, nr: usize, kg: &[Triple]) -> BTreeSet<RfConstraint> {
    let mut out = BTreeSet::new();
    for subject in 0..nr as u32 {
        for predicate in 0..ne as u32 {
            for object in 0..nr as u32 {
                let into = kg.iter().any(|t| t.relation == subject && t.tail == predicate);
                let out_of = kg.iter().any(|t| t.relation == object && t.head == predicate);
                if into && out_of {
                    out.insert(RfConstraint { subject, predicate, object });
                }
            }
        }
    }
    out
}

fn oracle_pair_counts(constraints: &BTreeSet<RfConstraint>) -> BTreeMap<(u32, u32), usize> {
    let mut out = BTreeMap::new();
    for c in constraints {
        *out.entry((c.subject, c.object)).or_insert(0) += 1;
    }
    out
}

/// Pairs that fewer than `keep` other pairs outrank (higher count, or equal count and smaller pair).
fn oracle_kept_pairs(counts: &BTreeMap<(u32, u32), usize>, keep: usize) -> BTreeSet<(u32, u32)> {
    counts
        .iter()
        .filter(|(p, c)| counts.iter().filter(|(q, d)| d > c || (d == c && q < p)).count() < keep)
        .map(|(p, _)| *p)
        .collect()
}

fn oracle_rf_graph(kept: &BTreeSet<RfConstraint>, with_predicates: bool) -> (BTreeSet<NodeKind>, BTreeSet<Edge>) {
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for c in kept {
        let mut members = vec![NodeKind::Relation(c.subject), NodeKind::Relation(c.object)];
        if with_predicates {
            members.push(NodeKind::Entity(c.predicate));
        }
        nodes.extend(members.iter().copied());
        for &a in &members {
            for &b in &members {
                if a != b {
                    edges.insert(edge(a, b));
                }
            }
        }
    }
    (nodes, edges)
}

fn oracle_levi(ne: usize, kg: &[Triple]) -> (BTreeSet<NodeKind>, BTreeSet<Edge>) {
    let mut nodes: BTreeSet<NodeKind> = (0..ne as u32).map(NodeKind::Entity).collect();
    let mut edges = BTreeSet::new();
    for r in kg.iter().map(|t| t.relation).collect::<BTreeSet<_>>() {
        nodes.insert(NodeKind::Relation(r));
        for e in 0..ne as u32 {
            if kg.iter().any(|t| t.relation == r && (t.head == e || t.tail == e)) {
                edges.insert(edge(NodeKind::Entity(e), NodeKind::Relation(r)));
            }
        }
    }
    (nodes, edges)
}

/// Dense `D^{-1/2} (A + I) D^{-1/2}` from an edge set, in the view's node order.
fn oracle_adjacency(g: &ViewGraph, edges: &BTreeSet<Edge>) -> Vec<f64> {
    let n = g.num_nodes();
    let mut a = vec![0.0; n * n];
    for u in 0..n {
        a[u * n + u] = 1.0;
    }
    for &(x, y) in edges {
        let (u, v) = (g.node_index(x).expect("node"), g.node_index(y).expect("node"));
        a[u * n + v] = 1.0;
        a[v * n + u] = 1.0;
    }
    let inv: Vec<f64> = (0..n).map(|u| 1.0 / (0..n).map(|v| a[u * n + v]).sum::<f64>().sqrt()).collect();
    (0..n * n).map(|at| if a[at] == 0.0 { 0.0 } else { a[at] * inv[at / n] * inv[at % n] }).collect()
}

fn same_adjacency(g: &ViewGraph, edges: &BTreeSet<Edge>) -> bool {
    renormalize(g).to_dense().data() == oracle_adjacency(g, edges).as_slice()
}

/// First mismatch found for one KG, if any.
fn check_kg(ne: usize, nr: usize, kg: &[Triple]) -> Option<String> {
    let ef = build_entity_focused(ne, kg);
    let ef_nodes: Vec<NodeKind> = (0..ne as u32).map(NodeKind::Entity).collect();
    let ef_edges = oracle_entity_edges(ne, kg);
    if ef.nodes() != ef_nodes.as_slice() || edges_of(&ef) != ef_edges {
        return Some("entity-focused edges".into());
    }
    if !same_adjacency(&ef, &ef_edges) {
        return Some("entity-focused adjacency".into());
    }

    let all = extract_rf_constraints(kg);
    let constraints = oracle_constraints(ne, nr, kg);
    let counts = oracle_pair_counts(&constraints);
    if all.constraints.iter().copied().collect::<BTreeSet<_>>() != constraints
        || all.constraints.len() != constraints.len()
        || all.pair_counts != counts
    {
        return Some("RF constraints".into());
    }

    for tenths in 1..=10usize {
        let kept = filter_constraints(&all, tenths as f64 / 10.0).expect("beta in range");
        let keep = (tenths * counts.len()).div_ceil(10);
        let pairs = oracle_kept_pairs(&counts, keep);
        let expected: BTreeSet<RfConstraint> =
            constraints.iter().filter(|c| pairs.contains(&(c.subject, c.object))).copied().collect();
        if kept.constraints.iter().copied().collect::<BTreeSet<_>>() != expected
            || kept.pair_counts.keys().copied().collect::<BTreeSet<_>>() != pairs
        {
            return Some(format!("beta={} filtered set", tenths as f64 / 10.0));
        }
        for with_predicates in [true, false] {
            let rf = build_relation_focused(&kept.constraints, with_predicates);
            let (nodes, edges) = oracle_rf_graph(&expected, with_predicates);
            if rf.nodes().iter().copied().collect::<BTreeSet<_>>() != nodes
                || rf.nodes().len() != nodes.len()
                || edges_of(&rf) != edges
            {
                return Some(format!("relation-focused graph, beta={}", tenths as f64 / 10.0));
            }
            if !same_adjacency(&rf, &edges) {
                return Some("relation-focused adjacency".into());
            }
        }
    }

    let levi = build_levi(ne, kg);
    let (nodes, edges) = oracle_levi(ne, kg);
    if levi.nodes().iter().copied().collect::<BTreeSet<_>>() != nodes
        || levi.nodes().len() != nodes.len()
        || edges_of(&levi) != edges
    {
        return Some("Levi graph".into());
    }
    if !same_adjacency(&levi, &edges) {
        return Some("Levi adjacency".into());
    }
    None
}

pub fn criterion() -> Status {
    let suite = fixture_suite();
    let failures: Vec<String> = suite
        .iter()
        .enumerate()
        .filter_map(|(n, (ne, nr, kg))| check_kg(*ne, *nr, kg).map(|what| format!("KG #{n}: {what}")))
        .collect();
    let detail = if failures.is_empty() {
        format!("{} KGs with <= 10 triples, betas 0.1..1.0, all views and adjacencies match exactly", suite.len())
    } else {
        format!("{} of {} KGs differ; first: {}", failures.len(), suite.len(), failures[0])
    };
    check(failures.is_empty(), detail)
}
