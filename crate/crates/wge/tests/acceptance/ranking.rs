use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wge_core::dataset::{Corrupt, FilterIndex, Triple};
use wge_core::encoder::{ModelGraphs, Variant};
use wge_core::eval::{evaluate, score_triple, CandidateScorer, LayerScorer};
use wge_core::train::{Model, TrainConfig};
use wge_core::Result;

use crate::{check, Status};

const ENTITIES: usize = 100;
const RELATIONS: usize = 4;

/// Scores drawn from five levels, so most queries have ties.
struct TableScorer {
    table: Vec<f64>,
}

impl TableScorer {
    fn score(&self, t: Triple) -> f64 {
        self.table[(t.relation as usize * ENTITIES + t.head as usize) * ENTITIES + t.tail as usize]
    }
}

fn with_side(t: Triple, side: Corrupt, e: u32) -> Triple {
    match side {
        Corrupt::Head => Triple::new(e, t.relation, t.tail),
        Corrupt::Tail => Triple::new(t.head, t.relation, e),
    }
}

impl CandidateScorer for TableScorer {
    fn num_entities(&self) -> usize {
        ENTITIES
    }

    fn score_candidates(&self, t: Triple, side: Corrupt, out: &mut [f64]) -> Result<()> {
        for (e, o) in out.iter_mut().enumerate() {
            *o = self.score(with_side(t, side, e as u32));
        }
        Ok(())
    }
}

/// Sorts the surviving candidates and averages the positions sharing the gold score.
fn sorted_rank(scores: &[f64], gold: u32, t: Triple, side: Corrupt, known: &BTreeSet<Triple>) -> f64 {
    let mut kept: Vec<f64> = (0..ENTITIES as u32)
        .filter(|&e| e == gold || !known.contains(&with_side(t, side, e)))
        .map(|e| scores[e as usize])
        .collect();
    kept.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let g = scores[gold as usize];
    let first = kept.iter().position(|&s| s == g).expect("gold present");
    let last = kept.iter().rposition(|&s| s == g).expect("gold present");
    (first + 1 + last + 1) as f64 / 2.0
}

/// Compares `evaluate` with the sort oracle; returns the query count, tied queries and mismatches.
fn compare(scorer: &impl CandidateScorer, triples: &[Triple], known: &BTreeSet<Triple>) -> (usize, usize, usize) {
    let filter = FilterIndex::new(ENTITIES, known);
    let report = evaluate(scorer, triples, &filter).expect("evaluate");
    let mut scores = vec![0.0; ENTITIES];
    let (mut tied, mut mismatches) = (0, 0);
    let mut oracle = Vec::new();
    for q in &report.ranks {
        scorer.score_candidates(q.triple, q.side, &mut scores).expect("scores");
        let gold = q.side.gold(q.triple);
        let expected = sorted_rank(&scores, gold, q.triple, q.side, known);
        if expected.fract() != 0.0 || scores.iter().filter(|&&s| s == scores[gold as usize]).count() > 1 {
            tied += 1;
        }
        if q.rank != expected {
            mismatches += 1;
        }
        oracle.push(expected);
    }
    let expected_queries: Vec<(Triple, Corrupt)> =
        triples.iter().flat_map(|&t| [(t, Corrupt::Tail), (t, Corrupt::Head)]).collect();
    let got_queries: Vec<(Triple, Corrupt)> = report.ranks.iter().map(|q| (q.triple, q.side)).collect();
    if got_queries != expected_queries {
        mismatches += 1;
    }
    let n = oracle.len() as f64;
    let m = report.metrics;
    let mrr = oracle.iter().map(|r| 1.0 / r).sum::<f64>() / n;
    let hits = |k: f64| oracle.iter().filter(|&&r| r <= k).count() as f64 / n;
    if (m.mrr - mrr).abs() > 1e-12 || m.hits1 != hits(1.0) || m.hits3 != hits(3.0) || m.hits10 != hits(10.0) {
        mismatches += 1;
    }
    (report.ranks.len(), tied, mismatches)
}

pub fn criterion() -> Status {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let random_triple = |rng: &mut ChaCha8Rng| {
        Triple::new(
            rng.gen_range(0..ENTITIES as u32),
            rng.gen_range(0..RELATIONS as u32),
            rng.gen_range(0..ENTITIES as u32),
        )
    };
    let known: BTreeSet<Triple> = (0..1500).map(|_| random_triple(&mut rng)).collect();
    let all: Vec<Triple> = known.iter().copied().collect();
    let test: Vec<Triple> = all.iter().step_by(7).copied().collect();
    let train: Vec<Triple> = all.iter().copied().filter(|t| !test.contains(t)).collect();

    let table =
        TableScorer { table: (0..RELATIONS * ENTITIES * ENTITIES).map(|_| rng.gen_range(0..5) as f64).collect() };
    let (queries, tied, table_bad) = compare(&table, &test, &known);

    let config = TrainConfig { layers: 1, dim: 4, seed: 4, ..TrainConfig::default() };
    let graphs = ModelGraphs::build(Variant::TwoView, ENTITIES, RELATIONS, &train, config.beta).expect("graphs");
    let model = Model::init(&config, &graphs, ENTITIES, RELATIONS).expect("model");
    let state = model.encode(&graphs);
    let scorer = LayerScorer::new(&state, &model.weights).expect("scorer");
    let (model_queries, _, model_bad) = compare(&scorer, &test, &known);
    let mut scores = vec![0.0; ENTITIES];
    let mut score_gap = 0.0f64;
    for &t in &test {
        for side in [Corrupt::Tail, Corrupt::Head] {
            scorer.score_candidates(t, side, &mut scores).expect("scores");
            for (e, &s) in scores.iter().enumerate() {
                let direct = score_triple(&state, &model.weights, with_side(t, side, e as u32)).expect("score");
                score_gap = score_gap.max((s - direct).abs());
            }
        }
    }

    let ok = table_bad == 0 && model_bad == 0 && tied > queries / 2 && score_gap < 1e-12;
    let detail = format!(
        "{ENTITIES} entities, {} known triples; tie-heavy table scorer: {queries} queries ({tied} with ties), {table_bad} mismatches; \
         model scorer: {model_queries} queries, {model_bad} mismatches, batched vs direct score gap {score_gap:.1e}",
        known.len()
    );
    check(ok, detail)
}
