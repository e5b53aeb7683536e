use std::path::Path;
use std::time::{Duration, Instant};

use wge::config::RunConfig;
use wge::data::Dataset;
use wge_core::dataset::Split;
use wge_core::encoder::ModelGraphs;
use wge_core::train::train;

use crate::{check, within, Status};

const MIN_MRR: f64 = 0.95;

pub fn criterion() -> Status {
    let started = Instant::now();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut cfg = RunConfig::default();
    cfg.apply_file(&fixtures.join("toy.conf")).expect("toy config");
    let data = Dataset::load(&fixtures.join("toy")).expect("toy dataset");
    let t = &cfg.train;
    let setup_ok = data.store.train().len() == 20 && t.dim == 16 && t.layers == 1 && t.epochs <= 500;
    let graphs = ModelGraphs::build(t.variant, data.num_entities(), data.num_relations(), data.store.train(), t.beta)
        .expect("graphs");
    let filter = data.filter();
    let outcome =
        train(t, &data.store, data.num_entities(), data.num_relations(), &graphs, &filter, |_| {}).expect("training");
    let m = outcome.best.evaluate(&graphs, data.store.split(Split::Train), &filter).expect("evaluate").metrics;
    let detail = format!(
        "{} train triples, dim {}, {} layer, {} epochs: filtered train MRR {:.4} (>= {MIN_MRR}), Hits@1 {:.4}, best epoch {}",
        data.store.train().len(),
        t.dim,
        t.layers,
        outcome.log.len(),
        m.mrr,
        m.hits1,
        outcome.best_epoch
    );
    within(check(setup_ok && m.mrr >= MIN_MRR, detail), started.elapsed(), Duration::from_secs(60))
}
